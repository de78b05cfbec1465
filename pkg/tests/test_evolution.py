"""
Tests for Crank-Nicolson propagation and the ground-state solver.
"""
import numpy as np
import pytest
import scipy.linalg
from pydantic import ValidationError

from ibcsim.components.assembly import assemble, assemble_radial_creation
from ibcsim.components.coefficients import CoefficientSet
from ibcsim.components.evolution import (
    CrankNicolsonPropagator,
    EvolutionConfig,
    MultiSectorState,
    energy,
    ground_state,
    step_crank_nicolson,
)
from ibcsim.components.types import NonHermitianError, StructuralError

UNIT = CoefficientSet(1.0, 0.0, 0.0, -1.0)


def _packet_model(point_halfline):
    return assemble(point_halfline(UNIT, h=0.05, length=20.0))


def _packet(dh):
    return MultiSectorState.gaussian(dh, 1, [4.0], 0.7, [-1.0])


def test_state_basics(point_halfline):
    dh = _packet_model(point_halfline)
    state = _packet(dh)
    assert state.norm_squared(dh.W) == pytest.approx(1.0)
    assert state.overlap(state, dh.W) == pytest.approx(1.0)
    assert np.array_equal(state.conjugate().amplitudes, state.amplitudes.conj())
    again = MultiSectorState.from_dict(state.to_dict())
    assert np.array_equal(again.amplitudes, state.amplitudes)
    with pytest.raises(StructuralError):
        MultiSectorState(np.full(3, np.nan))
    with pytest.raises(StructuralError):
        MultiSectorState.gaussian(dh, 1, [4.0, 0.0], 0.7)


def test_indicator_state(point_halfline):
    dh = _packet_model(point_halfline)
    state = MultiSectorState.indicator(dh, 0)
    assert state.amplitudes[0] == 1.0
    assert not np.any(state.amplitudes[1:])


def test_evolution_config():
    assert EvolutionConfig(dt=0.01, steps=10).solver_tol == 1e-12
    with pytest.raises(ValidationError):
        EvolutionConfig(dt=0.0, steps=10)
    with pytest.raises(ValidationError):
        EvolutionConfig(dt=0.1, steps=0)


def test_zero_step_is_identity(point_halfline):
    dh = _packet_model(point_halfline)
    state = _packet(dh)
    after = CrankNicolsonPropagator(dh, 0.0).step(state)
    assert np.array_equal(after.amplitudes, state.amplitudes)
    assert after.time == state.time


def test_eigenvector_phase(point_halfline):
    dh = assemble(point_halfline(UNIT, h=0.1, length=4.0))
    root = np.sqrt(dh.W)
    A = (root[:, None] * dh.H.toarray()) / root[None, :]
    values, vectors = scipy.linalg.eigh((A + A.conj().T) / 2)
    E, psi = values[3], vectors[:, 3] / root

    dt = 0.05
    after = step_crank_nicolson(dh, MultiSectorState(psi), dt)
    z = 1j * dt * E / 2.0
    assert np.allclose(after.amplitudes, psi * (1 - z) / (1 + z), atol=1e-10)
    assert after.time == pytest.approx(dt)


def test_free_packet_dispersion(interval):
    dh = assemble(interval(-15.0, 15.0, 0.02))
    width, dt, steps = 1.0, 0.005, 400
    state = MultiSectorState.gaussian(dh, 0, [0.0], width)
    for state in CrankNicolsonPropagator(dh, dt).run(state, steps):
        pass

    x = dh.coordinates(0)[:, 0]
    density = dh.W * np.abs(state.amplitudes) ** 2
    mean = np.sum(density * x)
    measured = np.sqrt(np.sum(density * (x - mean) ** 2))
    t = dt * steps
    expected = width * np.sqrt(1.0 + (t / (2.0 * width**2)) ** 2)
    assert measured == pytest.approx(expected, rel=1e-3)


def test_norm_and_energy_conservation(point_halfline):
    dh = _packet_model(point_halfline)
    state = _packet(dh)
    norm0, energy0 = state.norm_squared(dh.W), energy(dh, state)
    point_peak = 0.0
    for state in CrankNicolsonPropagator(dh, 0.01).run(state, 1000):
        point_peak = max(point_peak, dh.W[0] * abs(state.amplitudes[0]) ** 2)
    assert abs(state.norm_squared(dh.W) - norm0) <= 1e-9
    assert abs(energy(dh, state) - energy0) <= 1e-8 * abs(energy0)
    assert point_peak >= 0.1


def test_time_reversal(point_halfline):
    dh = _packet_model(point_halfline)
    start = _packet(dh)
    propagator = CrankNicolsonPropagator(dh, 0.01)
    state = start
    for state in propagator.run(state, 300):
        pass
    state = state.conjugate()
    for state in propagator.run(state, 300):
        pass
    state = state.conjugate()
    assert abs(start.overlap(state, dh.W)) >= 1.0 - 1e-8


def test_refuses_non_hermitian(point_halfline):
    dh = assemble(point_halfline(CoefficientSet(1.0, 0.0, 0.0, 1.0)))
    with pytest.raises(NonHermitianError):
        CrankNicolsonPropagator(dh, 0.01)
    with pytest.raises(NonHermitianError):
        ground_state(dh)
    forced = CrankNicolsonPropagator(dh, 0.01, force_nonhermitian=True)
    assert len(forced.step(MultiSectorState.indicator(dh, 1))) == dh.size


def test_propagator_from_config(point_halfline):
    dh = assemble(point_halfline(CoefficientSet(1.0, 0.0, 0.0, 1.0)))
    config = EvolutionConfig(dt=0.02, steps=5)
    with pytest.raises(NonHermitianError):
        CrankNicolsonPropagator.from_config(dh, config)
    assert CrankNicolsonPropagator.from_config(dh, config, force_nonhermitian=True).dt == 0.02
    forced = config.model_copy(update={"force_nonhermitian": True})
    assert CrankNicolsonPropagator.from_config(dh, forced).dt == 0.02


def test_harmonic_oscillator_ground_state(interval):
    dh = assemble(interval(-8.0, 8.0, 0.05, potential=lambda x: 0.5 * x**2))
    value, state = ground_state(dh)
    assert value == pytest.approx(0.5, rel=0.01)
    assert state.norm_squared(dh.W) == pytest.approx(1.0)
    assert energy(dh, state) == pytest.approx(value, rel=1e-6)


def test_box_ground_state(interval):
    length = 10.0
    dh = assemble(interval(0.0, length, 0.05))
    value, _ = ground_state(dh)
    assert value == pytest.approx(np.pi**2 / (2.0 * length**2), rel=1e-3)


def test_ground_state_is_deterministic(interval):
    dh = assemble(interval(0.0, 5.0, 0.1))
    first = ground_state(dh, seed=3)[1].amplitudes
    second = ground_state(dh, seed=3)[1].amplitudes
    assert np.array_equal(first, second)


def _radial_bound_state(g: float, m_y: float, E0: float, hbar: float = 1.0) -> float:
    # E = g^2 m k / (2 pi hbar^2) with k = sqrt(2 m (E0 - E)) / hbar
    a = (g**2 * m_y / (2.0 * np.pi * hbar**2)) ** 2 * 2.0 * m_y / hbar**2
    return (-a + np.sqrt(a**2 + 4.0 * a * E0)) / 2.0


def test_radial_ground_state_extrapolates():
    exact = _radial_bound_state(1.0, 1.0, 1.0)
    assert exact == pytest.approx(0.2012, abs=1e-4)

    coarse, _ = ground_state(assemble_radial_creation(1.0, 1.0, 1.0, E0=1.0, R=15.0, h=0.02))
    fine, _ = ground_state(assemble_radial_creation(1.0, 1.0, 1.0, E0=1.0, R=15.0, h=0.01))
    assert abs(fine - exact) < abs(coarse - exact)
    assert 2.0 * fine - coarse == pytest.approx(exact, rel=5e-3)
