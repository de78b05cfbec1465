"""
Tests for sector grids, the nu densities and the discretized boundary maps.
"""
import numpy as np
import pytest
from hypothesis import given, strategies as st
from pydantic import ValidationError
from scipy.linalg import null_space

from ibcsim.components.coefficients import CoefficientSet, creation_coefficients
from ibcsim.components.geometry import (
    MapSpec,
    Sector,
    SectorGrid,
    build_link,
    nu_density_diffeo,
    nu_density_general,
    parse_face,
    sphere_collapse_density,
)
from ibcsim.components.model import radial_creation_model
from ibcsim.components.types import GeometryError, StructuralError

UNIT = CoefficientSet(1.0, 0.0, 0.0, -1.0)


def test_parse_face():
    assert parse_face("0-") == (0, -1)
    assert parse_face("12+") == (12, 1)
    for label in ("0", "x-", "-", "0*"):
        with pytest.raises(GeometryError):
            parse_face(label)


def test_sector_validation():
    with pytest.raises(ValidationError):
        Sector(id=0, kind="point", lower=[0.0], upper=[1.0])
    with pytest.raises(ValidationError):
        Sector(id=0, kind="radial", lower=[1.0], upper=[2.0], physical_faces=["0+"])
    with pytest.raises(ValidationError):
        Sector(id=0, kind="interval", lower=[1.0], upper=[0.0])
    with pytest.raises(ValidationError):
        Sector(id=0, kind="box", lower=[0.0, 0.0], upper=[1.0, 1.0], physical_faces=["2-"])
    assert Sector(id=0, kind="box", lower=[0.0, 0.0], upper=[1.0, 1.0]).mass_factors == [1.0, 1.0]


def test_grid_requires_dividing_spacing():
    sector = Sector(id=0, kind="interval", lower=[0.0], upper=[1.0])
    with pytest.raises(GeometryError):
        SectorGrid(sector, 0.3)
    with pytest.raises(GeometryError):
        SectorGrid(sector, 1.0)
    with pytest.raises(StructuralError):
        SectorGrid(sector, [0.25, 0.25])


@pytest.mark.parametrize(
    "convention,mass,total",
    [("explicit", 4.0, 1.0), ("metric", 4.0, 2.0), ("metric", 1.0, 1.0)],
)
def test_mu_weights_trapezoid(convention, mass, total):
    grid = SectorGrid(
        Sector(id=0, kind="interval", lower=[0.0], upper=[1.0], mass_factors=[mass]),
        0.25,
        convention,
    )
    assert grid.mu_weights.sum() == pytest.approx(total)
    assert grid.mu_weights[0] == pytest.approx(grid.mu_weights[1] / 2)


def test_grid_classification():
    grid = SectorGrid(
        Sector(id=1, kind="box", lower=[0.0, 0.0], upper=[1.0, 1.0], physical_faces=["1-"]),
        0.25,
    )
    assert grid.shape == (5, 5)
    assert grid.far_wall.sum() == 13
    assert len(grid.boundary_nodes["1-"]) == 3
    assert len(grid.interior_nodes()) == 9
    raw = grid.locate([0.5, 0.0])
    assert grid.face_of(raw) == ["1-"]
    assert np.allclose(grid.nodes[grid.inward_neighbor(raw, "1-")], [0.5, 0.25])
    with pytest.raises(GeometryError):
        grid.locate([2.0, 0.0])


def test_nu_diffeo_identity():
    for dim in range(1, 5):
        assert nu_density_diffeo(np.eye(dim), np.eye(dim)) == pytest.approx(1.0)


def test_nu_diffeo_scalar():
    assert nu_density_diffeo([[2.0]], [[1.0]]) == pytest.approx(0.5)


@given(
    st.floats(min_value=0.1, max_value=10.0),
    st.integers(min_value=0, max_value=2**32 - 1),
)
def test_nu_diffeo_homogeneity(scale, seed):
    rng = np.random.default_rng(seed)
    df = np.eye(3) + 0.3 * rng.normal(size=(3, 3))
    base = nu_density_diffeo(df, np.eye(3))
    assert nu_density_diffeo(scale * df, np.eye(3)) == pytest.approx(base * scale**-3, rel=1e-10)


def test_nu_diffeo_errors():
    with pytest.raises(GeometryError):
        nu_density_diffeo(np.zeros((2, 2)), np.eye(2))
    with pytest.raises(GeometryError):
        nu_density_diffeo(np.eye(2), [[1.0, 0.0], [0.0, -1.0]])
    with pytest.raises(StructuralError):
        nu_density_diffeo(np.eye(2), np.eye(3))


def _well_conditioned(rng, dim):
    while True:
        df = np.eye(dim) + 0.4 * rng.normal(size=(dim, dim))
        if np.linalg.cond(df) < 4.0:
            return df


def test_nu_diffeo_monte_carlo():
    rng = np.random.default_rng(7)
    samples = 1_000_000
    for _ in range(50):
        df = _well_conditioned(rng, 3)
        A = rng.normal(size=(3, 3))
        metric = A @ A.T + np.eye(3)

        corners = np.array(
            [df @ np.array([i, j, k], dtype=float) for i in (0, 1) for j in (0, 1) for k in (0, 1)]
        )
        low, high = corners.min(axis=0), corners.max(axis=0)
        points = low + (high - low) * rng.random((samples, 3))
        preimage = np.linalg.solve(df, points.T).T
        inside = np.all((preimage >= 0.0) & (preimage <= 1.0), axis=1)
        euclidean = inside.mean() * np.prod(high - low)
        image_volume = euclidean * np.sqrt(np.linalg.det(metric))

        assert nu_density_diffeo(df, metric) == pytest.approx(1.0 / image_volume, rel=0.01)


def test_nu_general_reduces_to_diffeo():
    rng = np.random.default_rng(3)
    for _ in range(10):
        df = _well_conditioned(rng, 3)
        A = rng.normal(size=(3, 3))
        metric = A @ A.T + np.eye(3)
        general = nu_density_general(np.eye(3), np.eye(3), np.eye(3), metric, df, k=0)
        assert general == pytest.approx(nu_density_diffeo(df, metric), rel=1e-12)


def test_nu_general_frame_independent():
    rng = np.random.default_rng(11)
    A = rng.normal(size=(3, 3))
    boundary_metric = A @ A.T + np.eye(3)
    df = rng.normal(size=(1, 3))
    target_metric = np.array([[2.5]])
    level_basis = null_space(df).T

    values = []
    for _ in range(100):
        mix = rng.normal(size=(2, 2)) + 2.0 * np.eye(2)
        level = mix @ level_basis
        transverse = rng.normal(size=3)
        if abs(df @ transverse) < 0.1:
            transverse = df[0]
        frame = np.vstack([level, transverse])
        values.append(
            nu_density_general(frame, boundary_metric, boundary_metric, target_metric, df, k=2)
        )
    assert np.max(np.abs(np.array(values) / values[0] - 1.0)) <= 1e-10


def test_nu_general_errors():
    df = np.array([[1.0, 0.0, 0.0]])
    with pytest.raises(GeometryError):
        nu_density_general(
            np.array([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]),
            np.eye(3),
            np.eye(3),
            np.eye(1),
            df,
            k=2,
        )
    with pytest.raises(GeometryError):
        nu_density_general(
            np.array([[0.0, 1.0, 0.0], [0.0, 2.0, 0.0], [1.0, 0.0, 0.0]]),
            np.eye(3),
            np.eye(3),
            np.eye(1),
            df,
            k=2,
        )


@pytest.mark.parametrize("rho", [0.1, 1.0, 3.5])
def test_sphere_collapse(rho):
    assert sphere_collapse_density(rho) == pytest.approx(1.0, rel=1e-14)
    model = radial_creation_model(g=1.0, m_y=1.0, rho=rho, E0=1.0, R=rho + 2.0, h=0.1)
    link = model.links[0]
    assert link.area_weights[0] == pytest.approx(4 * np.pi * rho**2, rel=1e-14)
    assert link.nu_weights[0] == pytest.approx(4 * np.pi * rho**2, rel=1e-14)


def test_point_halfline_nu(point_halfline):
    link = point_halfline(UNIT).links[0]
    assert len(link) == 1
    assert link.nu_weights[0] == 1.0
    assert link.expected_coupling == 2.0


def test_line_halfplane_nu(line_halfplane):
    link = line_halfplane(UNIT, a=1.0, height=1.0, h=0.125).links[0]
    assert len(link) == 15
    assert np.allclose(link.nu_weights, 1.0)


def test_affine_link_lambda_consistency():
    plane = SectorGrid(
        Sector(id=1, kind="box", lower=[-2.0, 0.0], upper=[2.0, 2.0], physical_faces=["1-"]),
        0.5,
        "explicit",
    )
    line = SectorGrid(Sector(id=0, kind="interval", lower=[-1.0], upper=[1.0]), 0.25, "explicit")
    link = build_link(plane, "1-", line, MapSpec(kind="affine", J=[[0.5]]), UNIT)
    assert np.allclose(link.nu_weights, 2.0)
    for node in np.unique(link.target_nodes):
        linked = link.target_nodes == node
        assert np.sum(link.nu_weights[linked] * line.mu_weights[node]) == pytest.approx(
            np.sum(link.area_weights[linked])
        )


def test_link_outside_target():
    plane = SectorGrid(
        Sector(id=1, kind="box", lower=[-2.0, 0.0], upper=[2.0, 2.0], physical_faces=["1-"]),
        0.5,
    )
    line = SectorGrid(Sector(id=0, kind="interval", lower=[-1.0], upper=[1.0]), 0.25)
    with pytest.raises(GeometryError):
        build_link(plane, "1-", line, MapSpec(kind="affine", J=[[1.0]]), UNIT)
    with pytest.raises(GeometryError):
        build_link(plane, "1-", line, MapSpec(kind="affine", J=[[0.0]]), UNIT)


def test_link_rejects_corner_nodes():
    plane = SectorGrid(
        Sector(
            id=1, kind="box", lower=[0.0, 0.0], upper=[1.0, 1.0], physical_faces=["0-", "1-"]
        ),
        0.25,
    )
    line = SectorGrid(Sector(id=0, kind="interval", lower=[-1.0], upper=[2.0]), 0.25)
    with pytest.raises(GeometryError):
        build_link(plane, "1-", line, MapSpec(), UNIT)


def test_identity_link_needs_matching_grids():
    plane = SectorGrid(
        Sector(id=1, kind="box", lower=[-1.0, 0.0], upper=[1.0, 1.0], physical_faces=["1-"]),
        0.25,
    )
    coarse = SectorGrid(Sector(id=0, kind="interval", lower=[-1.0], upper=[1.0]), 0.5)
    with pytest.raises(GeometryError, match="matching grids"):
        build_link(plane, "1-", coarse, MapSpec(), UNIT)

    shifted = SectorGrid(Sector(id=0, kind="interval", lower=[-1.125], upper=[0.875]), 0.25)
    with pytest.raises(GeometryError):
        build_link(plane, "1-", shifted, MapSpec(), UNIT)

    matching = SectorGrid(Sector(id=0, kind="interval", lower=[-1.0], upper=[1.0]), 0.25)
    link = build_link(plane, "1-", matching, MapSpec(), UNIT)
    assert link.nu_weights == pytest.approx(np.ones(len(link.nu_weights)))


def test_link_fiber_mismatch():
    point = SectorGrid(Sector(id=0, kind="point", fiber_dim=2), [])
    line = SectorGrid(
        Sector(id=1, kind="interval", lower=[0.0], upper=[1.0], physical_faces=["0-"]), 0.25
    )
    with pytest.raises(StructuralError):
        build_link(line, "0-", point, MapSpec(), UNIT)


def test_radial_map_only_links_radial_sectors():
    point = SectorGrid(Sector(id=0, kind="point"), [])
    line = SectorGrid(
        Sector(id=1, kind="interval", lower=[0.0], upper=[1.0], physical_faces=["0-"]), 0.25
    )
    with pytest.raises(GeometryError):
        build_link(line, "0-", point, MapSpec(kind="radial"), creation_coefficients(0, 1.0, 1.0, 1.0))


def test_radial_value_and_derivative_scales():
    model = radial_creation_model(g=1.0, m_y=2.0, rho=0.5, E0=1.0, R=2.5, h=0.1)
    link = model.links[0]
    assert link.value_scale == 0.5
    assert link.derivative_scale == pytest.approx(1.0 / (2.0 * 0.5))
    assert link.expected_coupling == 2.0


def test_decoupled_radial_model_has_no_face():
    model = radial_creation_model(g=0.0, m_y=1.0, rho=1.0, E0=1.0, R=3.0, h=0.1)
    assert model.links == []
    assert model.grid(1).boundary_nodes == {}
