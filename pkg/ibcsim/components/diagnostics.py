from typing import Iterable, Literal, Optional

import numpy as np

from ibcsim.components.assembly import DiscreteHamiltonian, reconstruct_boundary
from ibcsim.components.evolution import MultiSectorState
from ibcsim.components.types import StructuralError

FluxRule = Literal["midpoint", "trapezoid"]


def _amplitudes(dh: DiscreteHamiltonian, state) -> np.ndarray:
    amplitudes = np.asarray(getattr(state, "amplitudes", state))
    if amplitudes.shape != (dh.size,):
        raise StructuralError(f"State of shape {amplitudes.shape} does not match {dh.size} dofs")
    return amplitudes


def sector_probabilities(dh: DiscreteHamiltonian, state) -> np.ndarray:
    """P per sector, in dh.sector_ids order."""
    density = dh.W * np.abs(_amplitudes(dh, state)) ** 2
    return np.array([np.sum(density[block]) for block in dh.sector_slices.values()])


def boundary_flux(dh: DiscreteHamiltonian, state, link: int) -> float:
    """
    nu-weighted normal current through one linked face, positive when probability
    enters the source sector through its boundary.
    """
    psi_b, dpsi_b = reconstruct_boundary(dh, _amplitudes(dh, state), link)
    currents = np.imag(np.sum(psi_b.conj() * dpsi_b, axis=1))
    return float(np.sum(dh.links[link].flux_weights * currents))


def target_gain(dh: DiscreteHamiltonian, state, link: int) -> float:
    """Rate at which the source term of one link feeds the target sector: (2/hbar) Im <psi, S psi>_W."""
    psi = _amplitudes(dh, state)
    source = dh.source_operators[link]
    return float(2.0 / dh.hbar * np.imag(np.vdot(psi, dh.W * (source @ psi))))


class BalanceReport:
    def __init__(
        self,
        time: float,
        sector_ids: list[int],
        sector_probs: np.ndarray,
        fluxes: np.ndarray,
        target_gains: np.ndarray,
        balance_residuals: np.ndarray,
        total_residual: float,
        hermiticity_defect: float,
    ):
        self._time = float(time)
        self._sector_ids = list(sector_ids)
        self._sector_probs = np.asarray(sector_probs, dtype=float)
        self._fluxes = np.asarray(fluxes, dtype=float)
        self._target_gains = np.asarray(target_gains, dtype=float)
        self._balance_residuals = np.asarray(balance_residuals, dtype=float)
        self._total_residual = float(total_residual)
        self._hermiticity_defect = float(hermiticity_defect)

    @property
    def time(self) -> float:
        return self._time

    @property
    def sector_ids(self) -> list[int]:
        return self._sector_ids

    @property
    def sector_probs(self) -> np.ndarray:
        return self._sector_probs

    @property
    def total_norm(self) -> float:
        return float(np.sum(self._sector_probs))

    @property
    def fluxes(self) -> np.ndarray:
        return self._fluxes

    @property
    def target_gains(self) -> np.ndarray:
        return self._target_gains

    @property
    def compensation_defects(self) -> np.ndarray:
        """Target gain minus the boundary loss of the source, per link."""
        return self._target_gains + self._fluxes

    @property
    def balance_residuals(self) -> np.ndarray:
        return self._balance_residuals

    @property
    def total_residual(self) -> float:
        """d||psi||^2/dt over the step."""
        return self._total_residual

    @property
    def hermiticity_defect(self) -> float:
        return self._hermiticity_defect

    def csv_row(self) -> list[float]:
        return (
            [self._time, self.total_norm]
            + self._sector_probs.tolist()
            + self._fluxes.tolist()
            + self._balance_residuals.tolist()
            + [self._hermiticity_defect]
        )

    def to_dict(self) -> dict:
        return {
            "time": self._time,
            "sector_probs": dict(zip(self._sector_ids, self._sector_probs.tolist())),
            "total_norm": self.total_norm,
            "fluxes": self._fluxes.tolist(),
            "target_gains": self._target_gains.tolist(),
            "balance_residuals": dict(zip(self._sector_ids, self._balance_residuals.tolist())),
            "total_residual": self._total_residual,
            "hermiticity_defect": self._hermiticity_defect,
        }


def csv_columns(dh: DiscreteHamiltonian) -> list[str]:
    return (
        ["t", "total_norm"]
        + [f"P_sector_{sid}" for sid in dh.sector_ids]
        + [f"flux_link_{k}" for k in range(len(dh.links))]
        + [f"residual_sector_{sid}" for sid in dh.sector_ids]
        + ["hermiticity_defect"]
    )


def _link_rates(dh: DiscreteHamiltonian, states: list[np.ndarray]) -> tuple[np.ndarray, np.ndarray]:
    fluxes = np.array(
        [np.mean([boundary_flux(dh, s, k) for s in states]) for k in range(len(dh.links))]
    )
    gains = np.array(
        [np.mean([target_gain(dh, s, k) for s in states]) for k in range(len(dh.links))]
    )
    return fluxes, gains


def _sector_residuals(dh: DiscreteHamiltonian, dPdt: np.ndarray, fluxes: np.ndarray) -> np.ndarray:
    residuals = dPdt.copy()
    position = {sid: i for i, sid in enumerate(dh.sector_ids)}
    for k, link in enumerate(dh.links):
        residuals[position[link.source_id]] -= fluxes[k]
        residuals[position[link.target_id]] += fluxes[k]
    return residuals


def balance_residual(
    dh: DiscreteHamiltonian,
    state_prev,
    state_next,
    dt: float,
    rule: FluxRule = "trapezoid",
) -> BalanceReport:
    """
    Balance of one step: dP/dt per sector minus the boundary fluxes of its links.

    @parameter: rule : str - "midpoint" evaluates fluxes at (psi_prev + psi_next)/2,
        which is exact for Crank-Nicolson; "trapezoid" averages the endpoint fluxes.
    @returns BalanceReport
    """
    if dt <= 0:
        raise StructuralError("dt must be positive")
    prev = _amplitudes(dh, state_prev)
    nxt = _amplitudes(dh, state_next)
    if rule == "midpoint":
        fluxes, gains = _link_rates(dh, [(prev + nxt) / 2.0])
    elif rule == "trapezoid":
        fluxes, gains = _link_rates(dh, [prev, nxt])
    else:
        raise StructuralError(f"Unknown flux rule {rule!r}")

    p_prev = sector_probabilities(dh, prev)
    p_next = sector_probabilities(dh, nxt)
    dPdt = (p_next - p_prev) / dt
    time = getattr(state_next, "time", 0.0)
    return BalanceReport(
        time=time,
        sector_ids=dh.sector_ids,
        sector_probs=p_next,
        fluxes=fluxes,
        target_gains=gains,
        balance_residuals=_sector_residuals(dh, dPdt, fluxes),
        total_residual=float(np.sum(p_next) - np.sum(p_prev)) / dt,
        hermiticity_defect=dh.hermiticity_defect,
    )


def initial_report(dh: DiscreteHamiltonian, state: MultiSectorState) -> BalanceReport:
    """Report at t0: probabilities and fluxes of the state, residuals undefined (nan)."""
    fluxes, gains = _link_rates(dh, [_amplitudes(dh, state)])
    nan = np.full(len(dh.sector_ids), np.nan)
    return BalanceReport(
        time=state.time,
        sector_ids=dh.sector_ids,
        sector_probs=sector_probabilities(dh, state),
        fluxes=fluxes,
        target_gains=gains,
        balance_residuals=nan,
        total_residual=np.nan,
        hermiticity_defect=dh.hermiticity_defect,
    )


def norm_drift_rate(reports: Iterable[BalanceReport]) -> float:
    """Largest |d||psi||^2/dt| over a run."""
    rates = [abs(r.total_residual) for r in reports if np.isfinite(r.total_residual)]
    return max(rates) if rates else 0.0


def max_balance_residual(reports: Iterable[BalanceReport], sector: Optional[int] = None) -> float:
    """Largest |residual| over a run, for one sector or all sectors."""
    largest = 0.0
    for report in reports:
        values = report.balance_residuals
        if sector is not None:
            values = values[report.sector_ids.index(sector) : report.sector_ids.index(sector) + 1]
        values = values[np.isfinite(values)]
        if values.size:
            largest = max(largest, float(np.max(np.abs(values))))
    return largest
