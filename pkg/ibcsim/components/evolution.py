from typing import Iterator, Optional

import numpy as np
import scipy.sparse as sp
from pydantic import BaseModel, Field
from scipy.sparse.linalg import gmres, splu
from tqdm import tqdm
from wasabi import msg

from ibcsim.components.types import NonHermitianError, SolverError, StructuralError

GMRES_RTOL = 1e-12


class MultiSectorState:
    """Complex amplitudes over all dofs of a DiscreteHamiltonian at one time."""

    def __init__(self, amplitudes, time: float = 0.0):
        self._amplitudes = np.array(amplitudes, dtype=complex)
        if self._amplitudes.ndim != 1:
            raise StructuralError("amplitudes must be a flat vector")
        if not np.all(np.isfinite(self._amplitudes)):
            raise StructuralError("amplitudes must be finite")
        self._time = float(time)

    @property
    def amplitudes(self) -> np.ndarray:
        return self._amplitudes

    @property
    def time(self) -> float:
        return self._time

    def __len__(self) -> int:
        return self._amplitudes.size

    def norm_squared(self, W: np.ndarray) -> float:
        return float(np.sum(W * np.abs(self._amplitudes) ** 2))

    def conjugate(self) -> "MultiSectorState":
        return MultiSectorState(self._amplitudes.conj(), self._time)

    def normalized(self, W: np.ndarray) -> "MultiSectorState":
        norm = np.sqrt(self.norm_squared(W))
        if norm == 0:
            return MultiSectorState(self._amplitudes, self._time)
        return MultiSectorState(self._amplitudes / norm, self._time)

    def overlap(self, other: "MultiSectorState", W: np.ndarray) -> complex:
        return complex(np.vdot(self._amplitudes, W * other.amplitudes))

    def to_dict(self) -> dict:
        return {
            "time": self._time,
            "re": self._amplitudes.real.tolist(),
            "im": self._amplitudes.imag.tolist(),
        }

    @classmethod
    def from_dict(cls, data: dict):
        return cls(np.array(data["re"]) + 1j * np.array(data["im"]), data.get("time", 0.0))

    @classmethod
    def zeros(cls, dh) -> "MultiSectorState":
        return cls(np.zeros(dh.size, dtype=complex))

    @classmethod
    def gaussian(
        cls,
        dh,
        sector: int,
        center: list[float],
        width: float,
        momentum: Optional[list[float]] = None,
        component: int = 0,
    ) -> "MultiSectorState":
        """
        Normalized packet exp(-|x - x0|^2 / (4 width^2) + i k.x) on the stored values of one sector.
        On a radial sector the stored value is u = r psi.
        """
        grid = dh.model.grid(sector)
        coords = dh.coordinates(sector)
        center = np.asarray(center, dtype=float)
        momentum = np.zeros(grid.dim) if momentum is None else np.asarray(momentum, dtype=float)
        if center.size != grid.dim or momentum.size != grid.dim:
            raise StructuralError(
                f"center and momentum need {grid.dim} entries for sector {sector}"
            )
        if width <= 0:
            raise StructuralError("width must be positive")
        shifted = coords - center
        packet = np.exp(
            -np.sum(shifted**2, axis=1) / (4.0 * width**2) + 1j * coords @ momentum
        )
        amplitudes = np.zeros(dh.size, dtype=complex)
        block = dh.sector_slices[sector]
        amplitudes[block.start + component : block.stop : grid.fiber_dim] = packet
        return cls(amplitudes).normalized(dh.W)

    @classmethod
    def indicator(cls, dh, sector: int) -> "MultiSectorState":
        """Normalized constant amplitude on the first fiber component of one sector."""
        grid = dh.model.grid(sector)
        amplitudes = np.zeros(dh.size, dtype=complex)
        block = dh.sector_slices[sector]
        amplitudes[block.start : block.stop : grid.fiber_dim] = 1.0
        return cls(amplitudes).normalized(dh.W)


class EvolutionConfig(BaseModel):
    dt: float = Field(gt=0)
    steps: int = Field(ge=1)
    solver_tol: float = Field(default=1e-12, gt=0)
    force_nonhermitian: bool = False


class CrankNicolsonPropagator:
    """
    (I + i dt H / 2 hbar) psi' = (I - i dt H / 2 hbar) psi with one sparse LU reused for every step.
    """

    def __init__(
        self,
        dh,
        dt: float,
        solver_tol: float = 1e-12,
        force_nonhermitian: bool = False,
    ):
        if not dh.hermitian and not force_nonhermitian:
            raise NonHermitianError(
                f"W H is not Hermitian (relative defect {dh.relative_hermiticity_defect:.3e}); "
                "set force_nonhermitian to evolve anyway"
            )
        if dt < 0:
            raise StructuralError("dt must be nonnegative")
        self._dt = float(dt)
        self._solver_tol = float(solver_tol)
        self._size = dh.size

        identity = sp.identity(dh.size, dtype=complex, format="csc")
        factor = 1j * self._dt / (2.0 * dh.hbar)
        self._lhs = (identity + factor * dh.H).tocsc()
        self._rhs = (identity - factor * dh.H).tocsr()
        try:
            self._lu = splu(self._lhs)
        except RuntimeError as error:
            msg.warn(f"Sparse LU failed ({error}), falling back to GMRES")
            self._lu = None

    @classmethod
    def from_config(cls, dh, config: EvolutionConfig, force_nonhermitian: bool = False):
        return cls(
            dh,
            config.dt,
            config.solver_tol,
            force_nonhermitian or config.force_nonhermitian,
        )

    @property
    def dt(self) -> float:
        return self._dt

    def _residual(self, x: np.ndarray, b: np.ndarray) -> float:
        return float(np.linalg.norm(self._lhs @ x - b) / np.linalg.norm(b))

    def step(self, state: MultiSectorState) -> MultiSectorState:
        if len(state) != self._size:
            raise StructuralError(f"State has {len(state)} dofs, operator has {self._size}")
        if self._dt == 0:
            return MultiSectorState(state.amplitudes, state.time)
        b = self._rhs @ state.amplitudes
        if not np.any(b):
            return MultiSectorState(np.zeros_like(b), state.time + self._dt)

        x = None
        residual = np.inf
        if self._lu is not None:
            x = self._lu.solve(b)
            residual = self._residual(x, b)
        if residual > self._solver_tol:
            x, info = gmres(
                self._lhs, b, x0=x, rtol=min(GMRES_RTOL, self._solver_tol), atol=0
            )
            residual = self._residual(x, b)
            if info != 0 or residual > self._solver_tol:
                raise SolverError("Crank-Nicolson solve did not converge", residual)
        return MultiSectorState(x, state.time + self._dt)

    def run(
        self, state: MultiSectorState, steps: int, desc: str = "Evolving"
    ) -> Iterator[MultiSectorState]:
        """Yield the state after each of steps steps."""
        for _ in tqdm(range(steps), total=steps, desc=desc, disable=steps < 100):
            state = self.step(state)
            yield state


def step_crank_nicolson(
    dh,
    state: MultiSectorState,
    dt: float,
    solver_tol: float = 1e-12,
    force_nonhermitian: bool = False,
) -> MultiSectorState:
    """One Crank-Nicolson step; use CrankNicolsonPropagator to reuse the factorization."""
    return CrankNicolsonPropagator(dh, dt, solver_tol, force_nonhermitian).step(state)


def energy(dh, state: MultiSectorState) -> float:
    """Re <psi, H psi>_W."""
    psi = state.amplitudes
    return float(np.real(np.vdot(psi, dh.W * (dh.H @ psi))))


def ground_state(
    dh,
    shift: float = 0.0,
    tol: float = 1e-8,
    max_iter: int = 1000,
    seed: int = 0,
    patience: int = 50,
) -> tuple[float, MultiSectorState]:
    """
    Eigenpair nearest shift by shift-inverted power iteration on W^1/2 H W^-1/2.

    @parameter: dh : DiscreteHamiltonian - Weighted-Hermitian operator
    @parameter: shift : float - Target energy
    @parameter: tol : float - Stop once ||H psi - E psi||_W <= tol
    @parameter: seed : int - Seed of the random start vector
    @parameter: patience : int - Iterations without improvement before giving up
    @returns tuple[float, MultiSectorState] - Energy and W-normalized eigenvector
    """
    if not dh.hermitian:
        raise NonHermitianError(
            f"ground_state needs weighted-Hermitian H (relative defect {dh.relative_hermiticity_defect:.3e})"
        )
    root = np.sqrt(dh.W)
    A = (sp.diags(root) @ dh.H @ sp.diags(1.0 / root)).tocsc()
    shifted = (A - shift * sp.identity(dh.size, dtype=complex, format="csc")).tocsc()
    try:
        lu = splu(shifted)
    except RuntimeError as error:
        raise SolverError(f"H - shift is singular at shift {shift} ({error})")

    rng = np.random.default_rng(seed)
    y = rng.standard_normal(dh.size).astype(complex)
    y /= np.linalg.norm(y)

    best = np.inf
    stalled = 0
    residual = np.inf
    for _ in range(max_iter):
        y = lu.solve(y)
        y /= np.linalg.norm(y)
        Ay = A @ y
        value = float(np.real(np.vdot(y, Ay)))
        residual = float(np.linalg.norm(Ay - value * y))
        if residual <= tol:
            pivot = np.argmax(np.abs(y))
            y *= np.abs(y[pivot]) / y[pivot]
            return value, MultiSectorState(y / root)
        if residual < best * (1.0 - 1e-3):
            best = residual
            stalled = 0
        else:
            stalled += 1
            if stalled >= patience:
                break
    raise SolverError("Shift-invert iteration stagnated", residual)
