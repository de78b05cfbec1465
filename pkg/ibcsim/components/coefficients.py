import numpy as np
from pydantic import BaseModel, model_validator

from ibcsim.components.types import (
    ConditionError,
    StructuralError,
    matrix_to_pairs,
    pairs_to_matrix,
)

HERMITICITY_TOL = 1e-10
RANK_TOL = 1e-10


class FiberDims(BaseModel):
    """Fiber dimensions at a boundary point q: dim E_q, dim E_f(q) and dim F_q."""

    r_boundary: int
    r_target: int
    r_aux: int = 0

    @model_validator(mode="after")
    def check_dims(self):
        if self.r_boundary < 1 or self.r_target < 1 or self.r_aux < 0:
            raise ValueError("fiber dimensions must be positive (r_aux nonnegative)")
        if self.r_target > self.r_boundary:
            raise ValueError("r_target must not exceed r_boundary")
        if self.r_aux != self.r_boundary - self.r_target:
            raise ValueError("r_aux must equal r_boundary - r_target")
        return self

    @classmethod
    def scalar(cls) -> "FiberDims":
        return cls(r_boundary=1, r_target=1, r_aux=0)


class CoefficientSet:
    """
    The boundary-coupling quadruple (alpha, beta, gamma, delta) at one boundary point.

    alpha, beta map E_q -> E_f(q) + F_q, gamma, delta map E_q -> E_f(q).
    The IBC reads (alpha + beta d_n) psi(q) = K iota psi(f(q)).
    """

    def __init__(
        self,
        alpha,
        beta,
        gamma,
        delta,
        coupling_constant: float = 2.0,
        dims: FiberDims = None,
    ):
        self._alpha = np.atleast_2d(np.asarray(alpha, dtype=complex))
        self._beta = np.atleast_2d(np.asarray(beta, dtype=complex))
        self._gamma = np.atleast_2d(np.asarray(gamma, dtype=complex))
        self._delta = np.atleast_2d(np.asarray(delta, dtype=complex))
        if dims is None:
            r_boundary = self._alpha.shape[1]
            r_target = self._gamma.shape[0]
            dims = FiberDims(
                r_boundary=r_boundary, r_target=r_target, r_aux=r_boundary - r_target
            )
        self._dims = dims
        self._coupling_constant = float(coupling_constant)
        self.validate()

    @property
    def dims(self) -> FiberDims:
        return self._dims

    @property
    def alpha(self) -> np.ndarray:
        return self._alpha

    @property
    def beta(self) -> np.ndarray:
        return self._beta

    @property
    def gamma(self) -> np.ndarray:
        return self._gamma

    @property
    def delta(self) -> np.ndarray:
        return self._delta

    @property
    def coupling_constant(self) -> float:
        return self._coupling_constant

    @property
    def iota(self) -> np.ndarray:
        """Inclusion E_f(q) -> E_f(q) + F_q."""
        return np.vstack(
            [
                np.eye(self._dims.r_target, dtype=complex),
                np.zeros((self._dims.r_aux, self._dims.r_target), dtype=complex),
            ]
        )

    @property
    def projection(self) -> np.ndarray:
        """Projection E_f(q) + F_q -> E_f(q)."""
        return self.iota.conj().T

    @property
    def scale(self) -> float:
        return max(
            np.linalg.norm(self._alpha),
            np.linalg.norm(self._beta),
            np.linalg.norm(self._gamma),
            np.linalg.norm(self._delta),
        )

    def validate(self):
        dims = self._dims
        wide = (dims.r_target + dims.r_aux, dims.r_boundary)
        narrow = (dims.r_target, dims.r_boundary)
        for name, matrix, shape in (
            ("alpha", self._alpha, wide),
            ("beta", self._beta, wide),
            ("gamma", self._gamma, narrow),
            ("delta", self._delta, narrow),
        ):
            if matrix.shape != shape:
                raise StructuralError(
                    f"{name} has shape {matrix.shape}, expected {shape} for {dims}"
                )
            if not np.all(np.isfinite(matrix)):
                raise StructuralError(f"{name} has non-finite entries")
        if not np.isfinite(self._coupling_constant) or self._coupling_constant <= 0:
            raise StructuralError(
                f"Coupling constant K must be positive, got {self._coupling_constant}"
            )

    def is_dirichlet(self) -> bool:
        return not np.any(self._beta)

    def replace(self, **changes) -> "CoefficientSet":
        values = {
            "alpha": self._alpha,
            "beta": self._beta,
            "gamma": self._gamma,
            "delta": self._delta,
            "coupling_constant": self._coupling_constant,
            "dims": self._dims,
        }
        values.update(changes)
        return CoefficientSet(**values)

    def to_dict(self) -> dict:
        """Convert the CoefficientSet to a dictionary with [re, im] entries."""
        return {
            "alpha": matrix_to_pairs(self._alpha),
            "beta": matrix_to_pairs(self._beta),
            "gamma": matrix_to_pairs(self._gamma),
            "delta": matrix_to_pairs(self._delta),
            "coupling_constant": self._coupling_constant,
            "dims": self._dims.model_dump(),
        }

    @classmethod
    def from_dict(cls, data: dict):
        """Construct a CoefficientSet from a dictionary with [re, im] entries."""
        dims = data.get("dims")
        return cls(
            alpha=pairs_to_matrix(data["alpha"]),
            beta=pairs_to_matrix(data["beta"]),
            gamma=pairs_to_matrix(data["gamma"]),
            delta=pairs_to_matrix(data["delta"]),
            coupling_constant=data.get("coupling_constant", 2.0),
            dims=FiberDims(**dims) if dims is not None else None,
        )

    def __repr__(self) -> str:
        return (
            f"CoefficientSet(alpha={self._alpha.tolist()}, beta={self._beta.tolist()}, "
            f"gamma={self._gamma.tolist()}, delta={self._delta.tolist()}, "
            f"K={self._coupling_constant})"
        )


class ConditionReport:
    def __init__(
        self,
        defect_a: float,
        defect_b: float,
        defect_c: float,
        rank_full: bool,
        tol: float,
    ):
        self.defect_a = float(defect_a)
        self.defect_b = float(defect_b)
        self.defect_c = float(defect_c)
        self.rank_full = bool(rank_full)
        self.tol = float(tol)

    @property
    def max_defect(self) -> float:
        return max(self.defect_a, self.defect_b, self.defect_c)

    @property
    def passes(self) -> bool:
        return self.max_defect <= self.tol and self.rank_full

    def to_dict(self) -> dict:
        return {
            "defect_a": self.defect_a,
            "defect_b": self.defect_b,
            "defect_c": self.defect_c,
            "rank_full": self.rank_full,
            "passes": self.passes,
        }


def anti_hermitian_norm(matrix: np.ndarray) -> float:
    return float(np.linalg.norm((matrix - matrix.conj().T) / 2.0))


def check_conditions(
    cs: CoefficientSet, tol: float = HERMITICITY_TOL, rank_tol: float = None
) -> ConditionReport:
    """Evaluate the three self-adjointness conditions and the rank condition on [alpha|beta].

    @parameter: cs : CoefficientSet - Quadruple at one boundary point
    @parameter: tol : float - Absolute tolerance on the defects
    @parameter: rank_tol : float - Relative singular-value tolerance (defaults to RANK_TOL)
    @returns ConditionReport - Defects, rank flag and pass/fail.
    """
    cs.validate()
    if rank_tol is None:
        rank_tol = RANK_TOL
    iota, projection = cs.iota, cs.projection
    alpha_h = cs.alpha.conj().T

    defect_a = anti_hermitian_norm(alpha_h @ iota @ cs.gamma)
    defect_b = anti_hermitian_norm(cs.beta.conj().T @ iota @ cs.delta)
    identity = np.eye(cs.dims.r_boundary, dtype=complex)
    defect_c = float(
        np.linalg.norm(
            alpha_h @ iota @ cs.delta
            - cs.gamma.conj().T @ projection @ cs.beta
            + identity
        )
    )

    singular_values = np.linalg.svd(np.hstack([cs.alpha, cs.beta]), compute_uv=False)
    rank_full = bool(
        singular_values.size == cs.dims.r_boundary
        and singular_values[-1] > rank_tol * singular_values[0]
    )
    return ConditionReport(defect_a, defect_b, defect_c, rank_full, tol)


def _require_invertible(matrix: np.ndarray, name: str):
    if matrix.shape[0] != matrix.shape[1]:
        raise StructuralError(f"{name} must be square, got shape {matrix.shape}")
    singular_values = np.linalg.svd(matrix, compute_uv=False)
    if singular_values[-1] <= RANK_TOL * singular_values[0] or singular_values[0] == 0:
        raise ConditionError(f"{name} is singular (singular values {singular_values})")


def make_dirichlet(alpha, gamma, coupling_constant: float = 2.0) -> CoefficientSet:
    """Build a Dirichlet-type set (beta = 0) by solving the third condition for delta.

    With beta = 0 the third condition reads alpha^dagger delta = -I, so
    delta = -(alpha^dagger)^{-1}.
    """
    alpha = np.atleast_2d(np.asarray(alpha, dtype=complex))
    gamma = np.atleast_2d(np.asarray(gamma, dtype=complex))
    _require_invertible(alpha, "alpha")
    if gamma.shape != alpha.shape:
        raise StructuralError(
            f"gamma has shape {gamma.shape}, expected {alpha.shape} (r_aux = 0)"
        )

    product = alpha.conj().T @ gamma
    scale = max(np.linalg.norm(alpha) * np.linalg.norm(gamma), 1.0)
    if anti_hermitian_norm(product) > HERMITICITY_TOL * scale:
        raise ConditionError(
            "alpha^dagger gamma is not Hermitian: the first self-adjointness condition "
            "cannot be satisfied with this gamma"
        )

    delta = -np.linalg.inv(alpha.conj().T)
    r = alpha.shape[0]
    return CoefficientSet(
        alpha=alpha,
        beta=np.zeros_like(alpha),
        gamma=gamma,
        delta=delta,
        coupling_constant=coupling_constant,
        dims=FiberDims(r_boundary=r, r_target=r, r_aux=0),
    )


def complete_coefficients(
    alpha, beta, delta, coupling_constant: float = 2.0
) -> CoefficientSet:
    """Build a Robin-type set (beta invertible) by solving the third condition for gamma.

    gamma^dagger = (alpha^dagger delta + I) beta^{-1}.
    """
    alpha = np.atleast_2d(np.asarray(alpha, dtype=complex))
    beta = np.atleast_2d(np.asarray(beta, dtype=complex))
    delta = np.atleast_2d(np.asarray(delta, dtype=complex))
    _require_invertible(beta, "beta")
    r = beta.shape[0]
    for name, matrix in (("alpha", alpha), ("delta", delta)):
        if matrix.shape != (r, r):
            raise StructuralError(
                f"{name} has shape {matrix.shape}, expected {(r, r)} (r_aux = 0)"
            )

    scale = max(np.linalg.norm(beta) * np.linalg.norm(delta), 1.0)
    if anti_hermitian_norm(beta.conj().T @ delta) > HERMITICITY_TOL * scale:
        raise ConditionError(
            "beta^dagger delta is not Hermitian: the second self-adjointness condition "
            "fails for these inputs"
        )

    gamma_h = (alpha.conj().T @ delta + np.eye(r)) @ np.linalg.inv(beta)
    gamma = gamma_h.conj().T

    product = alpha.conj().T @ gamma
    scale = max(np.linalg.norm(alpha) * np.linalg.norm(gamma), 1.0)
    if anti_hermitian_norm(product) > HERMITICITY_TOL * scale:
        raise ConditionError(
            "alpha^dagger gamma is not Hermitian for the completed gamma: inputs are "
            "incompatible with the first self-adjointness condition"
        )

    return CoefficientSet(
        alpha=alpha,
        beta=beta,
        gamma=gamma,
        delta=delta,
        coupling_constant=coupling_constant,
        dims=FiberDims(r_boundary=r, r_target=r, r_aux=0),
    )


def perturb_condition(cs: CoefficientSet, epsilon: float) -> CoefficientSet:
    """Scale delta by (1 + epsilon); a negative control for the third condition."""
    return cs.replace(delta=cs.delta * (1.0 + epsilon))


def creation_coefficients(
    n: int, g: float, m_y: float, rho: float, hbar: float = 1.0
) -> CoefficientSet:
    """Quadruple of the rho cut-off creation model between sectors n and n + 1."""
    if g == 0:
        raise ConditionError("g = 0 decouples the sectors; alpha = -4 pi rho / (g m_y) is undefined")
    root = np.sqrt(n + 1.0)
    alpha = -4.0 * np.pi * rho * root / (g * m_y)
    delta = g * m_y / (4.0 * np.pi * rho * root)
    return CoefficientSet(
        alpha=[[alpha]],
        beta=[[0.0]],
        gamma=[[0.0]],
        delta=[[delta]],
        coupling_constant=2.0 / hbar**2,
        dims=FiberDims.scalar(),
    )


def creation_prefactor(n: int, g: float, m_y: float, rho: float, hbar: float = 1.0) -> float:
    """IBC prefactor -g m_y / (2 pi hbar^2 rho sqrt(n + 1))."""
    return -g * m_y / (2.0 * np.pi * hbar**2 * rho * np.sqrt(n + 1.0))
