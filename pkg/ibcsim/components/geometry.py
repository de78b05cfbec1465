from typing import Callable, Literal, Optional, Union

import numpy as np
from pydantic import BaseModel, model_validator
from wasabi import msg

from ibcsim.components.coefficients import CoefficientSet
from ibcsim.components.types import GeometryError, MassConvention, StructuralError

COORDINATE_TOL = 1e-9


def parse_face(face: str) -> tuple[int, int]:
    """Split a face label like "0-" or "1+" into (axis, side) with side -1 (lower) or +1 (upper)."""
    if len(face) < 2 or face[-1] not in "+-" or not face[:-1].isdigit():
        raise GeometryError(f"Face label {face!r} is not of the form '<axis><+|->'")
    return int(face[:-1]), (-1 if face[-1] == "-" else 1)


class Sector(BaseModel):
    id: int
    kind: Literal["point", "interval", "box", "radial"]
    lower: list[float] = []
    upper: list[float] = []
    physical_faces: list[str] = []
    mass_factors: list[float] = []
    fiber_dim: int = 1

    @property
    def dim(self) -> int:
        return len(self.lower)

    @model_validator(mode="after")
    def check_domain(self):
        if len(self.upper) != len(self.lower):
            raise ValueError("lower and upper must have the same length")
        if self.kind == "point":
            if self.dim != 0 or self.physical_faces:
                raise ValueError("a point sector has no extent and no faces")
        elif self.dim == 0:
            raise ValueError(f"a {self.kind} sector needs lower/upper bounds")
        if self.kind in ("interval", "radial") and self.dim != 1:
            raise ValueError(f"a {self.kind} sector is one-dimensional")
        if self.kind == "radial":
            if self.lower[0] <= 0:
                raise ValueError("the cut-off radius rho must be positive")
            if self.physical_faces not in ([], ["0-"]):
                raise ValueError("the only physical face of a radial sector is '0-' (r = rho)")
        if not self.mass_factors:
            self.mass_factors = [1.0] * self.dim
        if len(self.mass_factors) != self.dim:
            raise ValueError("mass_factors length must equal the sector dimension")
        if any(m <= 0 for m in self.mass_factors):
            raise ValueError("mass factors must be positive")
        if any(b <= a for a, b in zip(self.lower, self.upper)):
            raise ValueError("upper bounds must exceed lower bounds")
        if self.fiber_dim < 1:
            raise ValueError("fiber_dim must be positive")
        if len(set(self.physical_faces)) != len(self.physical_faces):
            raise ValueError("physical faces must be unique")
        for face in self.physical_faces:
            axis, _ = parse_face(face)
            if axis >= self.dim:
                raise ValueError(f"face {face} refers to axis {axis} of a {self.dim}-d sector")
        return self


class MapSpec(BaseModel):
    kind: Literal["identity", "affine", "radial"] = "identity"
    J: Optional[list[list[float]]] = None
    offset: Optional[list[float]] = None


class SectorGrid:
    """
    Uniform lattice on one sector, including far-wall and physical-boundary nodes.
    Far-wall nodes carry zero amplitude and are never degrees of freedom.
    """

    def __init__(
        self,
        sector: Sector,
        spacing: Union[float, list[float]],
        mass_convention: MassConvention = "metric",
    ):
        self._sector = sector
        self._mass_convention = mass_convention
        dim = sector.dim

        if isinstance(spacing, (int, float)):
            spacing = [float(spacing)] * dim
        if len(spacing) != dim:
            raise StructuralError(f"spacing has {len(spacing)} entries for a {dim}-d sector")
        if any(h <= 0 for h in spacing):
            raise GeometryError("grid spacing must be positive")
        self._spacing = np.array(spacing, dtype=float)

        counts = []
        for axis in range(dim):
            length = sector.upper[axis] - sector.lower[axis]
            cells = length / self._spacing[axis]
            n_cells = int(round(cells))
            if abs(cells - n_cells) > COORDINATE_TOL * max(cells, 1.0):
                raise GeometryError(
                    f"spacing {self._spacing[axis]} does not divide the extent {length} of sector {sector.id} axis {axis}"
                )
            if n_cells < 2:
                raise GeometryError(f"sector {sector.id} axis {axis} needs at least two cells")
            counts.append(n_cells + 1)
        self._shape = tuple(counts)

        self._axes = [
            sector.lower[axis] + self._spacing[axis] * np.arange(counts[axis])
            for axis in range(dim)
        ]
        if dim == 0:
            self._nodes = np.zeros((1, 0))
            self._mu_weights = np.ones(1)
        else:
            mesh = np.meshgrid(*self._axes, indexing="ij")
            self._nodes = np.stack([m.ravel() for m in mesh], axis=1)
            self._axis_weights = [self._weights_along(axis) for axis in range(dim)]
            weights = self._axis_weights[0]
            for axis_weights in self._axis_weights[1:]:
                weights = np.multiply.outer(weights, axis_weights)
            self._mu_weights = np.asarray(weights, dtype=float).ravel()

        self._classify_nodes()

    def _weights_along(self, axis: int) -> np.ndarray:
        h = self._spacing[axis]
        if self._sector.kind == "radial":
            base = 4.0 * np.pi * h
        elif self._mass_convention == "metric":
            base = h * np.sqrt(self._sector.mass_factors[axis])
        else:
            base = h
        weights = np.full(self._shape[axis], base)
        weights[0] *= 0.5
        weights[-1] *= 0.5
        return weights

    def _classify_nodes(self):
        dim = self._sector.dim
        n_nodes = self._nodes.shape[0]
        self._far_wall = np.zeros(n_nodes, dtype=bool)
        self._boundary_nodes: dict[str, np.ndarray] = {}
        if dim == 0:
            return
        multi = np.array(np.unravel_index(np.arange(n_nodes), self._shape))
        on_face = {}
        for axis in range(dim):
            for side, end in ((-1, 0), (1, self._shape[axis] - 1)):
                face = f"{axis}{'-' if side < 0 else '+'}"
                mask = multi[axis] == end
                if face in self._sector.physical_faces:
                    on_face[face] = mask
                else:
                    self._far_wall |= mask
        for face, mask in on_face.items():
            self._boundary_nodes[face] = np.flatnonzero(mask & ~self._far_wall)

    @property
    def sector(self) -> Sector:
        return self._sector

    @property
    def sector_id(self) -> int:
        return self._sector.id

    @property
    def dim(self) -> int:
        return self._sector.dim

    @property
    def fiber_dim(self) -> int:
        return self._sector.fiber_dim

    @property
    def mass_convention(self) -> MassConvention:
        return self._mass_convention

    @property
    def spacing(self) -> np.ndarray:
        return self._spacing

    @property
    def shape(self) -> tuple:
        return self._shape

    @property
    def nodes(self) -> np.ndarray:
        return self._nodes

    @property
    def mu_weights(self) -> np.ndarray:
        return self._mu_weights

    @property
    def far_wall(self) -> np.ndarray:
        return self._far_wall

    @property
    def boundary_nodes(self) -> dict[str, np.ndarray]:
        return self._boundary_nodes

    def interior_nodes(self) -> np.ndarray:
        """Raw indices that are neither far-wall nor physical-boundary nodes."""
        mask = ~self._far_wall
        for nodes in self._boundary_nodes.values():
            mask[nodes] = False
        return np.flatnonzero(mask)

    def face_of(self, raw: int) -> list[str]:
        return [face for face, nodes in self._boundary_nodes.items() if raw in nodes]

    def neighbor(self, raw: int, axis: int, step: int) -> Optional[int]:
        """Raw index one lattice step along axis, None outside the lattice."""
        multi = list(np.unravel_index(raw, self._shape))
        multi[axis] += step
        if multi[axis] < 0 or multi[axis] >= self._shape[axis]:
            return None
        return int(np.ravel_multi_index(multi, self._shape))

    def inward_neighbor(self, raw: int, face: str) -> int:
        axis, side = parse_face(face)
        return self.neighbor(raw, axis, -side)

    def kinetic_coefficient(self, axis: int, hbar: float) -> float:
        """hbar^2 / (2 m_axis), the prefactor of the second difference along axis."""
        return hbar**2 / (2.0 * self._sector.mass_factors[axis])

    def value_scale(self, face: str) -> float:
        """Factor between the stored value and psi at the face (u = r psi on a radial sector)."""
        if self._sector.kind == "radial":
            return self._sector.lower[0]
        return 1.0

    def derivative_scale(self, face: str) -> float:
        """Factor between the inward difference of stored values and the unit-normal derivative."""
        axis, _ = parse_face(face)
        mass = self._sector.mass_factors[axis]
        if self._sector.kind == "radial":
            return 1.0 / (mass * self._sector.lower[0])
        if self._mass_convention == "metric":
            return 1.0 / np.sqrt(mass)
        return 1.0

    def face_area_weight(self, raw: int, face: str) -> float:
        """lambda-area carried by one boundary node of face."""
        if self._sector.kind == "radial":
            rho = self._sector.lower[0]
            return 4.0 * np.pi * rho**2 * sphere_collapse_density(rho)
        axis, _ = parse_face(face)
        multi = np.unravel_index(raw, self._shape)
        weight = 1.0
        for t in range(self.dim):
            if t != axis:
                weight *= self._axis_weights[t][multi[t]]
        return float(weight)

    def expected_coupling(self, face: str, hbar: float) -> float:
        """K that makes links on this face exactly Hermitian: 2/hbar^2 or 2 m_axis/hbar^2."""
        axis, _ = parse_face(face)
        if self._sector.kind == "radial" or self._mass_convention == "metric":
            return 2.0 / hbar**2
        return 2.0 * self._sector.mass_factors[axis] / hbar**2

    def locate(self, point: np.ndarray) -> int:
        """Raw index of the node whose cell contains point."""
        point = np.atleast_1d(np.asarray(point, dtype=float))
        if self.dim == 0:
            if point.size:
                raise GeometryError(f"point sector {self.sector_id} has no coordinates to match {point}")
            return 0
        if point.size != self.dim:
            raise StructuralError(
                f"coordinate of length {point.size} for {self.dim}-d sector {self.sector_id}"
            )
        multi = []
        for axis in range(self.dim):
            h = self._spacing[axis]
            offset = (point[axis] - self._sector.lower[axis]) / h
            index = int(np.floor(offset + 0.5))
            if index < 0 or index >= self._shape[axis] or abs(offset - index) > 0.5 + COORDINATE_TOL:
                raise GeometryError(
                    f"{point.tolist()} lies outside the grid of sector {self.sector_id}"
                )
            multi.append(index)
        return int(np.ravel_multi_index(multi, self._shape))


def _spd_check(matrix: np.ndarray, name: str) -> np.ndarray:
    matrix = np.atleast_2d(np.asarray(matrix, dtype=float))
    if matrix.shape[0] != matrix.shape[1]:
        raise StructuralError(f"{name} must be square")
    if not np.allclose(matrix, matrix.T, rtol=1e-12, atol=0):
        raise GeometryError(f"{name} is not symmetric")
    try:
        np.linalg.cholesky(matrix)
    except np.linalg.LinAlgError:
        raise GeometryError(f"{name} is not positive definite")
    return matrix


def nu_density_diffeo(df, target_metric) -> float:
    """
    Density of nu_q relative to the boundary area when f is a local diffeomorphism.

    @parameter: df : ndarray - Tangent map written in an orthonormal frame of the boundary
    @parameter: target_metric : ndarray - Metric of the target sector
    @returns float - |det(df^T G df)|^(-1/2)
    """
    df = np.atleast_2d(np.asarray(df, dtype=float))
    metric = _spd_check(target_metric, "target_metric")
    if df.shape[0] != df.shape[1] or df.shape[0] != metric.shape[0]:
        raise StructuralError(f"df of shape {df.shape} does not match metric {metric.shape}")
    singular_values = np.linalg.svd(df, compute_uv=False)
    if singular_values.size == 0 or singular_values[-1] <= 1e-12 * singular_values[0]:
        raise GeometryError("df is singular: the full-rank assumption on f is violated")
    return float(abs(np.linalg.det(df.T @ metric @ df)) ** -0.5)


def _gram(vectors: np.ndarray, metric: np.ndarray) -> np.ndarray:
    return vectors @ metric @ vectors.T


def nu_density_general(
    frame,
    boundary_metric,
    level_metric,
    target_metric,
    df,
    k: int,
) -> float:
    """
    Density of nu_q relative to the area on the level set S = f^-1(q).

    The frame holds l tangent vectors of the boundary as rows; the first k span
    the tangent space of S (df annihilates them), the rest are mapped by df onto
    a basis of the target tangent space.
    """
    frame = np.atleast_2d(np.asarray(frame, dtype=float))
    boundary_metric = np.atleast_2d(np.asarray(boundary_metric, dtype=float))
    level_metric = np.atleast_2d(np.asarray(level_metric, dtype=float))
    df = np.asarray(df, dtype=float).reshape(-1, frame.shape[1])
    l = frame.shape[0]
    if not 0 <= k <= l:
        raise StructuralError(f"k = {k} must lie in [0, {l}]")
    if df.shape[0] != l - k:
        raise StructuralError(
            f"df maps onto a {df.shape[0]}-d target, expected {l - k} for l = {l}, k = {k}"
        )

    boundary_gram = _gram(frame, boundary_metric)
    boundary_det = np.linalg.det(boundary_gram)
    scale = np.prod(np.diag(boundary_gram)) if l else 1.0
    if l and abs(boundary_det) <= 1e-12 * scale:
        raise GeometryError("the frame is degenerate")

    level_vectors = frame[:k]
    image = level_vectors @ df.T
    if k and image.size and np.linalg.norm(image) > 1e-10 * max(
        np.linalg.norm(level_vectors) * np.linalg.norm(df), 1e-300
    ):
        raise GeometryError("the first k frame vectors are not tangent to the level set (df e_i != 0)")
    level_det = np.linalg.det(_gram(level_vectors, level_metric)) if k else 1.0

    mapped = frame[k:] @ df.T
    if l - k:
        metric = _spd_check(target_metric, "target_metric")
        target_gram = _gram(mapped, metric)
        target_det = np.linalg.det(target_gram)
        if abs(target_det) <= 1e-12 * np.prod(np.diag(target_gram)):
            raise GeometryError("df e_(k+1..l) are linearly dependent")
    else:
        target_det = 1.0

    return float(np.sqrt(abs(boundary_det / (level_det * target_det))))


def sphere_collapse_density(rho: float) -> float:
    """nu density of the sphere |y| = rho collapsing onto the point y = 0."""
    frame = np.array([[0.0, rho, 0.0], [0.0, 0.0, rho]])
    euclidean = np.eye(3)
    return nu_density_general(frame, euclidean, euclidean, np.zeros((0, 0)), np.zeros((0, 3)), k=2)


class BoundaryLink:
    """
    Discretized f: one physical face of a source sector mapped into a target sector.
    Node arrays are aligned: entry i of every per-node array belongs to boundary node i.
    """

    def __init__(
        self,
        source: SectorGrid,
        face: str,
        target: SectorGrid,
        map_spec: MapSpec,
        boundary_nodes: np.ndarray,
        inner_nodes: np.ndarray,
        target_nodes: np.ndarray,
        area_weights: np.ndarray,
        nu_weights: np.ndarray,
        inner_weights: np.ndarray,
        coefficients: list[CoefficientSet],
        hbar: float,
    ):
        self._source = source
        self._face = face
        self._target = target
        self._map_spec = map_spec
        self._boundary_nodes = boundary_nodes
        self._inner_nodes = inner_nodes
        self._target_nodes = target_nodes
        self._area_weights = area_weights
        self._nu_weights = nu_weights
        self._inner_weights = inner_weights
        self._coefficients = coefficients
        self._hbar = hbar

        self._axis, _ = parse_face(face)
        self._value_scale = source.value_scale(face)
        self._derivative_scale = source.derivative_scale(face)
        self._kinetic_coefficient = source.kinetic_coefficient(self._axis, hbar)
        self._normal_spacing = float(source.spacing[self._axis])
        self._expected_coupling = source.expected_coupling(face, hbar)

    @property
    def source(self) -> SectorGrid:
        return self._source

    @property
    def source_id(self) -> int:
        return self._source.sector_id

    @property
    def face(self) -> str:
        return self._face

    @property
    def target(self) -> SectorGrid:
        return self._target

    @property
    def target_id(self) -> int:
        return self._target.sector_id

    @property
    def map_spec(self) -> MapSpec:
        return self._map_spec

    @property
    def boundary_nodes(self) -> np.ndarray:
        return self._boundary_nodes

    @property
    def inner_nodes(self) -> np.ndarray:
        return self._inner_nodes

    @property
    def target_nodes(self) -> np.ndarray:
        return self._target_nodes

    @property
    def area_weights(self) -> np.ndarray:
        return self._area_weights

    @property
    def nu_weights(self) -> np.ndarray:
        return self._nu_weights

    @property
    def inner_weights(self) -> np.ndarray:
        """mu-weight of each inner node divided by the normal spacing."""
        return self._inner_weights

    @property
    def coefficients(self) -> list[CoefficientSet]:
        return self._coefficients

    @property
    def value_scale(self) -> float:
        return self._value_scale

    @property
    def derivative_scale(self) -> float:
        return self._derivative_scale

    @property
    def kinetic_coefficient(self) -> float:
        return self._kinetic_coefficient

    @property
    def normal_spacing(self) -> float:
        return self._normal_spacing

    @property
    def expected_coupling(self) -> float:
        return self._expected_coupling

    @property
    def hbar(self) -> float:
        return self._hbar

    @property
    def flux_weights(self) -> np.ndarray:
        """Per-node factor turning Im(psi_b^* d_n psi_b) into the nu-weighted normal current."""
        return (
            2.0
            * self._inner_weights
            * self._kinetic_coefficient
            * self._value_scale
            / (self._hbar * self._derivative_scale)
        )

    def __len__(self) -> int:
        return len(self._boundary_nodes)

    def to_dict(self) -> dict:
        return {
            "source": self.source_id,
            "face": self._face,
            "target": self.target_id,
            "map": self._map_spec.model_dump(),
            "nodes": len(self),
            "nu_weights": self._nu_weights.tolist(),
            "expected_coupling": self._expected_coupling,
        }


CoefficientField = Union[CoefficientSet, Callable[[np.ndarray], CoefficientSet]]


def _map_face_point(
    coords: np.ndarray, axis: int, map_spec: MapSpec, target: SectorGrid
) -> np.ndarray:
    face_coords = np.delete(coords, axis)
    if map_spec.kind == "identity":
        if target.dim != face_coords.size:
            raise GeometryError(
                f"identity projection maps a {face_coords.size}-d face onto a {target.dim}-d sector"
            )
        return face_coords
    if map_spec.kind == "affine":
        J = np.atleast_2d(np.asarray(map_spec.J, dtype=float))
        offset = (
            np.zeros(J.shape[0]) if map_spec.offset is None else np.asarray(map_spec.offset, dtype=float)
        )
        return J @ face_coords + offset
    return np.zeros(0)


def _check_map(map_spec: MapSpec, source: SectorGrid, face: str, target: SectorGrid):
    face_dim = source.dim - 1
    if target.dim > face_dim:
        raise GeometryError(
            f"target sector {target.sector_id} (dim {target.dim}) exceeds the face dimension {face_dim}"
        )
    if map_spec.kind == "radial":
        if source.sector.kind != "radial" or target.sector.kind != "point":
            raise GeometryError("radial collapse links a radial sector to a point sector")
    elif source.sector.kind == "radial":
        raise GeometryError("a radial sector only links through the radial collapse map")
    if map_spec.kind == "identity" and target.dim == face_dim and face_dim > 0:
        axis, _ = parse_face(face)
        spacing = np.delete(source.spacing, axis)
        if not np.allclose(target.spacing, spacing, rtol=COORDINATE_TOL, atol=0.0):
            raise GeometryError(
                f"identity projection needs matching grids: face {face} of sector {source.sector_id} "
                f"has spacing {spacing.tolist()}, sector {target.sector_id} has {target.spacing.tolist()}"
            )
        shift = (np.delete(np.asarray(source.sector.lower, dtype=float), axis)
                 - np.asarray(target.sector.lower, dtype=float)) / spacing
        if np.max(np.abs(shift - np.round(shift))) > COORDINATE_TOL:
            raise GeometryError(
                f"identity projection needs face {face} of sector {source.sector_id} to sit on the "
                f"nodes of sector {target.sector_id}"
            )
    if map_spec.kind == "affine":
        if map_spec.J is None:
            raise GeometryError("affine map needs J")
        J = np.atleast_2d(np.asarray(map_spec.J, dtype=float))
        if J.shape != (target.dim, face_dim):
            raise GeometryError(f"J has shape {J.shape}, expected {(target.dim, face_dim)}")
        if target.dim and np.linalg.matrix_rank(J) < target.dim:
            raise GeometryError("J is rank deficient: the full-rank assumption on f is violated")
        if map_spec.offset is not None and len(map_spec.offset) != target.dim:
            raise GeometryError("offset length must equal the target dimension")


def build_link(
    source: SectorGrid,
    face: str,
    target: SectorGrid,
    map_spec: MapSpec,
    coefficients: CoefficientField,
    hbar: float = 1.0,
) -> BoundaryLink:
    """
    Discretize f on one face: map boundary nodes to target nodes and set nu so that
    sum over linked nodes of nu * mu(target node) equals their summed lambda-area.

    @parameter: source : SectorGrid - Sector owning the boundary face
    @parameter: face : str - Physical face label of the source
    @parameter: target : SectorGrid - Sector receiving the source term
    @parameter: map_spec : MapSpec - Discretization of f
    @parameter: coefficients : CoefficientSet | Callable - Constant or sampled at node coordinates
    @returns BoundaryLink
    """
    if face not in source.boundary_nodes:
        raise GeometryError(f"{face} is not a physical face of sector {source.sector_id}")
    _check_map(map_spec, source, face, target)
    axis, _ = parse_face(face)

    boundary_nodes = source.boundary_nodes[face]
    if boundary_nodes.size == 0:
        raise GeometryError(f"face {face} of sector {source.sector_id} has no boundary nodes")

    target_boundary = set()
    for nodes in target.boundary_nodes.values():
        target_boundary.update(int(n) for n in nodes)

    inner_nodes, target_nodes, areas, inner_weights, sets = [], [], [], [], []
    for raw in boundary_nodes:
        raw = int(raw)
        faces = source.face_of(raw)
        if len(faces) > 1:
            raise GeometryError(
                f"node {source.nodes[raw].tolist()} of sector {source.sector_id} lies on faces {faces}; "
                "corner nodes shared by two physical faces are not supported"
            )
        coords = source.nodes[raw]
        target_raw = target.locate(_map_face_point(coords, axis, map_spec, target))
        if target.far_wall[target_raw] or target_raw in target_boundary:
            raise GeometryError(
                f"node {coords.tolist()} maps onto a boundary node of sector {target.sector_id}"
            )
        inner = source.inward_neighbor(raw, face)
        if source.far_wall[inner]:
            raise GeometryError(f"the inner neighbor of {coords.tolist()} is a far-wall node")

        cs = coefficients(coords) if callable(coefficients) else coefficients
        if cs.dims.r_boundary != source.fiber_dim or cs.dims.r_target != target.fiber_dim:
            raise StructuralError(
                f"coefficients act {cs.dims.r_boundary} -> {cs.dims.r_target}, "
                f"fibers are {source.fiber_dim} -> {target.fiber_dim}"
            )

        inner_nodes.append(inner)
        target_nodes.append(target_raw)
        areas.append(source.face_area_weight(raw, face))
        inner_weights.append(source.mu_weights[inner] / source.spacing[axis])
        sets.append(cs)

    target_nodes = np.array(target_nodes, dtype=int)
    areas = np.array(areas, dtype=float)
    nu_weights = areas / target.mu_weights[target_nodes]

    link = BoundaryLink(
        source=source,
        face=face,
        target=target,
        map_spec=map_spec,
        boundary_nodes=np.asarray(boundary_nodes, dtype=int),
        inner_nodes=np.array(inner_nodes, dtype=int),
        target_nodes=target_nodes,
        area_weights=areas,
        nu_weights=nu_weights,
        inner_weights=np.array(inner_weights, dtype=float),
        coefficients=sets,
        hbar=hbar,
    )

    mismatched = [
        cs.coupling_constant
        for cs in sets
        if abs(cs.coupling_constant - link.expected_coupling) > 1e-12 * link.expected_coupling
    ]
    if mismatched:
        msg.warn(
            f"Link {source.sector_id}{face} -> {target.sector_id}: K = {mismatched[0]} differs from "
            f"the {source.mass_convention} convention value {link.expected_coupling}"
        )
    return link
