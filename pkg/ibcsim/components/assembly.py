from typing import Optional, TextIO, Union

import numpy as np
import scipy.sparse as sp
from wasabi import msg

from ibcsim.components.geometry import SectorGrid
from ibcsim.components.interfaces import LinkReconstruction
from ibcsim.components.managers import SchemeManager
from ibcsim.components.model import ModelSpec, radial_creation_model
from ibcsim.components.types import AssemblyError, StructuralError

HERMITIAN_REL_TOL = 1e-12


class OperatorBuilder:
    """Accumulates (row, col, value) triplets of a square sparse operator."""

    def __init__(self, size: int):
        self.size = size
        self.rows: list[int] = []
        self.cols: list[int] = []
        self.values: list[complex] = []

    def add(self, row: int, col: int, value: complex):
        self.rows.append(row)
        self.cols.append(col)
        self.values.append(value)

    def add_block(self, row: int, col: int, block: np.ndarray):
        block = np.atleast_2d(block)
        for i in range(block.shape[0]):
            for j in range(block.shape[1]):
                if block[i, j] != 0:
                    self.add(row + i, col + j, block[i, j])

    def tocsr(self) -> sp.csr_matrix:
        return sp.coo_matrix(
            (np.array(self.values, dtype=complex), (self.rows, self.cols)),
            shape=(self.size, self.size),
        ).tocsr()


class DiscreteHamiltonian:
    """
    Sparse H on all degrees of freedom with the IBCs folded in, together with the
    diagonal mu-weights W that define the inner product <phi, psi>_W = sum W conj(phi) psi.
    """

    def __init__(
        self,
        model: ModelSpec,
        H: sp.csr_matrix,
        W: np.ndarray,
        index_map: dict[tuple[int, int], int],
        dof_nodes: dict[int, np.ndarray],
        sector_slices: dict[int, slice],
        reconstructions: list[LinkReconstruction],
        source_operators: list[sp.csr_matrix],
    ):
        self._model = model
        self._H = H
        self._W = W
        self._index_map = index_map
        self._dof_nodes = dof_nodes
        self._sector_slices = sector_slices
        self._reconstructions = reconstructions
        self._source_operators = source_operators
        self._defect, self._relative_defect = hermiticity_defect(H, W)

    @property
    def model(self) -> ModelSpec:
        return self._model

    @property
    def H(self) -> sp.csr_matrix:
        return self._H

    @property
    def W(self) -> np.ndarray:
        return self._W

    @property
    def hbar(self) -> float:
        return self._model.hbar

    @property
    def size(self) -> int:
        return self._W.size

    @property
    def index_map(self) -> dict[tuple[int, int], int]:
        return self._index_map

    @property
    def sector_ids(self) -> list[int]:
        return list(self._sector_slices)

    @property
    def sector_slices(self) -> dict[int, slice]:
        return self._sector_slices

    @property
    def links(self):
        return self._model.links

    @property
    def reconstructions(self) -> list[LinkReconstruction]:
        return self._reconstructions

    @property
    def source_operators(self) -> list[sp.csr_matrix]:
        """Per link, the rows it adds to the target sector (the nu-weighted source term)."""
        return self._source_operators

    @property
    def hermiticity_defect(self) -> float:
        return self._defect

    @property
    def relative_hermiticity_defect(self) -> float:
        return self._relative_defect

    @property
    def hermitian(self) -> bool:
        return self._relative_defect <= HERMITIAN_REL_TOL

    def dof_nodes(self, sector_id: int) -> np.ndarray:
        """Raw grid indices of the dof nodes of a sector, in dof order."""
        return self._dof_nodes[sector_id]

    def coordinates(self, sector_id: int) -> np.ndarray:
        grid = self._model.grid(sector_id)
        return grid.nodes[self._dof_nodes[sector_id]]

    def weighted(self) -> sp.csr_matrix:
        return sp.diags(self._W) @ self._H

    def to_dict(self) -> dict:
        return {
            "size": self.size,
            "sectors": {sid: [s.start, s.stop] for sid, s in self._sector_slices.items()},
            "links": [link.to_dict() for link in self._model.links],
            "hermiticity_defect": self._defect,
            "relative_hermiticity_defect": self._relative_defect,
            "hermitian": self.hermitian,
        }


def hermiticity_defect(H: sp.spmatrix, W: np.ndarray) -> tuple[float, float]:
    """Absolute and relative max-norm of W H - (W H)^dagger."""
    weighted = sp.diags(W) @ H
    difference = (weighted - weighted.conj().T).tocoo()
    absolute = float(np.max(np.abs(difference.data))) if difference.nnz else 0.0
    weighted = weighted.tocoo()
    scale = float(np.max(np.abs(weighted.data))) if weighted.nnz else 0.0
    relative = absolute / scale if scale > 0 else absolute
    return absolute, relative


def _kinetic_rows(
    grid: SectorGrid,
    nodes: np.ndarray,
    index_map: dict,
    potential: np.ndarray,
    hbar: float,
    builder: OperatorBuilder,
):
    r = grid.fiber_dim
    sid = grid.sector_id
    for raw in nodes:
        raw = int(raw)
        row = index_map[(sid, raw)]
        diagonal = potential[raw]
        for axis in range(grid.dim):
            c = grid.kinetic_coefficient(axis, hbar)
            h2 = grid.spacing[axis] ** 2
            diagonal += 2.0 * c / h2
            for step in (-1, 1):
                neighbor = grid.neighbor(raw, axis, step)
                if neighbor is None or grid.far_wall[neighbor]:
                    continue
                col = index_map.get((sid, neighbor))
                if col is None:
                    # eliminated boundary node, coupled by its link
                    continue
                for k in range(r):
                    builder.add(row + k, col + k, -c / h2)
        for k in range(r):
            builder.add(row + k, row + k, diagonal)


def assemble(model: ModelSpec, schemes: Optional[SchemeManager] = None) -> DiscreteHamiltonian:
    """
    Assemble the IBC-coupled Hamiltonian of a model.

    @parameter: model : ModelSpec - Sectors, links, potentials
    @parameter: schemes : SchemeManager - Boundary schemes, selected per link by beta
    @returns DiscreteHamiltonian - H, W, dof layout and link reconstructions.
    """
    schemes = schemes or SchemeManager()

    linked = {}
    selected = []
    for link in model.links:
        key = (link.source_id, link.face)
        if key in linked:
            raise AssemblyError(f"Face {link.face} of sector {link.source_id} carries two links")
        scheme = schemes.select(link)
        linked[key] = scheme
        selected.append(scheme)

    for grid in model.sectors:
        for face in grid.boundary_nodes:
            if (grid.sector_id, face) not in linked:
                raise AssemblyError(
                    f"Physical face {face} of sector {grid.sector_id} has no link; "
                    "declare it a far wall or link it"
                )

    index_map: dict[tuple[int, int], int] = {}
    dof_nodes: dict[int, np.ndarray] = {}
    sector_slices: dict[int, slice] = {}
    weights = []
    offset = 0
    for grid in model.sectors:
        keep = np.zeros(grid.nodes.shape[0], dtype=bool)
        keep[grid.interior_nodes()] = True
        for face, nodes in grid.boundary_nodes.items():
            if linked[(grid.sector_id, face)].retains_boundary_nodes:
                keep[nodes] = True
        nodes = np.flatnonzero(keep)
        r = grid.fiber_dim
        start = offset
        for raw in nodes:
            index_map[(grid.sector_id, int(raw))] = offset
            offset += r
        dof_nodes[grid.sector_id] = nodes
        sector_slices[grid.sector_id] = slice(start, offset)
        weights.append(np.repeat(grid.mu_weights[nodes], r))

    size = offset
    if size == 0:
        raise AssemblyError("The model has no degrees of freedom")
    W = np.concatenate(weights)

    kinetic = OperatorBuilder(size)
    for grid in model.sectors:
        _kinetic_rows(
            grid,
            dof_nodes[grid.sector_id],
            index_map,
            model.potential_on(grid.sector_id),
            model.hbar,
            kinetic,
        )

    reconstructions, source_operators = [], []
    for link, scheme in zip(model.links, selected):
        source = OperatorBuilder(size)
        try:
            reconstructions.append(scheme.assemble_link(link, index_map, kinetic, source))
        except KeyError as error:
            raise AssemblyError(
                f"Link {link.source_id}{link.face} -> {link.target_id} refers to node {error} "
                "that is not a degree of freedom"
            )
        source_operators.append(source.tocsr())

    H = kinetic.tocsr()
    for operator in source_operators:
        H = H + operator
    H = H.tocsr()

    dh = DiscreteHamiltonian(
        model, H, W, index_map, dof_nodes, sector_slices, reconstructions, source_operators
    )
    if dh.hermitian:
        msg.good(
            f"Assembled H with {size} dofs, {len(model.links)} links "
            f"(weighted Hermiticity defect {dh.relative_hermiticity_defect:.2e})"
        )
    else:
        msg.warn(
            f"Assembled H with {size} dofs is NOT weighted-Hermitian: "
            f"defect {dh.hermiticity_defect:.3e} (relative {dh.relative_hermiticity_defect:.3e})"
        )
    return dh


def assemble_radial_creation(
    g: float,
    m_y: float,
    rho: float,
    E0: float,
    R: float,
    h: float,
    hbar: float = 1.0,
) -> DiscreteHamiltonian:
    """Assemble the truncated rho cut-off creation model (sectors 0 and 1, s-waves, u = r psi)."""
    return assemble(radial_creation_model(g, m_y, rho, E0, R, h, hbar))


def reconstruct_boundary(dh: DiscreteHamiltonian, state, link: int) -> tuple[np.ndarray, np.ndarray]:
    """
    Boundary values and unit-normal derivatives on one link.

    @parameter: dh : DiscreteHamiltonian - Assembled operator
    @parameter: state : MultiSectorState | ndarray - State or raw dof vector
    @parameter: link : int - Index of the link in the model
    @returns tuple[ndarray, ndarray] - psi_b and d_n psi_b per boundary node
    """
    amplitudes = getattr(state, "amplitudes", state)
    amplitudes = np.asarray(amplitudes)
    if amplitudes.shape != (dh.size,):
        raise StructuralError(f"State of shape {amplitudes.shape} does not match {dh.size} dofs")
    return dh.reconstructions[link].boundary_values(amplitudes)


def dump_matrix(dh: DiscreteHamiltonian, out: Union[str, TextIO]):
    """Write H in coordinate format: one 'row col re im' line per stored entry."""
    coo = dh.H.tocoo()
    order = np.lexsort((coo.col, coo.row))
    lines = [f"# {dh.size} {dh.size} {coo.nnz}"]
    for k in order:
        value = coo.data[k]
        lines.append(f"{coo.row[k]} {coo.col[k]} {value.real:.17g} {value.imag:.17g}")
    text = "\n".join(lines) + "\n"
    if isinstance(out, str):
        with open(out, "w", encoding="utf-8") as f:
            f.write(text)
    else:
        out.write(text)
