from typing import Optional

import numpy as np

from ibcsim.components.coefficients import creation_coefficients, perturb_condition
from ibcsim.components.geometry import (
    BoundaryLink,
    MapSpec,
    Sector,
    SectorGrid,
    build_link,
)
from ibcsim.components.types import GeometryError, StructuralError


class ModelSpec:
    """
    Sectors, links and potentials of one multi-sector model.

    Potentials are sampled per raw grid node; offsets are constants added on a whole
    sector (n E0 on the n-particle sector).
    """

    def __init__(
        self,
        sectors: list[SectorGrid],
        links: list[BoundaryLink],
        hbar: float = 1.0,
        potentials: Optional[dict[int, np.ndarray]] = None,
        offsets: Optional[dict[int, float]] = None,
    ):
        if hbar <= 0:
            raise StructuralError(f"hbar must be positive, got {hbar}")
        self._sectors = list(sectors)
        self._links = list(links)
        self._hbar = float(hbar)
        self._potentials = dict(potentials or {})
        self._offsets = {int(k): float(v) for k, v in (offsets or {}).items()}
        self.validate()

    @property
    def sectors(self) -> list[SectorGrid]:
        return self._sectors

    @property
    def links(self) -> list[BoundaryLink]:
        return self._links

    @property
    def hbar(self) -> float:
        return self._hbar

    @property
    def potentials(self) -> dict[int, np.ndarray]:
        return self._potentials

    @property
    def offsets(self) -> dict[int, float]:
        return self._offsets

    def grid(self, sector_id: int) -> SectorGrid:
        for grid in self._sectors:
            if grid.sector_id == sector_id:
                return grid
        raise StructuralError(f"No sector with id {sector_id}")

    def validate(self):
        ids = [grid.sector_id for grid in self._sectors]
        if len(set(ids)) != len(ids):
            raise StructuralError(f"Sector ids must be unique, got {ids}")
        for link in self._links:
            for sector_id, grid in ((link.source_id, link.source), (link.target_id, link.target)):
                if sector_id not in ids or self.grid(sector_id) is not grid:
                    raise StructuralError(f"Link references sector {sector_id} outside the model")
        for sector_id, values in self._potentials.items():
            values = np.asarray(values)
            if np.iscomplexobj(values) and np.any(values.imag):
                raise StructuralError(f"Potential of sector {sector_id} must be real")
            if values.shape != (self.grid(sector_id).nodes.shape[0],):
                raise StructuralError(
                    f"Potential of sector {sector_id} has shape {values.shape}, "
                    f"expected one value per grid node"
                )
            self._potentials[sector_id] = np.asarray(values, dtype=float)
        for sector_id in self._offsets:
            self.grid(sector_id)

    def potential_on(self, sector_id: int) -> np.ndarray:
        """Node-sampled potential plus offset of one sector."""
        grid = self.grid(sector_id)
        values = self._potentials.get(sector_id)
        base = np.zeros(grid.nodes.shape[0]) if values is None else values
        return base + self._offsets.get(sector_id, 0.0)


def radial_creation_model(
    g: float,
    m_y: float,
    rho: float,
    E0: float,
    R: float,
    h: float,
    hbar: float = 1.0,
    epsilon: float = 0.0,
) -> ModelSpec:
    """
    Emission/absorption of one y-particle on the sphere |y| = rho, truncated to
    sectors 0 and 1 and reduced to s-waves with u(r) = r psi(r) on [rho, R].
    g = 0 leaves the sectors uncoupled with u(rho) = 0; epsilon scales delta by (1 + epsilon).
    """
    if not 0 < rho < R:
        raise GeometryError(f"need 0 < rho < R, got rho = {rho}, R = {R}")
    point = SectorGrid(Sector(id=0, kind="point"), [])
    faces = ["0-"] if g != 0 else []
    radial = SectorGrid(
        Sector(
            id=1,
            kind="radial",
            lower=[rho],
            upper=[R],
            physical_faces=faces,
            mass_factors=[m_y],
        ),
        h,
    )
    links = []
    if g != 0:
        links.append(
            build_link(
                radial,
                "0-",
                point,
                MapSpec(kind="radial"),
                perturb_condition(creation_coefficients(0, g, m_y, rho, hbar), epsilon),
                hbar=hbar,
            )
        )
    return ModelSpec([point, radial], links, hbar=hbar, offsets={1: E0})
