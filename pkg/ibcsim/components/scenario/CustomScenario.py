import numpy as np

from ibcsim.components.geometry import SectorGrid, build_link
from ibcsim.components.interfaces import Scenario
from ibcsim.components.model import ModelSpec
from ibcsim.components.types import ConfigError


class CustomScenario(Scenario):
    """
    Sectors and links given as tables in the run configuration.
    """

    def __init__(self):
        super().__init__()
        self.name = "custom"
        self.description = "User-defined sectors, faces, maps and coefficient tables."

    def source_sector(self, config) -> int:
        for entry in config.sectors:
            if entry.sector.dim > 0:
                return entry.sector.id
        return config.sectors[0].sector.id

    def build(self, config) -> ModelSpec:
        physics = config.physics
        hbar = physics.hbar

        grids, potentials, offsets = {}, {}, {}
        for entry in config.sectors:
            sector = entry.sector
            spacing = entry.spacing if entry.spacing is not None else [config.grid.h] * sector.dim
            grid = SectorGrid(sector, spacing, physics.mass_convention)
            grids[sector.id] = grid
            if entry.potential == "harmonic":
                masses = np.array(sector.mass_factors)
                potentials[sector.id] = 0.5 * entry.omega**2 * np.sum(
                    masses * grid.nodes**2, axis=1
                )
            if entry.offset:
                offsets[sector.id] = entry.offset

        links = []
        for position, entry in enumerate(config.links):
            if entry.source not in grids or entry.target not in grids:
                raise ConfigError(
                    f"Link {position} refers to an undefined sector",
                    [f"links.{position}: sectors are {sorted(grids)}"],
                )
            source, target = grids[entry.source], grids[entry.target]
            coefficients = self.coefficients(
                entry.coefficients, source.expected_coupling(entry.face, hbar)
            )
            links.append(
                build_link(source, entry.face, target, entry.map, coefficients, hbar=hbar)
            )
        return ModelSpec(list(grids.values()), links, hbar, potentials, offsets)
