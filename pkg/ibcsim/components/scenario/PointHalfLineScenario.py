from wasabi import msg

from ibcsim.components.geometry import MapSpec, Sector, SectorGrid, build_link
from ibcsim.components.interfaces import Scenario
from ibcsim.components.model import ModelSpec
from ibcsim.components.types import InputNumber


class PointHalfLineScenario(Scenario):
    """
    A point sector (id 0) fed by the endpoint x = 0 of a half-line sector (id 1)
    truncated at x = L.
    """

    def __init__(self):
        super().__init__()
        self.name = "point_halfline"
        self.description = "Point sector coupled to the endpoint of a half-line [0, L] through a scalar IBC."
        self.config = {
            "L": InputNumber(type="number", value=20.0, description="Length of the half-line (grid.extents[0])"),
            "h": InputNumber(type="number", value=0.05, description="Grid spacing (grid.h)"),
            "mass": InputNumber(type="number", value=1.0, description="Particle mass (physics.masses[0])"),
        }

    def build(self, config) -> ModelSpec:
        physics, grid = config.physics, config.grid
        hbar = physics.hbar
        length = grid.extents[0]
        coupled = physics.g != 0

        point = SectorGrid(Sector(id=0, kind="point"), [])
        half_line = SectorGrid(
            Sector(
                id=1,
                kind="interval",
                lower=[0.0],
                upper=[length],
                physical_faces=["0-"] if coupled else [],
                mass_factors=[physics.masses[0]],
            ),
            grid.h,
            physics.mass_convention,
        )
        if not coupled:
            msg.info("g = 0: the half-line endpoint is a plain Dirichlet wall")
            return ModelSpec([point, half_line], [], hbar=hbar)

        coefficients = self.coefficients(
            config.coefficients, half_line.expected_coupling("0-", hbar)
        )
        link = build_link(half_line, "0-", point, MapSpec(), coefficients, hbar=hbar)
        return ModelSpec([point, half_line], [link], hbar=hbar)
