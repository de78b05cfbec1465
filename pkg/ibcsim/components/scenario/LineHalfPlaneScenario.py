from wasabi import msg

from ibcsim.components.geometry import MapSpec, Sector, SectorGrid, build_link
from ibcsim.components.interfaces import Scenario
from ibcsim.components.model import ModelSpec
from ibcsim.components.types import InputNumber


class LineHalfPlaneScenario(Scenario):
    """
    A line sector (id 0) on [-a, a] fed by the edge y = 0 of the half-plane
    sector (id 1) on [-a, a] x [0, L], linked by dropping y.
    """

    def __init__(self):
        super().__init__()
        self.name = "line_halfplane"
        self.description = "Line sector coupled to the edge of a half-plane through the identity projection."
        self.config = {
            "a": InputNumber(type="number", value=4.0, description="Half width in x (grid.extents[0])"),
            "L": InputNumber(type="number", value=8.0, description="Height of the half-plane (grid.extents[1])"),
            "h": InputNumber(type="number", value=0.1, description="Grid spacing (grid.h)"),
        }

    def build(self, config) -> ModelSpec:
        physics, grid = config.physics, config.grid
        hbar = physics.hbar
        half_width = grid.extents[0]
        height = grid.extents[1] if len(grid.extents) > 1 else grid.extents[0]
        masses = physics.masses if len(physics.masses) > 1 else physics.masses * 2
        coupled = physics.g != 0

        line = SectorGrid(
            Sector(
                id=0,
                kind="interval",
                lower=[-half_width],
                upper=[half_width],
                mass_factors=[masses[0]],
            ),
            grid.h,
            physics.mass_convention,
        )
        half_plane = SectorGrid(
            Sector(
                id=1,
                kind="box",
                lower=[-half_width, 0.0],
                upper=[half_width, height],
                physical_faces=["1-"] if coupled else [],
                mass_factors=masses[:2],
            ),
            grid.h,
            physics.mass_convention,
        )
        if not coupled:
            msg.info("g = 0: the half-plane edge is a plain Dirichlet wall")
            return ModelSpec([line, half_plane], [], hbar=hbar)

        coefficients = self.coefficients(
            config.coefficients, half_plane.expected_coupling("1-", hbar)
        )
        link = build_link(half_plane, "1-", line, MapSpec(), coefficients, hbar=hbar)
        return ModelSpec([line, half_plane], [link], hbar=hbar)
