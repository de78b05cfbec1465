from ibcsim.components.interfaces import Scenario
from ibcsim.components.model import ModelSpec, radial_creation_model
from ibcsim.components.types import InputNumber


class RadialCreationScenario(Scenario):
    """
    An x-particle at the origin emitting and absorbing one y-particle on the
    sphere of radius rho; sector 0 is the bare x-particle, sector 1 the s-wave
    of the emitted y-particle.
    """

    def __init__(self):
        super().__init__()
        self.name = "radial_creation"
        self.description = "Rho cut-off creation model truncated to 0 and 1 particles, spherically symmetric."
        self.config = {
            "g": InputNumber(type="number", value=1.0, description="Coupling constant (physics.g)"),
            "m_y": InputNumber(type="number", value=1.0, description="Mass of the created particle (physics.m_y)"),
            "rho": InputNumber(type="number", value=1.0, description="Emission radius (physics.rho)"),
            "E0": InputNumber(type="number", value=1.0, description="Rest energy per created particle (physics.E0)"),
            "R": InputNumber(type="number", value=15.0, description="Far-wall radius (grid.R)"),
        }

    def build(self, config) -> ModelSpec:
        physics = config.physics
        return radial_creation_model(
            g=physics.g,
            m_y=physics.m_y,
            rho=physics.rho,
            E0=physics.E0,
            R=config.grid.R,
            h=config.grid.h,
            hbar=physics.hbar,
            epsilon=config.coefficients.epsilon,
        )
