from pydantic import ValidationError
from wasabi import msg

from ibcsim.components.interfaces import BoundaryScheme, Scenario
from ibcsim.components.types import AssemblyError, ConfigError

from ibcsim.components.scheme.DirichletScheme import DirichletScheme
from ibcsim.components.scheme.RobinScheme import RobinScheme

from ibcsim.components.scenario.PointHalfLineScenario import PointHalfLineScenario
from ibcsim.components.scenario.LineHalfPlaneScenario import LineHalfPlaneScenario
from ibcsim.components.scenario.RadialCreationScenario import RadialCreationScenario
from ibcsim.components.scenario.CustomScenario import CustomScenario


class SchemeManager:
    def __init__(self):
        self.schemes: dict[str, BoundaryScheme] = {
            "DirichletScheme": DirichletScheme(),
            "RobinScheme": RobinScheme(),
        }

    def select(self, link) -> BoundaryScheme:
        """Pick the scheme matching beta on every node of link (beta = 0 or beta invertible)."""
        for scheme in self.schemes.values():
            if scheme.applies_to(link):
                return scheme
        raise AssemblyError(
            f"Link {link.source_id}{link.face} -> {link.target_id}: beta must be 0 at every node "
            "or invertible at every node; other ranks have no supported scheme"
        )


class ScenarioManager:
    def __init__(self):
        self.scenarios: dict[str, Scenario] = {
            "point_halfline": PointHalfLineScenario(),
            "line_halfplane": LineHalfPlaneScenario(),
            "radial_creation": RadialCreationScenario(),
            "custom": CustomScenario(),
        }
        self.selected_scenario: str = "point_halfline"

    def build(self, config):
        """Build the ModelSpec of config.scenario."""
        self.set_scenario(config.scenario)
        try:
            return self.scenarios[self.selected_scenario].build(config)
        except ValidationError as error:
            diagnostics = [
                f"{'.'.join(str(part) for part in e['loc']) or error.title}: {e['msg']}"
                for e in error.errors()
            ]
            msg.warn(f"Scenario {config.scenario} rejected its parameters")
            raise ConfigError(
                f"Scenario {config.scenario!r} cannot be built from this configuration", diagnostics
            )

    def set_scenario(self, scenario: str) -> bool:
        if scenario in self.scenarios:
            if scenario != self.selected_scenario:
                msg.info(f"Setting SCENARIO to {scenario}")
            self.selected_scenario = scenario
            return True
        msg.warn(f"Scenario {scenario} not found")
        raise ConfigError(
            f"Unknown scenario {scenario!r}", [f"scenario: expected one of {list(self.scenarios)}"]
        )

    def get_scenarios(self) -> dict[str, Scenario]:
        return self.scenarios

    def selected(self) -> Scenario:
        return self.scenarios[self.selected_scenario]
