from typing import Literal, Optional

from pydantic import BaseModel, Field, field_validator, model_validator

from ibcsim.components.evolution import EvolutionConfig
from ibcsim.components.geometry import MapSpec, Sector
from ibcsim.components.types import ComplexMatrix, MassConvention


class PhysicsConfig(BaseModel):
    hbar: float = Field(default=1.0, gt=0)
    masses: list[float] = Field(default=[1.0], min_length=1, max_length=2)
    m_y: float = Field(default=1.0, gt=0)
    g: float = 1.0
    rho: float = Field(default=1.0, gt=0)
    E0: float = 1.0
    mass_convention: MassConvention = "explicit"

    @field_validator("masses")
    @classmethod
    def check_masses(cls, masses: list[float]) -> list[float]:
        if any(m <= 0 for m in masses):
            raise ValueError("masses must be positive")
        return masses


class GridConfig(BaseModel):
    h: float = Field(default=0.05, gt=0)
    extents: list[float] = Field(default=[20.0], min_length=1, max_length=2)
    R: float = Field(default=15.0, gt=0)

    @field_validator("extents")
    @classmethod
    def check_extents(cls, extents: list[float]) -> list[float]:
        if any(e <= 0 for e in extents):
            raise ValueError("extents must be positive")
        return extents


class CoefficientConfig(BaseModel):
    """
    dirichlet: alpha, gamma -> delta; robin: alpha, beta, delta -> gamma;
    explicit: all four given; creation: the rho cut-off table.
    A missing coupling_constant takes the value of the link's mass convention.
    """

    kind: Literal["dirichlet", "robin", "explicit", "creation"] = "dirichlet"
    alpha: Optional[ComplexMatrix] = None
    beta: Optional[ComplexMatrix] = None
    gamma: Optional[ComplexMatrix] = None
    delta: Optional[ComplexMatrix] = None
    coupling_constant: Optional[float] = None
    epsilon: float = 0.0

    @model_validator(mode="after")
    def check_required(self):
        required = {
            "dirichlet": ["alpha"],
            "robin": ["alpha", "beta", "delta"],
            "explicit": ["alpha", "beta", "gamma", "delta"],
            "creation": [],
        }[self.kind]
        missing = [name for name in required if getattr(self, name) is None]
        if missing:
            raise ValueError(f"{self.kind} coefficients need {missing}")
        return self


class InitialConfig(BaseModel):
    kind: Literal["gaussian", "ground_state", "sector", "zero"] = "gaussian"
    sector: Optional[int] = None
    center: list[float] = [4.0]
    width: float = Field(default=0.7, gt=0)
    momentum: list[float] = [-1.0]
    shift: float = 0.0


class EvolutionSettings(EvolutionConfig):
    dt: float = Field(default=0.01, gt=0)
    steps: int = Field(default=1000, ge=1)
    flux_rule: Literal["midpoint", "trapezoid"] = "trapezoid"


class OutputConfig(BaseModel):
    directory: str = "output"
    csv: str = "timeseries.csv"
    snapshots: Optional[str] = None
    snapshot_stride: int = Field(default=0, ge=0)
    refine_levels: int = Field(default=3, ge=1)


class LinkConfig(BaseModel):
    source: int
    face: str
    target: int
    map: MapSpec = MapSpec()
    coefficients: CoefficientConfig = CoefficientConfig(alpha=[[(1.0, 0.0)]])


class SectorConfig(BaseModel):
    sector: Sector
    spacing: Optional[list[float]] = None
    potential: Optional[Literal["harmonic"]] = None
    omega: float = 1.0
    offset: float = 0.0


class RunConfig(BaseModel):
    scenario: Literal["point_halfline", "line_halfplane", "radial_creation", "custom"]
    physics: PhysicsConfig = PhysicsConfig()
    grid: GridConfig = GridConfig()
    coefficients: CoefficientConfig = CoefficientConfig(alpha=[[(1.0, 0.0)]])
    initial: InitialConfig = InitialConfig()
    evolution: EvolutionSettings = EvolutionSettings()
    outputs: OutputConfig = OutputConfig()
    seed: int = 0
    sectors: list[SectorConfig] = []
    links: list[LinkConfig] = []

    @model_validator(mode="after")
    def check_scenario(self):
        if self.scenario == "custom" and not self.sectors:
            raise ValueError("the custom scenario needs at least one entry in sectors")
        if self.scenario != "custom" and (self.sectors or self.links):
            raise ValueError("sectors and links are only read by the custom scenario")
        if self.scenario == "point_halfline" and len(self.physics.masses) > 1:
            raise ValueError("physics.masses: point_halfline has one axis and takes one mass")
        return self
