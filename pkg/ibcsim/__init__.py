from ibcsim.components.assembly import (
    DiscreteHamiltonian,
    assemble,
    assemble_radial_creation,
    dump_matrix,
    reconstruct_boundary,
)
from ibcsim.components.coefficients import (
    CoefficientSet,
    ConditionReport,
    FiberDims,
    check_conditions,
    complete_coefficients,
    creation_coefficients,
    make_dirichlet,
    perturb_condition,
)
from ibcsim.components.diagnostics import (
    BalanceReport,
    balance_residual,
    boundary_flux,
    norm_drift_rate,
    sector_probabilities,
    target_gain,
)
from ibcsim.components.evolution import (
    CrankNicolsonPropagator,
    EvolutionConfig,
    MultiSectorState,
    energy,
    ground_state,
    step_crank_nicolson,
)
from ibcsim.components.geometry import (
    BoundaryLink,
    MapSpec,
    Sector,
    SectorGrid,
    build_link,
    nu_density_diffeo,
    nu_density_general,
)
from ibcsim.components.model import ModelSpec, radial_creation_model
