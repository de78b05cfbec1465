import numpy as np
from wasabi import msg

from ibcsim.components.coefficients import (
    CoefficientSet,
    complete_coefficients,
    make_dirichlet,
    perturb_condition,
)
from ibcsim.components.types import ConfigError, InputNumber, pairs_to_matrix


class IBCComponent:
    """
    Base Class for ibcsim Scenarios and Boundary Schemes.
    """

    def __init__(self):
        self.name = ""
        self.description = ""
        self.config: dict[str, InputNumber] = {}
        self.type = ""

    def get_meta(self) -> dict:
        _metadata = {
            "name": self.name,
            "description": self.description,
            "type": self.type,
            "config": {_c: self.config[_c].model_dump() for _c in self.config},
        }
        return _metadata


class LinkReconstruction:
    """
    Recovers boundary values and unit-normal derivatives of one link from the dof vector.
    """

    def boundary_values(self, amplitudes: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """
        @parameter: amplitudes : ndarray - Global dof vector
        @returns tuple[ndarray, ndarray] - psi_b and d_n psi_b, shape (nodes, r_boundary)
        """
        raise NotImplementedError(
            "boundary_values method must be implemented by a subclass."
        )


class BoundaryScheme(IBCComponent):
    """
    Interface for the discretization of one IBC-coupled face.
    """

    def __init__(self):
        super().__init__()
        self.type = "SCHEME"
        self.retains_boundary_nodes = False

    def applies_to(self, link) -> bool:
        """Whether every node's beta has the rank this scheme handles."""
        raise NotImplementedError("applies_to method must be implemented by a subclass.")

    def assemble_link(
        self, link, index_map: dict, kinetic, source
    ) -> LinkReconstruction:
        """Write the IBC couplings of link.

        @parameter: link : BoundaryLink - Discretized face and map
        @parameter: index_map : dict - (sector id, raw node) -> first dof index
        @parameter: kinetic : OperatorBuilder - Receives kinetic-row couplings
        @parameter: source : OperatorBuilder - Receives the target-sector source rows
        @returns LinkReconstruction - Boundary data recovery for diagnostics.
        """
        raise NotImplementedError(
            "assemble_link method must be implemented by a subclass."
        )


class Scenario(IBCComponent):
    """
    Interface for ready-made multi-sector models.
    """

    def __init__(self):
        super().__init__()
        self.type = "SCENARIO"

    def build(self, config):
        """Build the model described by a run configuration.

        @parameter: config : RunConfig - Parsed run configuration
        @returns ModelSpec - Sectors, links, potentials and hbar.
        """
        raise NotImplementedError("build method must be implemented by a subclass.")

    def source_sector(self, config) -> int:
        """Sector that holds the initial packet when the configuration does not say."""
        return 1

    def coefficients(self, settings, coupling: float) -> CoefficientSet:
        """Build the CoefficientSet of a CoefficientConfig.

        @parameter: settings : CoefficientConfig - Constructor kind and matrices
        @parameter: coupling : float - K of the link's convention, used when settings gives none
        @returns CoefficientSet
        """
        K = settings.coupling_constant if settings.coupling_constant is not None else coupling
        alpha = pairs_to_matrix(settings.alpha) if settings.alpha is not None else None
        if settings.kind == "dirichlet":
            gamma = (
                pairs_to_matrix(settings.gamma)
                if settings.gamma is not None
                else np.zeros_like(alpha)
            )
            cs = make_dirichlet(alpha, gamma, K)
        elif settings.kind == "robin":
            cs = complete_coefficients(
                alpha, pairs_to_matrix(settings.beta), pairs_to_matrix(settings.delta), K
            )
        elif settings.kind == "explicit":
            cs = CoefficientSet(
                alpha,
                pairs_to_matrix(settings.beta),
                pairs_to_matrix(settings.gamma),
                pairs_to_matrix(settings.delta),
                coupling_constant=K,
            )
        else:
            raise ConfigError(
                f"{settings.kind} coefficients only apply to the radial_creation scenario",
                ["coefficients.kind"],
            )
        if settings.epsilon:
            msg.warn(f"Perturbing delta by (1 + {settings.epsilon}): conditions will fail")
            cs = perturb_condition(cs, settings.epsilon)
        return cs
