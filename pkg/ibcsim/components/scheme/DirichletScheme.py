import numpy as np

from ibcsim.components.coefficients import RANK_TOL
from ibcsim.components.interfaces import BoundaryScheme, LinkReconstruction
from ibcsim.components.types import AssemblyError


class DirichletReconstruction(LinkReconstruction):
    def __init__(self, link, target_dofs, inner_dofs, value_maps):
        self.target_dofs = target_dofs
        self.inner_dofs = inner_dofs
        self.value_maps = value_maps
        self.r_boundary = link.source.fiber_dim
        self.r_target = link.target.fiber_dim
        self.value_scale = link.value_scale
        self.derivative_scale = link.derivative_scale
        self.spacing = link.normal_spacing

    def boundary_values(self, amplitudes: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        n = len(self.target_dofs)
        psi_b = np.zeros((n, self.r_boundary), dtype=complex)
        dpsi_b = np.zeros((n, self.r_boundary), dtype=complex)
        for b in range(n):
            t, i = self.target_dofs[b], self.inner_dofs[b]
            psi_b[b] = self.value_maps[b] @ amplitudes[t : t + self.r_target]
            inner = amplitudes[i : i + self.r_boundary]
            dpsi_b[b] = (
                self.derivative_scale * (inner - self.value_scale * psi_b[b]) / self.spacing
            )
        return psi_b, dpsi_b


class DirichletScheme(BoundaryScheme):
    """
    One-sided elimination for beta = 0: boundary values follow from psi_b = K alpha^-1 psi_target
    and the normal derivative is the inward first difference.
    """

    def __init__(self):
        super().__init__()
        self.name = "DirichletScheme"
        self.description = "Eliminates boundary nodes through the IBC (beta = 0); one-sided normal difference in the source row."
        self.retains_boundary_nodes = False

    def applies_to(self, link) -> bool:
        return all(not np.any(cs.beta) for cs in link.coefficients)

    def assemble_link(self, link, index_map, kinetic, source) -> DirichletReconstruction:
        c = link.kinetic_coefficient
        h = link.normal_spacing
        s = link.value_scale
        kappa = link.derivative_scale

        target_dofs, inner_dofs, value_maps = [], [], []
        for b, cs in enumerate(link.coefficients):
            coords = link.source.nodes[link.boundary_nodes[b]].tolist()
            if cs.dims.r_aux:
                raise AssemblyError(
                    f"beta = 0 with r_aux = {cs.dims.r_aux} at node {coords} cannot satisfy the rank condition"
                )
            singular_values = np.linalg.svd(cs.alpha, compute_uv=False)
            if singular_values[-1] <= RANK_TOL * singular_values[0] or singular_values[0] == 0:
                raise AssemblyError(
                    f"alpha is singular at node {coords} of sector {link.source_id}: elimination breaks down"
                )

            value_map = cs.coupling_constant * np.linalg.inv(cs.alpha)
            target = index_map[(link.target_id, int(link.target_nodes[b]))]
            inner = index_map[(link.source_id, int(link.inner_nodes[b]))]
            nu = link.nu_weights[b]

            kinetic.add_block(inner, target, -(c / h**2) * s * value_map)
            source.add_block(target, inner, (nu * kappa / h) * cs.delta)
            source.add_block(
                target, target, nu * (cs.gamma - cs.delta * (kappa * s / h)) @ value_map
            )

            target_dofs.append(target)
            inner_dofs.append(inner)
            value_maps.append(value_map)

        return DirichletReconstruction(link, target_dofs, inner_dofs, value_maps)
