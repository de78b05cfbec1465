import numpy as np

from ibcsim.components.coefficients import RANK_TOL
from ibcsim.components.interfaces import BoundaryScheme, LinkReconstruction
from ibcsim.components.types import AssemblyError


def _invertible(matrix: np.ndarray) -> bool:
    if matrix.shape[0] != matrix.shape[1]:
        return False
    singular_values = np.linalg.svd(matrix, compute_uv=False)
    return singular_values[0] > 0 and singular_values[-1] > RANK_TOL * singular_values[0]


class RobinReconstruction(LinkReconstruction):
    def __init__(self, link, boundary_dofs, target_dofs):
        self.boundary_dofs = boundary_dofs
        self.target_dofs = target_dofs
        self.coefficients = link.coefficients
        self.r_boundary = link.source.fiber_dim
        self.r_target = link.target.fiber_dim
        self.value_scale = link.value_scale

    def boundary_values(self, amplitudes: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        n = len(self.boundary_dofs)
        psi_b = np.zeros((n, self.r_boundary), dtype=complex)
        dpsi_b = np.zeros((n, self.r_boundary), dtype=complex)
        for b, cs in enumerate(self.coefficients):
            i, t = self.boundary_dofs[b], self.target_dofs[b]
            psi_b[b] = amplitudes[i : i + self.r_boundary] / self.value_scale
            rhs = cs.coupling_constant * cs.iota @ amplitudes[t : t + self.r_target]
            dpsi_b[b] = np.linalg.solve(cs.beta, rhs - cs.alpha @ psi_b[b])
        return psi_b, dpsi_b


class RobinScheme(BoundaryScheme):
    """
    Ghost-node scheme for invertible beta: the boundary node stays a dof with half
    mu-weight and the ghost value is eliminated with the centered IBC.
    """

    def __init__(self):
        super().__init__()
        self.name = "RobinScheme"
        self.description = "Keeps boundary nodes (half weight), eliminates the ghost node through the IBC (beta invertible)."
        self.retains_boundary_nodes = True

    def applies_to(self, link) -> bool:
        return all(_invertible(cs.beta) for cs in link.coefficients)

    def assemble_link(self, link, index_map, kinetic, source) -> RobinReconstruction:
        c = link.kinetic_coefficient
        h = link.normal_spacing
        s = link.value_scale
        kappa = link.derivative_scale
        r_boundary = link.source.fiber_dim

        boundary_dofs, target_dofs = [], []
        for b, cs in enumerate(link.coefficients):
            if not _invertible(cs.beta):
                coords = link.source.nodes[link.boundary_nodes[b]].tolist()
                raise AssemblyError(
                    f"beta is not invertible at node {coords} of sector {link.source_id}"
                )
            beta_inv = np.linalg.inv(cs.beta)
            K = cs.coupling_constant
            boundary = index_map[(link.source_id, int(link.boundary_nodes[b]))]
            inner = index_map[(link.source_id, int(link.inner_nodes[b]))]
            target = index_map[(link.target_id, int(link.target_nodes[b]))]
            nu = link.nu_weights[b]

            # ghost: v_-1 = v_1 - (2h/kappa) beta^-1 (K iota psi_T - alpha v_0 / s)
            kinetic.add_block(
                boundary, boundary, -(2.0 * c / (h * kappa * s)) * beta_inv @ cs.alpha
            )
            kinetic.add_block(boundary, inner, -(c / h**2) * np.eye(r_boundary))
            kinetic.add_block(
                boundary, target, (2.0 * c * K / (h * kappa)) * beta_inv @ cs.iota
            )

            source.add_block(
                target, boundary, (nu / s) * (cs.gamma - cs.delta @ beta_inv @ cs.alpha)
            )
            source.add_block(target, target, (nu * K) * cs.delta @ beta_inv @ cs.iota)

            boundary_dofs.append(boundary)
            target_dofs.append(target)

        return RobinReconstruction(link, boundary_dofs, target_dofs)
