"""
2D cell problems on the unit periodicity cell
"""
import logging
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sps

from fem import DirichletSolver, PeriodicTriMesh, TransverseSpace, assemble_directional_helmholtz_2d
from media import CutVector, PeriodicCoefficient2D
from .dtn import DtnQuad

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class CellSolutions2D:
    """Columns p of E0 / E1 are the dof vectors of E0(phi_p) / E1(phi_p)"""
    mesh: PeriodicTriMesh
    space: TransverseSpace
    theta: CutVector
    omega: complex
    E0: np.ndarray  # (n_dofs, N)
    E1: np.ndarray  # (n_dofs, N)
    matrix: sps.csr_matrix

    def field(self, phi0: np.ndarray, phi1: np.ndarray) -> np.ndarray:
        """Dof vector of E0(phi0) + E1(phi1)"""
        return self.E0 @ phi0 + self.E1 @ phi1


def solve_cell_problems_2d(mu_p: PeriodicCoefficient2D, rho_p: PeriodicCoefficient2D, theta: CutVector,
                           omega, mesh: PeriodicTriMesh, max_workers: int = 1) -> CellSolutions2D:
    """
    Solve -D(mu_p D E) - rho_p omega^2 E = 0, D = theta . grad, for every transverse basis function.

    E0(phi_p) has trace phi_p on y2 = 0 and 0 on y2 = 1; E1(phi_p) the reverse.
    All 2N solves share one factorization.
    """
    w = complex(getattr(omega, 'omega', omega))
    matrix = assemble_directional_helmholtz_2d(mu_p, rho_p, theta, w, mesh)
    fixed = np.concatenate([mesh.bottom_dofs, mesh.top_dofs])
    solver = DirichletSolver(matrix, fixed)

    n = mesh.bottom_dofs.size
    eye, zero = np.eye(n), np.zeros((n, n))
    data = np.block([[eye, zero], [zero, eye]])
    values = solver.solve_many(data, max_workers)
    logger.info(f"Solved 2D cell problems: m={mesh.m}, {mesh.n_dofs} dofs, {2 * n} right-hand sides")
    return CellSolutions2D(
        mesh=mesh,
        space=mesh.transverse_space(),
        theta=theta,
        omega=w,
        E0=values[:, :n],
        E1=values[:, n:],
        matrix=matrix,
    )


def assemble_dtn_quad_2d(cells: CellSolutions2D) -> DtnQuad:
    """T^{jk}[p, q] = E^k(phi_p)^H A E^j(phi_q)"""
    basis = (cells.E0, cells.E1)
    blocks = {}
    for j in (0, 1):
        applied = cells.matrix @ basis[j]
        for k in (0, 1):
            blocks[f"T{j}{k}"] = basis[k].conj().T @ applied
    return DtnQuad(omega=cells.omega, method='2d', **blocks)
