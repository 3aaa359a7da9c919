"""
Quasi-1D cell problems
Solves the 1D cell problems along the cut for each transverse dof, samples the
local DtN functions and assembles the DtN matrices as weighted translations
"""
import math
import logging
import threading
from concurrent.futures import ThreadPoolExecutor, as_completed
from dataclasses import dataclass
from typing import Callable, Dict, List, Optional, Sequence

import numpy as np
import scipy.sparse as sps

from errors import QuasiHelmError
from fem import (DirichletSolver, FEFunction1D, Mesh1D, TransverseSpace,
                 assemble_helmholtz_1d, subdivided_gauss_points)
from media import CutVector, PeriodicCoefficient2D, line_trace, wrap_unit
from .dtn import DtnQuad

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class CellSolutions1D:
    """e0 and e1 on (0, 1/theta2) for one transverse offset s"""
    s: float
    e0: FEFunction1D
    e1: FEFunction1D
    matrix: sps.csr_matrix  # cell Helmholtz matrix, used for the local DtN integrals
    theta: CutVector

    @property
    def h_theta(self) -> float:
        return float(self.e0.mesh.element_sizes.max())

    def local_dtn(self) -> np.ndarray:
        """t[j, k] = theta2 * int (mu e^j' conj(e^k)' - rho omega^2 e^j conj(e^k))"""
        basis = (self.e0.coefficients, self.e1.coefficients)
        t = np.empty((2, 2), dtype=complex)
        for j in (0, 1):
            applied = self.matrix @ basis[j]
            for k in (0, 1):
                t[j, k] = self.theta.theta2 * np.vdot(basis[k], applied)
        return t


def cell_mesh(theta: CutVector, h_theta: float, order: int = 1) -> Mesh1D:
    """Uniform mesh of (0, 1/theta2) with step <= h_theta"""
    length = theta.cell_length
    return Mesh1D.uniform(0.0, length, max(1, math.ceil(length / h_theta - 1e-9)), order)


def solve_cell_problems_1d(s: float, mu_p: PeriodicCoefficient2D, rho_p: PeriodicCoefficient2D,
                           theta: CutVector, omega, mesh_theta: Mesh1D) -> CellSolutions1D:
    """
    Discrete e0, e1 for -(mu e')' - rho omega^2 e = 0 with (e0, e1) = (1, 0) and (0, 1)
    at the ends of (0, 1/theta2).

    Both problems share one factorization.
    """
    length = theta.cell_length
    if abs(mesh_theta.x_min) > 1e-12 or abs(mesh_theta.x_max - length) > 1e-12 * length:
        raise ValueError(f"Cell mesh must span (0, {length}), got ({mesh_theta.x_min}, {mesh_theta.x_max})")
    s = float(wrap_unit(s))
    matrix = assemble_helmholtz_1d(line_trace(mu_p, theta, s), line_trace(rho_p, theta, s), omega, mesh_theta)
    last = mesh_theta.n_dofs - 1
    solver = DirichletSolver(matrix, [0, last], natural_order=True)
    values = solver.solve(np.eye(2))
    return CellSolutions1D(
        s=s,
        e0=FEFunction1D(mesh_theta, values[:, 0]),
        e1=FEFunction1D(mesh_theta, values[:, 1]),
        matrix=matrix,
        theta=theta,
    )


@dataclass(frozen=True)
class LocalDtnFunctions:
    """Nodal samples t^{jk}(s_p) interpolated in the transverse space"""
    samples: np.ndarray  # (2, 2, N) complex
    space: TransverseSpace

    def evaluate(self, j: int, k: int, s) -> np.ndarray:
        return self.space.evaluate(self.samples[j, k], s)

    def periodic_samples(self, j: int, k: int) -> np.ndarray:
        """Samples at s_0 .. s_N, the last one being the identified copy of s_0"""
        values = self.samples[j, k]
        return np.append(values, values[0])


def local_dtn_samples(cells: Sequence[CellSolutions1D], space: TransverseSpace) -> LocalDtnFunctions:
    if len(cells) != space.n_dofs:
        raise ValueError(f"Need one cell solution per transverse dof ({space.n_dofs}), got {len(cells)}")
    samples = np.stack([cell.local_dtn() for cell in cells], axis=-1)
    samples.setflags(write=False)
    return LocalDtnFunctions(samples=samples, space=space)


def compute_cell_family(s_values, mu_p: PeriodicCoefficient2D, rho_p: PeriodicCoefficient2D,
                        theta: CutVector, omega, mesh_theta: Mesh1D,
                        max_workers: int = 1) -> List[CellSolutions1D]:
    """
    Solve the cell problems at every offset in s_values, concurrently.

    Results keep the order of s_values.
    """
    s_values = list(s_values)
    results: List[Optional[CellSolutions1D]] = [None] * len(s_values)
    if max_workers <= 1:
        for i, s in enumerate(s_values):
            results[i] = solve_cell_problems_1d(s, mu_p, rho_p, theta, omega, mesh_theta)
        return results

    with ThreadPoolExecutor(max_workers=max_workers) as executor:
        futures = {executor.submit(solve_cell_problems_1d, s, mu_p, rho_p, theta, omega, mesh_theta): i
                   for i, s in enumerate(s_values)}
        for future in as_completed(futures):
            i = futures[future]
            try:
                results[i] = future.result()
            except QuasiHelmError as e:
                logger.error(f"Cell problem failed at s={s_values[i]:.6f}: {e}")
                raise
    logger.debug(f"Solved {len(s_values)} 1D cell problems ({mesh_theta.n_dofs} dofs each)")
    return results


class FreshLocalDtn:
    """
    t^{jk} evaluated by solving a new cell problem at every requested offset.

    Used instead of interpolation of nodal samples for convergence diagnostics.
    """

    def __init__(self, mu_p, rho_p, theta: CutVector, omega, mesh_theta: Mesh1D, max_workers: int = 1):
        self.mu_p = mu_p
        self.rho_p = rho_p
        self.theta = theta
        self.omega = omega
        self.mesh_theta = mesh_theta
        self.max_workers = max_workers
        self._cache: Dict[float, np.ndarray] = {}
        self._lock = threading.Lock()

    def __call__(self, j: int, k: int, s) -> np.ndarray:
        s = wrap_unit(s)
        unique = np.unique(s)
        with self._lock:
            missing = [v for v in unique if float(v) not in self._cache]
        if missing:
            cells = compute_cell_family(missing, self.mu_p, self.rho_p, self.theta, self.omega,
                                        self.mesh_theta, self.max_workers)
            with self._lock:
                for value, cell in zip(missing, cells):
                    self._cache[float(value)] = cell.local_dtn()
        table = np.array([self._cache[float(v)][j, k] for v in unique])
        return table[np.searchsorted(unique, s)]


def transverse_breakpoints(space: TransverseSpace, shift: float) -> np.ndarray:
    """Element vertices of the space together with their translates by +-shift, mod 1"""
    vertices = space.element_vertices()
    return np.unique(np.concatenate([vertices, wrap_unit(vertices + shift), wrap_unit(vertices - shift), [0.0, 1.0]]))


def assemble_dtn_quad_quasi1d(t: LocalDtnFunctions, space: TransverseSpace, theta: CutVector, omega,
                              evaluator: Optional[Callable] = None) -> DtnQuad:
    """
    <T^{jk} phi_q, phi_p> = int_0^1 t^{jk}(s - k*beta) phi_q(s + (j - k)*beta) phi_p(s) ds, beta = theta1/theta2.

    The composite Gauss rule uses the breakpoints of both translated grids, so every
    factor is polynomial on each piece.

    Args:
        evaluator: optional (j, k, s) -> t^{jk}(s); defaults to interpolation of the samples
    """
    evaluate = evaluator or t.evaluate
    beta = theta.slope
    n = space.n_dofs
    points, weights = subdivided_gauss_points(transverse_breakpoints(space, beta), 2 * space.order + 1)
    dofs_p, vals_p = space.basis_at(points)

    blocks = {}
    for j in (0, 1):
        for k in (0, 1):
            weighted = weights * evaluate(j, k, points - k * beta)
            dofs_q, vals_q = space.basis_at(points + (j - k) * beta)
            shape = (points.size, vals_p.shape[1], vals_q.shape[1])
            rows = np.broadcast_to(dofs_p[:, :, None], shape)
            cols = np.broadcast_to(dofs_q[:, None, :], shape)
            contributions = weighted[:, None, None] * vals_p[:, :, None] * vals_q[:, None, :]
            block = np.zeros((n, n), dtype=complex)
            np.add.at(block, (rows, cols), contributions)
            blocks[f"T{j}{k}"] = block

    logger.info(f"Assembled quasi-1D DtN matrices: N={n}, {points.size} quadrature nodes")
    return DtnQuad(omega=complex(getattr(omega, 'omega', omega)), method='quasi1d', **blocks)
