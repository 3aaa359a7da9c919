"""
Direct solves with Dirichlet constraints imposed by symmetric elimination
"""
import logging
from concurrent.futures import ThreadPoolExecutor, as_completed
from typing import Optional

import numpy as np
import scipy.sparse as sps
from scipy.sparse.linalg import splu

from errors import SingularSystemError

logger = logging.getLogger(__name__)

# Relative pivot size below which a factorization is reported as singular
PIVOT_TOLERANCE = 1e-14


def factorize(matrix, natural_order: bool = False):
    """
    Sparse LU with partial pivoting.

    natural_order keeps the column order, so a banded 1D matrix stays banded.
    Raises SingularSystemError with the smallest pivot magnitude when the factor is singular.
    """
    csc = sps.csc_matrix(matrix, dtype=complex)
    try:
        lu = splu(csc, permc_spec='NATURAL' if natural_order else 'COLAMD')
    except RuntimeError as e:
        raise SingularSystemError(f"Constrained system is singular ({e})", 0.0)
    pivots = np.abs(lu.U.diagonal())
    if pivots.size and pivots.min() <= PIVOT_TOLERANCE * pivots.max():
        raise SingularSystemError("Constrained system is numerically singular", float(pivots.min()))
    return lu


class DirichletSolver:
    """One factorization of the constrained matrix, reused for any number of right-hand sides"""

    def __init__(self, matrix, fixed_dofs, natural_order: bool = False):
        """
        Args:
            matrix: square system matrix on all dofs
            fixed_dofs: constrained dof indices; values passed to solve() follow this order
            natural_order: keep the natural ordering (1D band structure)
        """
        csr = sps.csr_matrix(matrix, dtype=complex)
        n = csr.shape[0]
        self.n_dofs = n
        self.fixed = np.asarray(fixed_dofs, dtype=int)
        if np.unique(self.fixed).size != self.fixed.size:
            raise ValueError("Constrained dofs must be distinct")
        self.free = np.setdiff1d(np.arange(n), self.fixed)
        self._coupling = csr[self.free][:, self.fixed]
        self._free_matrix = csr[self.free][:, self.free]
        self._lu = factorize(self._free_matrix, natural_order) if self.free.size else None

    def solve(self, fixed_values, load: Optional[np.ndarray] = None) -> np.ndarray:
        """
        Solve with prescribed values on the constrained dofs.

        fixed_values may be (n_fixed,) or (n_fixed, k) for k simultaneous right-hand sides.
        """
        values = np.asarray(fixed_values, dtype=complex)
        u = np.zeros((self.n_dofs,) + values.shape[1:], dtype=complex)
        u[self.fixed] = values
        if self._lu is None:
            return u
        rhs = -(self._coupling @ values)
        if load is not None:
            rhs = rhs + np.asarray(load)[self.free]
        u[self.free] = self._lu.solve(np.asarray(rhs, dtype=complex))
        return u

    def solve_many(self, fixed_values, max_workers: int = 1) -> np.ndarray:
        """Solve column blocks of a (n_fixed, k) right-hand side concurrently on the shared factor"""
        values = np.asarray(fixed_values, dtype=complex)
        k = values.shape[1]
        if max_workers <= 1 or k < 2:
            return self.solve(values)
        blocks = np.array_split(np.arange(k), min(max_workers, k))
        u = np.zeros((self.n_dofs, k), dtype=complex)
        with ThreadPoolExecutor(max_workers=max_workers) as executor:
            futures = {executor.submit(self.solve, values[:, cols]): cols for cols in blocks}
            for future in as_completed(futures):
                u[:, futures[future]] = future.result()
        return u


def solve_dirichlet(matrix, fixed_dofs, fixed_values, load: Optional[np.ndarray] = None,
                    natural_order: bool = True) -> np.ndarray:
    """Single solve; constrained dofs carry exactly the prescribed values"""
    return DirichletSolver(matrix, fixed_dofs, natural_order).solve(fixed_values, load)
