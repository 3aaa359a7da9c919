"""
The quadruple of local DtN matrices shared by both discretizations
"""
import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np

from errors import AssemblyError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class DtnQuad:
    """T^{jk}[p, q] = <T^{jk} phi_q, phi_p> on a transverse space with N dofs"""
    T00: np.ndarray
    T01: np.ndarray
    T10: np.ndarray
    T11: np.ndarray
    omega: complex
    method: str  # '2d' or 'quasi1d'

    def __post_init__(self):
        n = self.T00.shape[0]
        for name in ('T00', 'T01', 'T10', 'T11'):
            block = getattr(self, name)
            if block.shape != (n, n):
                raise AssemblyError(f"{name} has shape {block.shape}, expected ({n}, {n})", module='riccati')
            if not np.all(np.isfinite(block)):
                raise AssemblyError(f"{name} has non-finite entries", module=f"cell-dtn-{self.method}")

    @property
    def n(self) -> int:
        return self.T00.shape[0]

    def block(self, j: int, k: int) -> np.ndarray:
        return getattr(self, f"T{j}{k}")

    def coercivity_defect(self, n_vectors: int = 100, seed: int = 0) -> float:
        """
        Largest Im(<T^{kk} phi, phi> / omega) over random real vectors, k = 0, 1.

        A negative result means the sign property holds on every sampled vector.
        """
        phi = np.random.default_rng(seed).standard_normal((self.n, n_vectors))
        worst = -np.inf
        for block in (self.T00, self.T11):
            forms = np.einsum('pv,pq,qv->v', phi, block, phi) / self.omega
            scale = np.einsum('pv,pv->v', phi, phi)
            worst = max(worst, float(np.max(forms.imag / scale)))
        return worst


def dtn_quad_distance(first: DtnQuad, second: DtnQuad, test_vectors: Optional[np.ndarray] = None) -> float:
    """
    max over blocks of ||A - B||_2 / ||B||_2.

    With test_vectors V of shape (N, m) the blocks are compared on those columns,
    ||(A - B) V||_F / ||B V||_F.
    """
    if first.n != second.n:
        raise ValueError(f"Quadruples differ in size: {first.n} vs {second.n}")
    distances = []
    for j in (0, 1):
        for k in (0, 1):
            a, b = first.block(j, k), second.block(j, k)
            if test_vectors is None:
                distances.append(np.linalg.norm(a - b, 2) / np.linalg.norm(b, 2))
            else:
                distances.append(np.linalg.norm((a - b) @ test_vectors) / np.linalg.norm(b @ test_vectors))
    return float(max(distances))
