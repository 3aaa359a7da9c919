"""
Spectral solution of the discrete constrained Riccati equation
T10 P^2 + (T00 + T11) P + T01 = 0 with spectral radius of P below one
"""
import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np
import scipy.linalg

from cells import DtnQuad
from errors import (DiagonalizabilityError, PairingError, QepError, RiccatiResidualError,
                    SelectionError)

logger = logging.getLogger(__name__)

# Relative smallest singular value of T10 below which B is treated as singular
SINGULAR_T10_TOLERANCE = 1e-13
PAIRING_TOLERANCE = 1e-6
UNIT_CIRCLE_MARGIN = 1e-8
CONDITION_THRESHOLD = 1e12
RESIDUAL_TOLERANCE = 1e-6
EIGEN_RESIDUAL_TOLERANCE = 1e-10


def canonical_order(eigenvalues: np.ndarray) -> np.ndarray:
    """Indices sorting eigenvalues by (|lambda|, arg lambda)"""
    return np.lexsort((np.angle(eigenvalues), np.abs(eigenvalues)))


def _normalize_columns(vectors: np.ndarray) -> np.ndarray:
    """Unit 2-norm columns whose largest entry is real positive"""
    norms = np.linalg.norm(vectors, axis=0)
    vectors = vectors / norms
    pivot = vectors[np.argmax(np.abs(vectors), axis=0), np.arange(vectors.shape[1])]
    return vectors * (np.abs(pivot) / pivot)


def pairing_defect(eigenvalues: np.ndarray) -> float:
    """
    Largest min over lambda' of |lambda lambda' - 1| / (1 + |lambda|^2).

    Zero when the multiset is closed under lambda -> 1/lambda.
    """
    lam = np.asarray(eigenvalues)
    products = np.abs(lam[:, None] * lam[None, :] - 1.0)
    np.fill_diagonal(products, np.inf)
    # a lambda with |lambda| = 1 may pair with itself
    self_pair = np.abs(lam * lam - 1.0)
    best = np.minimum(products.min(axis=1), np.where(np.isclose(np.abs(lam), 1.0), self_pair, np.inf))
    return float(np.max(best / (1.0 + np.abs(lam) ** 2)))


@dataclass(frozen=True)
class QepSpectrum:
    """All 2N eigenpairs of lambda^2 T10 + lambda (T00 + T11) + T01, canonically ordered"""
    eigenvalues: np.ndarray  # (2N,)
    eigenvectors: np.ndarray  # (N, 2N), columns psi_i
    residuals: np.ndarray  # relative linearization residual per pair
    n: int

    @property
    def pairing_defect(self) -> float:
        return pairing_defect(self.eigenvalues)

    @property
    def paired(self) -> bool:
        return self.pairing_defect <= PAIRING_TOLERANCE

    @property
    def inside_count(self) -> int:
        return int(np.count_nonzero(np.abs(self.eigenvalues) < 1.0))

    def nearest_unit_circle(self, count: int = 4) -> np.ndarray:
        order = np.argsort(np.abs(np.abs(self.eigenvalues) - 1.0))
        return self.eigenvalues[order[:count]]


def companion_pencil(T: DtnQuad):
    """A = [[0, I], [-T01, -(T00 + T11)]], B = [[I, 0], [0, T10]]"""
    n = T.n
    eye, zero = np.eye(n), np.zeros((n, n))
    A = np.block([[zero, eye], [-T.T01, -(T.T00 + T.T11)]])
    B = np.block([[eye, zero], [zero, T.T10]])
    return A, B


def solve_qep(T: DtnQuad, strict_pairing: bool = False) -> QepSpectrum:
    """
    All eigenpairs of the quadratic pencil through the companion linearization A z = lambda B z,
    z = (psi, lambda psi).

    A pairing defect above PAIRING_TOLERANCE raises PairingError when strict_pairing is set
    and is logged otherwise; QepSpectrum.paired records the outcome either way.
    """
    n = T.n
    singular_values = np.linalg.svd(T.T10, compute_uv=False)
    if singular_values[-1] <= SINGULAR_T10_TOLERANCE * singular_values[0]:
        raise QepError("T10 is numerically singular, the pencil has infinite eigenvalues",
                       float(singular_values[-1]))

    A, B = companion_pencil(T)
    eigenvalues, vectors = scipy.linalg.eig(A, B)
    if not np.all(np.isfinite(eigenvalues)):
        raise QepError("Generalized eigensolver returned non-finite eigenvalues", float(singular_values[-1]))

    norm_a = np.linalg.norm(A, 2)
    norm_b = np.linalg.norm(B, 2)
    residual = A @ vectors - (B @ vectors) * eigenvalues[None, :]
    residuals = np.linalg.norm(residual, axis=0) / (
        (norm_a + np.abs(eigenvalues) * norm_b) * np.linalg.norm(vectors, axis=0))
    if residuals.max() > EIGEN_RESIDUAL_TOLERANCE:
        raise QepError(f"Eigenpair residual {residuals.max():.2e} exceeds {EIGEN_RESIDUAL_TOLERANCE:.0e}",
                       float(singular_values[-1]))

    order = canonical_order(eigenvalues)
    eigenvalues = eigenvalues[order]
    psi = _normalize_columns(vectors[:n, order])
    spectrum = QepSpectrum(eigenvalues=eigenvalues, eigenvectors=psi, residuals=residuals[order], n=n)

    defect = spectrum.pairing_defect
    if defect > PAIRING_TOLERANCE:
        if strict_pairing:
            raise PairingError(defect, PAIRING_TOLERANCE)
        logger.warning(f"Eigenvalue pairing defect {defect:.2e} exceeds {PAIRING_TOLERANCE:.0e}")
    logger.info(f"QEP solved: 2N={2 * n}, {spectrum.inside_count} eigenvalues inside the unit disk, "
                f"pairing defect {defect:.2e}")
    return spectrum


@dataclass(frozen=True)
class PropagationOperator:
    """P_h = Psi diag(lambda) Psi^-1 from the N eigenpairs inside the unit disk"""
    eigenvalues: np.ndarray  # (N,), canonically ordered
    eigenvectors: np.ndarray  # Psi, (N, N)
    matrix: np.ndarray  # explicit P_h
    condition: float  # 2-norm condition number of Psi

    @property
    def n(self) -> int:
        return self.eigenvalues.size

    def modal_coefficients(self, phi) -> np.ndarray:
        return np.linalg.solve(self.eigenvectors, np.asarray(phi, dtype=complex))

    def power_apply(self, phi, power: int) -> np.ndarray:
        """P^power phi through the eigen-decomposition"""
        return self.eigenvectors @ (self.eigenvalues ** power * self.modal_coefficients(phi))

    def trace_sequence(self, phi, count: int) -> np.ndarray:
        """Rows l = 0 .. count - 1 hold P^l phi"""
        coefficients = self.modal_coefficients(phi)
        powers = self.eigenvalues[None, :] ** np.arange(count)[:, None]
        return (powers * coefficients[None, :]) @ self.eigenvectors.T


def riccati_residual(T: DtnQuad, P: np.ndarray) -> float:
    """||T10 P^2 + (T00 + T11) P + T01|| / ||T01|| in the 2-norm"""
    residual = T.T10 @ P @ P + (T.T00 + T.T11) @ P + T.T01
    return float(np.linalg.norm(residual, 2) / np.linalg.norm(T.T01, 2))


def select_and_build(spectrum: QepSpectrum, T: Optional[DtnQuad] = None,
                     condition_threshold: float = CONDITION_THRESHOLD,
                     residual_tolerance: float = RESIDUAL_TOLERANCE) -> PropagationOperator:
    """
    Keep the N eigenpairs with |lambda| < 1 and rebuild P_h.

    When T is given the Riccati residual of the result is checked.
    """
    lam = spectrum.eigenvalues
    margin = float(np.min(np.abs(np.abs(lam) - 1.0)))
    if margin < UNIT_CIRCLE_MARGIN:
        raise SelectionError(f"eigenvalue within {margin:.1e} of the unit circle (absorption too small?)",
                             spectrum.inside_count, spectrum.nearest_unit_circle())
    inside = np.abs(lam) < 1.0
    if np.count_nonzero(inside) != spectrum.n:
        raise SelectionError("unit-disk selection failed", spectrum.inside_count, spectrum.nearest_unit_circle())

    selected = lam[inside]
    psi = spectrum.eigenvectors[:, inside]
    condition = float(np.linalg.cond(psi))
    if not np.isfinite(condition) or condition > condition_threshold:
        raise DiagonalizabilityError(condition, condition_threshold)

    matrix = np.linalg.solve(psi.T, (psi * selected[None, :]).T).T
    operator = PropagationOperator(eigenvalues=selected, eigenvectors=psi, matrix=matrix, condition=condition)

    if T is not None:
        residual = riccati_residual(T, matrix)
        if residual > residual_tolerance:
            raise RiccatiResidualError(f"Riccati residual {residual:.2e} exceeds {residual_tolerance:.0e}")
        logger.info(f"Propagation operator: spectral radius {spectral_radius(operator):.6f}, "
                    f"cond(Psi) {condition:.2e}, Riccati residual {residual:.2e}")
    return operator


def spectral_radius(P: PropagationOperator) -> float:
    if P.eigenvalues.size == 0:
        return 0.0
    return float(np.max(np.abs(P.eigenvalues)))


def solve_riccati(T: DtnQuad) -> PropagationOperator:
    """solve_qep followed by select_and_build with the residual check"""
    return select_and_build(solve_qep(T), T)
