"""
Reference computations and experiment drivers
Truncated-domain direct solves, relative H1 errors, convergence and absorption studies,
spectral-radius reference and spectrum band counts
"""
import os
import math
import logging
import threading
from concurrent.futures import ThreadPoolExecutor, as_completed
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from errors import OracleError, QuasiHelmError, TruncationError
from fem import (FEFunction1D, Mesh1D, assemble_helmholtz_1d, assemble_load_1d, factorize,
                 solve_dirichlet, subdivided_gauss_points)
from halfguide import HalfLineResult, solve_halfline
from media import CutVector, MediumSpec, PeriodicCoefficient2D, line_trace
from riccati import PropagationOperator

logger = logging.getLogger(__name__)

DEFAULT_H_REF = 5e-4
ERROR_MEASURES = ('reference', 'nodal')


def max_reference_dofs() -> int:
    return int(os.getenv('QUASIHELM_MAX_DOFS', '5000000'))


@dataclass(frozen=True)
class TruncationPolicy:
    """Truncation length L with exp(-sqrt(rho_-/mu_+) Im(omega) L) = target"""
    target: float = 1e-10

    def __post_init__(self):
        if not 0 < self.target < 1:
            raise ValueError(f"Truncation target must lie in (0, 1), got {self.target}")

    @staticmethod
    def rate(mu_upper: float, rho_lower: float, omega) -> float:
        w = complex(getattr(omega, 'omega', omega))
        return math.sqrt(rho_lower / mu_upper) * w.imag

    def length(self, mu_upper: float, rho_lower: float, omega) -> float:
        return -math.log(self.target) / self.rate(mu_upper, rho_lower, omega)

    def length_for(self, mu_p: PeriodicCoefficient2D, rho_p: PeriodicCoefficient2D, omega) -> float:
        """Uses the declared coefficient bounds"""
        return self.length(mu_p.upper_bound, rho_p.lower_bound, omega)


def _check_budget(n_dofs: int, rate: float, h_ref: float, order: int):
    budget = max_reference_dofs()
    if n_dofs > budget:
        feasible_length = budget * h_ref / order
        raise TruncationError(f"Truncated reference needs {n_dofs} dofs, budget is {budget}",
                              suggested_target=math.exp(-rate * feasible_length))


def solve_truncated_halfline(s: float, mu_p: PeriodicCoefficient2D, rho_p: PeriodicCoefficient2D,
                             theta: CutVector, omega, policy: TruncationPolicy = TruncationPolicy(),
                             h_ref: float = DEFAULT_H_REF, order: int = 1,
                             length: Optional[float] = None) -> FEFunction1D:
    """Direct FE solve on (0, L) with u(0) = 1 and u(L) = 0"""
    w = complex(getattr(omega, 'omega', omega))
    if not w.imag > 0:
        raise OracleError(f"Truncated reference needs Im(omega) > 0, got {w}")
    L = length if length is not None else policy.length_for(mu_p, rho_p, w)
    n_elements = math.ceil(L / h_ref - 1e-9)
    _check_budget(n_elements * order + 1, TruncationPolicy.rate(mu_p.upper_bound, rho_p.lower_bound, w),
                  h_ref, order)

    mesh = Mesh1D.uniform(0.0, L, n_elements, order)
    matrix = assemble_helmholtz_1d(line_trace(mu_p, theta, s), line_trace(rho_p, theta, s), w, mesh)
    values = solve_dirichlet(matrix, [0, mesh.n_dofs - 1], [1.0, 0.0])
    logger.debug(f"Truncated reference: s={s:.6f}, L={L:.3f}, {mesh.n_dofs} dofs")
    return FEFunction1D(mesh, values)


def solve_truncated_whole_line(medium: MediumSpec, omega, policy: TruncationPolicy = TruncationPolicy(),
                               h: float = 2e-3, order: int = 1) -> FEFunction1D:
    """Direct FE solve of the whole-line problem on (-a - L, a + L) with zero Dirichlet ends"""
    w = complex(getattr(omega, 'omega', omega))
    L = policy.length_for(medium.mu_p, medium.rho_p, w)
    breakpoints = np.concatenate([[-medium.a - L], medium.interior_breakpoints(), [medium.a + L]])
    mesh = Mesh1D.from_breakpoints(breakpoints, h, order)
    _check_budget(mesh.n_dofs, TruncationPolicy.rate(medium.mu_p.upper_bound, medium.rho_p.lower_bound, w),
                  h, order)
    matrix = assemble_helmholtz_1d(medium.whole_line_mu, medium.whole_line_rho, w, mesh)
    load = assemble_load_1d(medium.source, mesh)
    values = solve_dirichlet(matrix, [0, mesh.n_dofs - 1], [0.0, 0.0], load=load)
    logger.info(f"Truncated whole-line oracle: L={L:.2f}, {mesh.n_dofs} dofs")
    return FEFunction1D(mesh, values)


def _h1_integrals(first, second, window: Tuple[float, float], quad_order: int):
    lo, hi = window
    points = [np.array([lo, hi])]
    for u in (first, second):
        nodes = np.asarray(u.breakpoints(), dtype=float)
        points.append(nodes[(nodes > lo) & (nodes < hi)])
    x, w = subdivided_gauss_points(np.unique(np.concatenate(points)), quad_order)
    return x, w


def nodal_interpolant(u_h, u_ref, window: Tuple[float, float], order: int = 1) -> FEFunction1D:
    """Interpolant of u_ref on the vertices of u_h inside the window"""
    lo, hi = window
    nodes = np.asarray(u_h.breakpoints(), dtype=float)
    nodes = np.unique(np.concatenate([[lo, hi], nodes[(nodes > lo) & (nodes < hi)]]))
    # cell ends computed from two shifted meshes may differ by a few ulps
    nodes = nodes[np.concatenate([[True], np.diff(nodes) > 1e-12 * max(1.0, hi - lo)])]
    nodes[-1] = hi
    mesh = Mesh1D(nodes, order)
    return FEFunction1D(mesh, u_ref.evaluate(mesh.dof_coordinates()))


def relative_h1_error(u_h, u_ref, window: Tuple[float, float], quad_order: int = 3,
                      against: str = 'reference', order: int = 1) -> float:
    """
    ||u_h - u_ref||_H1 / ||u_ref||_H1 on the window.

    Integrated piece by piece on the union of both meshes' breakpoints, so the
    integrand is polynomial on every piece. With against='nodal' the reference is
    first replaced by its interpolant of the given order on the vertices of u_h;
    P1 solutions are nodally superconvergent, so this measure decays like h^2.
    """
    if against not in ERROR_MEASURES:
        raise ValueError(f"Unknown error measure: {against!r}")
    if against == 'nodal':
        u_ref = nodal_interpolant(u_h, u_ref, window, order)
    x, w = _h1_integrals(u_h, u_ref, window, quad_order)
    ref_values, ref_slopes = u_ref.evaluate(x), u_ref.derivative(x)
    diff_values = u_h.evaluate(x) - ref_values
    diff_slopes = u_h.derivative(x) - ref_slopes
    denominator = float(np.sum(w * (np.abs(ref_values) ** 2 + np.abs(ref_slopes) ** 2)))
    if denominator <= 0:
        raise OracleError("Reference solution has zero H1 norm on the window")
    numerator = float(np.sum(w * (np.abs(diff_values) ** 2 + np.abs(diff_slopes) ** 2)))
    return math.sqrt(numerator / denominator)


def _pool_map(func, items: Sequence, max_workers: int, label: str) -> List:
    """Run func over items concurrently, results in input order"""
    results = [None] * len(items)
    if max_workers <= 1:
        return [func(item) for item in items]
    with ThreadPoolExecutor(max_workers=max_workers) as executor:
        futures = {executor.submit(func, item): i for i, item in enumerate(items)}
        for future in as_completed(futures):
            i = futures[future]
            try:
                results[i] = future.result()
            except Exception as e:
                logger.error(f"{label} failed at {items[i]}: {e}")
                raise
    return results


def reference_spectral_radius(mu_p: PeriodicCoefficient2D, rho_p: PeriodicCoefficient2D, theta: CutVector,
                              omega, n_samples: int = 256, policy: TruncationPolicy = TruncationPolicy(),
                              h_ref: float = DEFAULT_H_REF, max_workers: int = 1) -> float:
    """
    Rectangle-rule value of exp(int_0^1 log|p(s)| ds), p(s) = u+_{s - beta}(1/theta2),
    each u+ being a truncated reference solve.
    """
    if n_samples < 1:
        raise ValueError("n_samples must be at least 1")
    beta = theta.slope
    x_eval = np.array([theta.cell_length])

    def sample(s):
        return complex(solve_truncated_halfline(s - beta, mu_p, rho_p, theta, omega, policy, h_ref).evaluate(x_eval)[0])

    values = np.array(_pool_map(sample, list(np.arange(n_samples) / n_samples), max_workers, 'Radius sample'))
    if np.any(values == 0):
        raise OracleError("p(s) vanished at a sample point")
    radius = float(np.exp(np.mean(np.log(np.abs(values)))))
    logger.info(f"Reference spectral radius: {radius:.6f} ({n_samples} samples)")
    return radius


def spectrum_band_count(P, radius_ref: float, band: float = 0.05) -> int:
    """Number of eigenvalues with ||lambda| - r| / r <= band"""
    if radius_ref <= 0:
        raise ValueError("Reference radius must be positive")
    eigenvalues = P.eigenvalues if isinstance(P, PropagationOperator) else np.asarray(P)
    return int(np.count_nonzero(np.abs(np.abs(eigenvalues) - radius_ref) / radius_ref <= band))


def fit_slope(inv_h: Sequence[float], errors: Sequence[float]) -> float:
    """Least-squares decay rate: error ~ h^slope"""
    coefficients = np.polyfit(np.log(np.asarray(inv_h, dtype=float)), np.log(np.asarray(errors, dtype=float)), 1)
    return float(-coefficients[0])


@dataclass
class ConvergenceReport:
    """
    Error ladder of one method.

    errors are measured against the nodal interpolant of the reference on the
    solution's own vertices; reference_errors, when present, against the reference itself.
    """
    method: str
    omega: complex
    inv_h: List[int]
    errors: List[float]
    spectral_radii: List[float] = field(default_factory=list)
    reference_errors: List[float] = field(default_factory=list)
    slope: float = float('nan')
    reference_slope: float = float('nan')

    def __post_init__(self):
        if any(e <= 0 for e in self.errors) or any(e <= 0 for e in self.reference_errors):
            raise OracleError("Convergence errors must be positive")
        if len(self.errors) >= 2:
            self.slope = fit_slope(self.inv_h, self.errors)
        if len(self.reference_errors) >= 2:
            self.reference_slope = fit_slope(self.inv_h, self.reference_errors)

    def to_frame(self) -> pd.DataFrame:
        frame = pd.DataFrame({
            'inv_h': self.inv_h,
            'error': self.errors,
            'slope': [self.slope] * len(self.inv_h),
        })
        if self.reference_errors:
            frame['error_reference'] = self.reference_errors
            frame['slope_reference'] = self.reference_slope
        return frame


@dataclass
class StudyContext:
    """Shared inputs of the study drivers"""
    mu_p: PeriodicCoefficient2D
    rho_p: PeriodicCoefficient2D
    theta: CutVector
    h_theta: Optional[float] = None
    order: int = 1
    l_cells: int = 8
    boundary: str = 'one'
    fresh_cells: bool = False
    policy: TruncationPolicy = TruncationPolicy()
    h_ref: float = DEFAULT_H_REF
    max_workers: int = 1
    stats: Dict[str, int] = field(default_factory=lambda: {'pipelines': 0, 'references': 0, 'errors': 0})
    stats_lock: threading.Lock = field(default_factory=threading.Lock)

    @property
    def window(self) -> Tuple[float, float]:
        return (0.0, 4.0 * self.theta.cell_length)

    def count(self, key: str):
        with self.stats_lock:
            self.stats[key] += 1

    def pipeline(self, method: str, omega, h: float, reconstruct: bool = True) -> HalfLineResult:
        try:
            result = solve_halfline(self.mu_p, self.rho_p, self.theta, omega, method, h,
                                    h_theta=self.h_theta,
                                    order=self.order, l_cells=self.l_cells, boundary=self.boundary,
                                    fresh_cells=self.fresh_cells, reconstruct=reconstruct)
        except QuasiHelmError as e:
            self.count('errors')
            e.study_point = {'method': method, 'h': h, 'omega': complex(omega)}
            logger.error(f"Pipeline failed at method={method}, h={h}, omega={omega}: {e}")
            raise
        self.count('pipelines')
        return result

    def reference(self, omega) -> FEFunction1D:
        self.count('references')
        return solve_truncated_halfline(0.0, self.mu_p, self.rho_p, self.theta, omega, self.policy, self.h_ref)


def convergence_study(context: StudyContext, method: str, omega, h_list: Sequence[float],
                      reference: Optional[FEFunction1D] = None) -> ConvergenceReport:
    """
    Relative H1 errors of u+ for each h (h_list decreasing), against the nodal interpolant
    of the truncated reference and against the reference itself.
    """
    h_list = list(h_list)
    if any(b >= a for a, b in zip(h_list, h_list[1:])):
        raise ValueError("h list must be sorted decreasing")
    u_ref = reference if reference is not None else context.reference(omega)

    def point(h):
        result = context.pipeline(method, omega, h)
        nodal = relative_h1_error(result.solution, u_ref, context.window, against='nodal', order=context.order)
        direct = relative_h1_error(result.solution, u_ref, context.window)
        return result.inv_h, nodal, direct, result.spectral_radius

    rows = _pool_map(point, h_list, context.max_workers, 'Convergence point')
    report = ConvergenceReport(method=method, omega=complex(omega), inv_h=[r[0] for r in rows],
                               errors=[r[1] for r in rows], reference_errors=[r[2] for r in rows],
                               spectral_radii=[r[3] for r in rows])
    logger.info(f"Convergence ({method}, omega={complex(omega)}): slope {report.slope:.3f}, "
                f"against the reference {report.reference_slope:.3f}")
    return report


def absorption_study(context: StudyContext, method: str, omega_re: float, omega_im_list: Sequence[float],
                     h: float) -> pd.DataFrame:
    """Error of u+ at fixed h for each absorption level"""
    def point(omega_im):
        omega = complex(omega_re, omega_im)
        report = convergence_study(context, method, omega, [h])
        return omega_im, report.inv_h[0], report.errors[0], report.reference_errors[0]

    rows = _pool_map(point, list(omega_im_list), context.max_workers, 'Absorption point')
    return pd.DataFrame(rows, columns=['omega_im', 'inv_h', 'error', 'error_reference'])


def spectrum_study(context: StudyContext, methods: Sequence[str], omega, h_list: Sequence[float],
                   radius_ref: float, band: float = 0.05) -> Tuple[pd.DataFrame, pd.DataFrame]:
    """
    Eigenvalues of P_h and band counts for every (method, h).

    Returns:
        (eigenvalue dump, band counts)
    """
    points = [(method, h) for method in methods for h in h_list]

    def point(item):
        method, h = item
        return context.pipeline(method, omega, h, reconstruct=False)

    results = _pool_map(point, points, context.max_workers, 'Spectrum point')
    eigen_frames, band_rows = [], []
    for (method, _), result in zip(points, results):
        lam = result.propagation.eigenvalues
        eigen_frames.append(pd.DataFrame({
            're_lambda': lam.real, 'im_lambda': lam.imag, 'abs_lambda': np.abs(lam),
            'method': method, 'inv_h': result.inv_h,
        }))
        band_rows.append({
            'method': method, 'inv_h': result.inv_h,
            'n_band': spectrum_band_count(result.propagation, radius_ref, band),
            'radius_ref': radius_ref, 'spectral_radius': result.spectral_radius,
        })
    return pd.concat(eigen_frames, ignore_index=True), pd.DataFrame(band_rows)


class ConstantMediumReference:
    """Closed forms for mu, rho constant"""

    def __init__(self, mu: float, rho: float, omega, theta: CutVector):
        self.mu = mu
        self.rho = rho
        self.omega = complex(getattr(omega, 'omega', omega))
        self.theta = theta
        self.k = self.omega * math.sqrt(rho / mu)  # wavenumber

    def e0(self, x):
        L = self.theta.cell_length
        return np.sin(self.k * (L - np.asarray(x))) / np.sin(self.k * L)

    def e1(self, x):
        L = self.theta.cell_length
        return np.sin(self.k * np.asarray(x)) / np.sin(self.k * L)

    def local_dtn(self) -> np.ndarray:
        """t[j, k]; t00 = t11 = theta2 mu k cot(k L), t01 = t10 = -theta2 mu k / sin(k L)"""
        L = self.theta.cell_length
        diagonal = self.theta.theta2 * self.mu * self.k * np.cos(self.k * L) / np.sin(self.k * L)
        off = -self.theta.theta2 * self.mu * self.k / np.sin(self.k * L)
        return np.array([[diagonal, off], [off, diagonal]])

    @property
    def lambda_plus(self) -> complex:
        return -1j * self.omega * math.sqrt(self.mu * self.rho)

    @property
    def spectral_radius(self) -> float:
        return abs(np.exp(1j * self.k * self.theta.cell_length))

    def u_plus(self, x):
        return np.exp(1j * self.k * np.asarray(x))

    def u_plus_derivative(self, x):
        return 1j * self.k * np.exp(1j * self.k * np.asarray(x))

    # half-line solution interface
    evaluate = u_plus
    derivative = u_plus_derivative

    def breakpoints(self) -> np.ndarray:
        return np.array([])
