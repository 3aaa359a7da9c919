"""
Whole-line solution
Interior problem on (-a, a) closed by the DtN coefficients of both exterior sides,
and the piecewise assembly of the global solution
"""
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
import pandas as pd

from errors import DtnSignError
from fem import FEFunction1D, Mesh1D, assemble_helmholtz_1d, assemble_load_1d, factorize
from halfguide import HalfLineResult, solve_halfline
from media import MediumSpec, reflect_translate_medium

logger = logging.getLogger(__name__)


def interior_mesh(medium: MediumSpec, h: float, order: int = 1) -> Mesh1D:
    """Mesh of (-a, a) with nodes at every interior discontinuity"""
    return Mesh1D.from_breakpoints(medium.interior_breakpoints(), h, order)


def solve_interior(medium: MediumSpec, omega, lambda_plus: complex, lambda_minus: complex,
                   mesh: Mesh1D) -> FEFunction1D:
    """
    -(mu u')' - rho omega^2 u = f on (-a, a) with mu u' + lambda+ u = 0 at a and
    -mu u' + lambda- u = 0 at -a.
    """
    for name, value in (('lambda+', lambda_plus), ('lambda-', lambda_minus)):
        if not complex(value).imag < 0:
            raise DtnSignError(f"{name} = {value} has non-negative imaginary part", module='wholeline')
    matrix = assemble_helmholtz_1d(medium.mu_i, medium.rho_i, omega, mesh).tolil()
    last = mesh.n_dofs - 1
    matrix[last, last] += lambda_plus
    matrix[0, 0] += lambda_minus
    load = assemble_load_1d(medium.source, mesh).astype(complex)
    values = factorize(matrix.tocsr(), natural_order=True).solve(load)
    return FEFunction1D(mesh, values)


@dataclass
class WholeLineSolution:
    """
    u = u_i(-a) w-(-a - x) for x < -a, u_i inside, u_i(a) w+(x - a) for x > a,
    where w+- are the plus-type half-line solutions of the two reflected media (w(0) = 1).
    """
    interior: FEFunction1D
    plus: object
    minus: object
    a: float
    lambda_plus: complex
    lambda_minus: complex

    @property
    def boundary_values(self) -> Tuple[complex, complex]:
        values = self.interior.evaluate(np.array([-self.a, self.a]))
        return complex(values[0]), complex(values[1])

    @property
    def reach(self) -> float:
        """Half-width of the interval (-reach, reach) the solution covers"""
        return self.a + min(self.plus.x_max, self.minus.x_max)

    def evaluate(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        u_minus, u_plus = self.boundary_values
        out = np.zeros(x.shape, dtype=complex)
        inside = np.abs(x) <= self.a
        right = x > self.a
        left = x < -self.a
        out[inside] = self.interior.evaluate(x[inside])
        out[right] = u_plus * self.plus.evaluate(x[right] - self.a)
        out[left] = u_minus * self.minus.evaluate(-self.a - x[left])
        return out

    def derivative(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        u_minus, u_plus = self.boundary_values
        out = np.zeros(x.shape, dtype=complex)
        inside = np.abs(x) <= self.a
        right = x > self.a
        left = x < -self.a
        out[inside] = self.interior.derivative(x[inside])
        out[right] = u_plus * self.plus.derivative(x[right] - self.a)
        out[left] = -u_minus * self.minus.derivative(-self.a - x[left])
        return out

    def breakpoints(self) -> np.ndarray:
        return np.unique(np.concatenate([
            self.interior.breakpoints(),
            self.a + self.plus.breakpoints(),
            -self.a - self.minus.breakpoints(),
        ]))

    def frame(self, x) -> pd.DataFrame:
        u = self.evaluate(x)
        return pd.DataFrame({'x': np.asarray(x, dtype=float), 'u_re': u.real, 'u_im': u.imag})


def assemble_whole_line(interior: FEFunction1D, plus, minus, a: float,
                        lambda_plus: complex, lambda_minus: complex) -> WholeLineSolution:
    return WholeLineSolution(interior=interior, plus=plus, minus=minus, a=a,
                             lambda_plus=lambda_plus, lambda_minus=lambda_minus)


def flux_jump(solution: WholeLineSolution, medium: MediumSpec) -> Tuple[float, float]:
    """|mu u'(a-) - mu u'(a+)| and |mu u'(-a-) - mu u'(-a+)| from one-sided derivatives"""
    a = solution.a
    u_minus, u_plus = solution.boundary_values
    ends = np.array([-a, a])
    inner_flux = medium.mu_i(ends) * solution.interior.derivative(ends)
    outer_mu = medium.whole_line_mu(ends)
    outer_right = outer_mu[1] * u_plus * solution.plus.derivative(np.array([0.0]))[0]
    outer_left = -outer_mu[0] * u_minus * solution.minus.derivative(np.array([0.0]))[0]
    return float(abs(inner_flux[1] - outer_right)), float(abs(inner_flux[0] - outer_left))


@dataclass
class WholeLineResult:
    solution: WholeLineSolution
    plus: HalfLineResult
    minus: HalfLineResult


def solve_whole_line(medium: MediumSpec, omega, method: str, h: float, h_theta: Optional[float] = None,
                     order: int = 1, l_cells: int = 8, max_workers: int = 1) -> WholeLineResult:
    """
    Both exterior pipelines (run concurrently), then the interior solve and the assembly.

    The minus side reuses the plus-side pipeline on the reflected medium.
    """
    w = complex(getattr(omega, 'omega', omega))

    def run_side(side):
        (mu, rho), theta = reflect_translate_medium(medium, side)
        return solve_halfline(mu, rho, theta, w, method, h, h_theta=h_theta, order=order,
                              l_cells=l_cells, max_workers=max_workers)

    with ThreadPoolExecutor(max_workers=2) as executor:
        plus_future = executor.submit(run_side, 'plus')
        minus_future = executor.submit(run_side, 'minus')
        plus, minus = plus_future.result(), minus_future.result()

    logger.info(f"DtN coefficients: lambda+ = {plus.lambda_plus:.8g}, lambda- = {minus.lambda_plus:.8g}")
    interior = solve_interior(medium, w, plus.lambda_plus, minus.lambda_plus, interior_mesh(medium, h, order))
    solution = assemble_whole_line(interior, plus.solution, minus.solution, medium.a,
                                   plus.lambda_plus, minus.lambda_plus)
    return WholeLineResult(solution=solution, plus=plus, minus=minus)
