"""
Quasiperiodic media
Periodic coefficients on the unit torus, the cut direction, traces along lines
and the locally perturbed whole-line medium
"""
import re
import math
import logging
from dataclasses import dataclass, field
from typing import Callable, Tuple

import numpy as np
import pandas as pd

from errors import MediumError

logger = logging.getLogger(__name__)

TWO_PI = 2.0 * math.pi

# Piecewise interior values for a = 1 (four decimals)
STEPPED_MU_BREAKS = (-1.0, -1.0 / 3.0, 1.0 / 3.0, 1.0)
STEPPED_MU_VALUES = (0.8339, 2.0, 0.8339)
STEPPED_RHO_BREAKS = (-1.0, 0.0, 1.0)
STEPPED_RHO_VALUES = (1.8729, 1.1271)


def wrap_unit(values) -> np.ndarray:
    """x mod 1 in [0, 1), with 1.0 mapped to 0.0"""
    r = np.mod(np.asarray(values, dtype=float), 1.0)
    return np.where(r >= 1.0, 0.0, r)


@dataclass(frozen=True)
class CutVector:
    """
    Direction theta of the cut line x -> x*theta through the unit torus.

    theta1 > 0 and theta2 > 0. theta1 = 0 (a medium periodic along the line, where every
    shift vanishes) is accepted only with allow_degenerate=True.
    """
    theta1: float
    theta2: float
    assert_irrational: bool = False  # user assertion, not machine-checkable
    allow_degenerate: bool = False

    def __post_init__(self):
        if not (math.isfinite(self.theta1) and math.isfinite(self.theta2)):
            raise MediumError(f"Cut vector must be finite, got ({self.theta1}, {self.theta2})")
        if self.theta2 <= 0 or self.theta1 < 0:
            raise MediumError(f"Cut vector needs theta1 >= 0 and theta2 > 0, got ({self.theta1}, {self.theta2})")
        if self.theta1 == 0:
            if not self.allow_degenerate:
                raise MediumError("theta1 = 0 is degenerate (periodic along the line); set allow_degenerate to accept it")
            logger.warning("theta1 = 0: the medium is periodic along the line (degenerate direction)")

    @classmethod
    def from_angle(cls, angle: float, assert_irrational: bool = False, allow_degenerate: bool = False) -> 'CutVector':
        return cls(math.cos(angle), math.sin(angle), assert_irrational, allow_degenerate)

    @property
    def slope(self) -> float:
        """beta = theta1 / theta2, the transverse shift from one cell to the next"""
        return self.theta1 / self.theta2

    @property
    def cell_length(self) -> float:
        """Length 1/theta2 of the line segment crossing one periodicity cell"""
        return 1.0 / self.theta2


@dataclass(frozen=True)
class PeriodicCoefficient2D:
    """1-periodic positive coefficient on R^2 with declared ellipticity bounds"""
    evaluator: Callable  # vectorized (y1, y2) -> values
    lower_bound: float
    upper_bound: float
    name: str = "custom"

    def __post_init__(self):
        if not (0 < self.lower_bound <= self.upper_bound):
            raise MediumError(f"Invalid bounds for {self.name}: [{self.lower_bound}, {self.upper_bound}]")

    def __call__(self, y1, y2) -> np.ndarray:
        return self.evaluator(np.asarray(y1, dtype=float), np.asarray(y2, dtype=float))

    @property
    def is_constant(self) -> bool:
        return self.lower_bound == self.upper_bound

    def check_bounds(self, n_samples: int = 2000, seed: int = 0):
        """Raise MediumError if a sampled value leaves [lower_bound, upper_bound]"""
        y = np.random.default_rng(seed).random((n_samples, 2))
        values = self(y[:, 0], y[:, 1])
        tol = 1e-12 * self.upper_bound
        if np.any(values < self.lower_bound - tol) or np.any(values > self.upper_bound + tol):
            raise MediumError(
                f"Coefficient {self.name} sampled in [{values.min():.6g}, {values.max():.6g}], "
                f"outside declared bounds [{self.lower_bound}, {self.upper_bound}]")

    def check_periodicity(self, n_samples: int = 500, seed: int = 0, tol: float = 1e-12):
        y = np.random.default_rng(seed).uniform(-3.0, 3.0, (n_samples, 2))
        base = self(y[:, 0], y[:, 1])
        for shift in ((1.0, 0.0), (0.0, 1.0)):
            moved = self(y[:, 0] + shift[0], y[:, 1] + shift[1])
            if np.max(np.abs(moved - base)) > tol * max(1.0, self.upper_bound):
                raise MediumError(f"Coefficient {self.name} is not 1-periodic along {shift}")

    def transformed(self, sign: float, offset: Tuple[float, float], name: str) -> 'PeriodicCoefficient2D':
        """y -> F(sign*y + offset)"""
        base = self.evaluator
        o1, o2 = offset

        def evaluator(y1, y2):
            return base(sign * np.asarray(y1) + o1, sign * np.asarray(y2) + o2)

        return PeriodicCoefficient2D(evaluator, self.lower_bound, self.upper_bound, name)


def constant_coefficient(value: float) -> PeriodicCoefficient2D:
    value = float(value)

    def evaluator(y1, y2):
        return np.full(np.broadcast(y1, y2).shape, value)

    return PeriodicCoefficient2D(evaluator, value, value, f"constant({value:g})")


def trig_mu() -> PeriodicCoefficient2D:
    """1.5 + cos(2 pi y1) cos(2 pi y2)"""
    def evaluator(y1, y2):
        return 1.5 + np.cos(TWO_PI * y1) * np.cos(TWO_PI * y2)

    return PeriodicCoefficient2D(evaluator, 0.5, 2.5, "trig")


def trig_rho() -> PeriodicCoefficient2D:
    """1.5 + 0.5 sin(2 pi y1) + 0.5 sin(2 pi y2)"""
    def evaluator(y1, y2):
        return 1.5 + 0.5 * np.sin(TWO_PI * y1) + 0.5 * np.sin(TWO_PI * y2)

    return PeriodicCoefficient2D(evaluator, 0.5, 2.5, "trig")


def tabulated_coefficient(grid, name: str = "tabulated") -> PeriodicCoefficient2D:
    """
    Bilinear periodic interpolation of grid values.

    grid[i, j] is the value at (i/n1, j/n2); the grid wraps around in both directions.
    """
    table = np.array(grid, dtype=float)
    if table.ndim != 2 or min(table.shape) < 1:
        raise MediumError(f"Tabulated coefficient needs a 2D grid, got shape {table.shape}")
    if not np.all(np.isfinite(table)) or table.min() <= 0:
        raise MediumError("Tabulated coefficient values must be finite and positive")
    n1, n2 = table.shape

    def evaluator(y1, y2):
        u = wrap_unit(y1) * n1
        v = wrap_unit(y2) * n2
        i0 = np.floor(u).astype(int) % n1
        j0 = np.floor(v).astype(int) % n2
        du = u - np.floor(u)
        dv = v - np.floor(v)
        i1 = (i0 + 1) % n1
        j1 = (j0 + 1) % n2
        return ((1 - du) * (1 - dv) * table[i0, j0] + du * (1 - dv) * table[i1, j0]
                + (1 - du) * dv * table[i0, j1] + du * dv * table[i1, j1])

    return PeriodicCoefficient2D(evaluator, float(table.min()), float(table.max()), name)


def load_tabulated_coefficient(path: str) -> PeriodicCoefficient2D:
    """Read a header-less CSV grid of values"""
    try:
        grid = pd.read_csv(path, header=None).to_numpy(dtype=float)
    except (OSError, ValueError) as e:
        raise MediumError(f"Could not read tabulated coefficient {path}: {e}")
    return tabulated_coefficient(grid, name=f"tabulated:{path}")


_CONSTANT_PATTERN = re.compile(r'^constant\(\s*([-+0-9.eE]+)\s*\)$')


def coefficient_preset(preset: str, role: str) -> PeriodicCoefficient2D:
    """
    Resolve a preset name for the coefficient `role` ('mu' or 'rho').

    Examples:
        "trig", "mu" -> 1.5 + cos(2 pi y1) cos(2 pi y2)
        "constant(2)", any role -> 2 everywhere
        "tabulated:grid.csv" -> bilinear periodic interpolation of the CSV grid
    """
    preset = preset.strip()
    if preset == 'trig':
        if role == 'mu':
            return trig_mu()
        if role == 'rho':
            return trig_rho()
        raise MediumError(f"Unknown coefficient role: {role}")
    match = _CONSTANT_PATTERN.match(preset)
    if match:
        return constant_coefficient(float(match.group(1)))
    if preset.startswith('tabulated:'):
        return load_tabulated_coefficient(preset.split(':', 1)[1])
    raise MediumError(f"Unknown coefficient preset: {preset!r}")


@dataclass(frozen=True)
class Frequency:
    omega: complex

    def __post_init__(self):
        omega = complex(self.omega)
        if not omega.imag > 0:
            raise MediumError(f"Frequency needs positive absorption, got omega = {omega}")
        object.__setattr__(self, 'omega', omega)

    @property
    def squared(self) -> complex:
        return self.omega * self.omega


def trace_coefficient(coef: PeriodicCoefficient2D, theta: CutVector, s, x) -> np.ndarray:
    """coef((s, 0) + x*theta); 1-periodic in s"""
    s = np.asarray(s, dtype=float)
    x = np.asarray(x, dtype=float)
    return coef(s + x * theta.theta1, x * theta.theta2)


def line_trace(coef: PeriodicCoefficient2D, theta: CutVector, s: float) -> Callable:
    """The map x -> coef((s, 0) + x*theta), ready for 1D assembly"""
    def trace(x):
        return trace_coefficient(coef, theta, s, x)
    return trace


def s_theta(y, theta: CutVector) -> np.ndarray:
    """Transverse coordinate y1 - (y2/theta2)*theta1 of points y (last axis of length 2)"""
    y = np.asarray(y, dtype=float)
    return y[..., 0] - (y[..., 1] / theta.theta2) * theta.theta1


def sample_broken_line(theta: CutVector, M: float, step: float) -> Tuple[np.ndarray, np.ndarray]:
    """
    Points (x*theta1 mod 1, x*theta2 mod 1) for x = 0, step, 2*step, ... <= M.

    Returns:
        (x, points) with points of shape (n, 2) in [0, 1)^2
    """
    if step <= 0:
        raise MediumError(f"Sampling step must be positive, got {step}")
    n = int(math.floor(M / step * (1 + 1e-12))) + 1
    x = step * np.arange(n)
    points = np.column_stack([wrap_unit(x * theta.theta1), wrap_unit(x * theta.theta2)])
    return x, points


@dataclass(frozen=True)
class PiecewiseCoefficient1D:
    """Piecewise-constant map on [breakpoints[0], breakpoints[-1]]"""
    breakpoints: Tuple[float, ...]
    values: Tuple[float, ...]
    name: str = "piecewise"

    def __post_init__(self):
        b = np.asarray(self.breakpoints, dtype=float)
        if b.size != len(self.values) + 1 or np.any(np.diff(b) <= 0):
            raise MediumError(f"Malformed piecewise coefficient {self.name}")

    def __call__(self, x) -> np.ndarray:
        b = np.asarray(self.breakpoints, dtype=float)
        idx = np.clip(np.searchsorted(b, np.asarray(x, dtype=float), side='right') - 1, 0, len(self.values) - 1)
        return np.asarray(self.values, dtype=float)[idx]

    def interior_breakpoints(self) -> Tuple[float, ...]:
        return tuple(self.breakpoints[1:-1])


@dataclass(frozen=True)
class TraceCoefficient1D:
    """Unperturbed interior: x -> coef(x*theta)"""
    coef: PeriodicCoefficient2D
    theta: CutVector

    def __call__(self, x) -> np.ndarray:
        return trace_coefficient(self.coef, self.theta, 0.0, x)

    def interior_breakpoints(self) -> Tuple[float, ...]:
        return ()


def bump_source(a: float, strength: float = 100.0) -> Callable:
    """exp(strength*(1 - 1/(1 - (x/a)^2))) on (-a, a), zero elsewhere"""
    def f(x):
        t = np.asarray(x, dtype=float) / a
        inside = np.abs(t) < 1.0
        safe = np.where(inside, 1.0 - t * t, 1.0)
        return np.where(inside, np.exp(strength * (1.0 - 1.0 / safe)), 0.0)
    return f


def zero_source(x) -> np.ndarray:
    return np.zeros(np.shape(x))


@dataclass(frozen=True)
class MediumSpec:
    """Whole-line medium: periodic extensions outside (-a, a), interior pieces and source inside"""
    mu_p: PeriodicCoefficient2D
    rho_p: PeriodicCoefficient2D
    theta: CutVector
    a: float
    mu_i: Callable
    rho_i: Callable
    source: Callable = field(default=zero_source)

    def __post_init__(self):
        if not self.a > 0:
            raise MediumError(f"Support radius a must be positive, got {self.a}")
        x = np.linspace(-self.a, self.a, 401)[1:-1]
        for name, coef in (('mu_i', self.mu_i), ('rho_i', self.rho_i)):
            values = np.asarray(coef(x), dtype=float)
            if not np.all(np.isfinite(values)) or values.min() <= 0:
                raise MediumError(f"Interior coefficient {name} must be finite and positive on (-a, a)")
        edges = np.abs(np.asarray(self.source(np.array([-self.a, self.a])), dtype=float))
        if edges.max() > 1e-12:
            raise MediumError("Source must be supported inside (-a, a)")

    def interior_breakpoints(self) -> np.ndarray:
        """-a, the discontinuities of mu_i and rho_i, and a"""
        inner = set()
        for coef in (self.mu_i, self.rho_i):
            getter = getattr(coef, 'interior_breakpoints', None)
            if getter is not None:
                inner.update(v for v in getter() if -self.a < v < self.a)
        return np.array([-self.a] + sorted(inner) + [self.a])

    def whole_line_mu(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return np.where(np.abs(x) < self.a, self.mu_i(x), trace_coefficient(self.mu_p, self.theta, 0.0, x))

    def whole_line_rho(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return np.where(np.abs(x) < self.a, self.rho_i(x), trace_coefficient(self.rho_p, self.theta, 0.0, x))


def interior_preset(name: str, mu_p: PeriodicCoefficient2D, rho_p: PeriodicCoefficient2D,
                    theta: CutVector, a: float) -> Tuple[Callable, Callable]:
    """
    Interior coefficients on (-a, a).

    'stepped' scales the piecewise values (given for a = 1) to (-a, a);
    'continuation' keeps the unperturbed traces.
    """
    if name == 'stepped':
        mu_i = PiecewiseCoefficient1D(tuple(a * b for b in STEPPED_MU_BREAKS), STEPPED_MU_VALUES, 'stepped-mu')
        rho_i = PiecewiseCoefficient1D(tuple(a * b for b in STEPPED_RHO_BREAKS), STEPPED_RHO_VALUES, 'stepped-rho')
        return mu_i, rho_i
    if name == 'continuation':
        return TraceCoefficient1D(mu_p, theta), TraceCoefficient1D(rho_p, theta)
    raise MediumError(f"Unknown interior preset: {name!r}")


def source_preset(name: str, a: float) -> Callable:
    if name == 'bump':
        return bump_source(a)
    if name == 'none':
        return zero_source
    raise MediumError(f"Unknown source preset: {name!r}")


def reflect_translate_medium(spec: MediumSpec, side: str) -> Tuple[Tuple[PeriodicCoefficient2D, PeriodicCoefficient2D], CutVector]:
    """
    Periodic coefficients of the plus-type half-line problem for one exterior side.

    plus:  F(y) = mu_p(y + a*theta)
    minus: F(y) = mu_p(-y - a*theta)

    The half-line problem on x > 0 with these coefficients gives w(x) = u+(a + x)
    for side plus and w(x) = u-(-a - x) for side minus, and its DtN coefficient is
    lambda+ or lambda- respectively.
    """
    shift = (spec.a * spec.theta.theta1, spec.a * spec.theta.theta2)
    if side == 'plus':
        sign, offset = 1.0, shift
    elif side == 'minus':
        sign, offset = -1.0, (-shift[0], -shift[1])
    else:
        raise MediumError(f"Unknown side: {side!r}")
    pair = (spec.mu_p.transformed(sign, offset, f"{spec.mu_p.name}[{side}]"),
            spec.rho_p.transformed(sign, offset, f"{spec.rho_p.name}[{side}]"))
    return pair, spec.theta
