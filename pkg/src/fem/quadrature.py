"""
Gauss-Legendre quadrature on intervals split at breakpoints
"""
from functools import lru_cache
from typing import Callable, Tuple

import numpy as np
from numpy.polynomial.legendre import leggauss


@lru_cache(maxsize=32)
def gauss_points(order: int) -> Tuple[np.ndarray, np.ndarray]:
    """
    Gauss-Legendre rule with `order` points mapped to the reference interval [0, 1].

    Returns:
        (points, weights), weights summing to 1
    """
    if order < 1:
        raise ValueError(f"Quadrature order must be positive, got {order}")
    xi, w = leggauss(order)
    points = 0.5 * (xi + 1.0)
    weights = 0.5 * w
    points.setflags(write=False)
    weights.setflags(write=False)
    return points, weights


def subdivided_gauss_points(breakpoints, order: int) -> Tuple[np.ndarray, np.ndarray]:
    """
    Quadrature nodes and weights of a composite Gauss rule.

    Args:
        breakpoints: sorted interval ends; zero-length pieces are dropped
        order: number of Gauss points per piece

    Returns:
        (points, weights) as flat arrays
    """
    b = np.asarray(breakpoints, dtype=float)
    if b.ndim != 1 or b.size < 2:
        raise ValueError("Need at least two breakpoints")
    if np.any(np.diff(b) < 0):
        raise ValueError("Breakpoints must be sorted")
    lengths = np.diff(b)
    keep = lengths > 0
    left = b[:-1][keep]
    lengths = lengths[keep]
    ref_x, ref_w = gauss_points(order)
    points = left[:, None] + lengths[:, None] * ref_x[None, :]
    weights = lengths[:, None] * ref_w[None, :]
    return points.ravel(), weights.ravel()


def quadrature_on_subdivided_interval(breakpoints, order: int, integrand: Callable) -> complex:
    """
    Integrate over [breakpoints[0], breakpoints[-1]] with Gauss-Legendre on each piece.

    The integrand is called once with the array of all nodes. The rule is exact for
    piecewise polynomials of degree <= 2*order - 1 whose pieces match the breakpoints.

    Examples:
        breakpoints [0, 0.3, 1], order 2, s**2 -> 1/3 up to rounding
    """
    points, weights = subdivided_gauss_points(breakpoints, order)
    values = np.asarray(integrand(points))
    return complex(np.sum(weights * values)) if np.iscomplexobj(values) else float(np.sum(weights * values))
