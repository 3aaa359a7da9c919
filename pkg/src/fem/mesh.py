"""
Meshes and finite-element function spaces
Covers 1D Lagrange meshes of any order, the periodic transverse space on (0, 1)
and the structured periodic triangulation of the unit cell
"""
import math
import logging
from dataclasses import dataclass
from typing import Tuple

import numpy as np

logger = logging.getLogger(__name__)


def lagrange_basis(order: int, xi) -> Tuple[np.ndarray, np.ndarray]:
    """
    Lagrange shape functions on equispaced nodes of the reference element [0, 1].

    Args:
        order: polynomial degree d >= 1
        xi: reference coordinates, any shape

    Returns:
        (values, derivatives) with a trailing axis of length d + 1
    """
    xi = np.asarray(xi, dtype=float)
    ref_nodes = np.linspace(0.0, 1.0, order + 1)
    values = np.empty(xi.shape + (order + 1,))
    derivs = np.zeros(xi.shape + (order + 1,))
    for i in range(order + 1):
        others = np.delete(ref_nodes, i)
        denom = np.prod(ref_nodes[i] - others)
        factors = xi[..., None] - others
        values[..., i] = np.prod(factors, axis=-1) / denom
        for k in range(order):
            derivs[..., i] += np.prod(np.delete(factors, k, axis=-1), axis=-1) / denom
    return values, derivs


@dataclass(frozen=True)
class Mesh1D:
    """1D mesh of Lagrange elements"""
    nodes: np.ndarray  # element vertices, strictly increasing
    order: int = 1  # polynomial degree d

    def __post_init__(self):
        nodes = np.array(self.nodes, dtype=float)
        if nodes.ndim != 1 or nodes.size < 2:
            raise ValueError("Mesh1D needs at least two nodes")
        if np.any(np.diff(nodes) <= 0):
            raise ValueError("Mesh1D nodes must be strictly increasing")
        if self.order < 1:
            raise ValueError(f"Element order must be >= 1, got {self.order}")
        nodes.setflags(write=False)
        object.__setattr__(self, 'nodes', nodes)

    @classmethod
    def uniform(cls, x_min: float, x_max: float, n_elements: int, order: int = 1) -> 'Mesh1D':
        return cls(np.linspace(x_min, x_max, n_elements + 1), order)

    @classmethod
    def from_breakpoints(cls, breakpoints, h: float, order: int = 1) -> 'Mesh1D':
        """
        Mesh whose vertices include every breakpoint, each piece split uniformly with step <= h.

        Examples:
            breakpoints [-1, -1/3, 0, 1/3, 1], h = 0.1 -> pieces of 7, 4, 4, 7 elements
        """
        b = np.asarray(breakpoints, dtype=float)
        pieces = []
        for left, right in zip(b[:-1], b[1:]):
            n = max(1, math.ceil((right - left) / h - 1e-9))
            pieces.append(np.linspace(left, right, n + 1)[:-1])
        pieces.append(b[-1:])
        return cls(np.concatenate(pieces), order)

    @property
    def n_elements(self) -> int:
        return self.nodes.size - 1

    @property
    def n_dofs(self) -> int:
        return self.n_elements * self.order + 1

    @property
    def x_min(self) -> float:
        return float(self.nodes[0])

    @property
    def x_max(self) -> float:
        return float(self.nodes[-1])

    @property
    def element_sizes(self) -> np.ndarray:
        return np.diff(self.nodes)

    def element_dofs(self) -> np.ndarray:
        """Global dof indices per element, shape (n_elements, d + 1)"""
        d = self.order
        return np.arange(self.n_elements)[:, None] * d + np.arange(d + 1)[None, :]

    def dof_coordinates(self) -> np.ndarray:
        d = self.order
        local = np.arange(d) / d
        inner = (self.nodes[:-1, None] + self.element_sizes[:, None] * local[None, :]).ravel()
        return np.append(inner, self.nodes[-1])

    def locate(self, x) -> Tuple[np.ndarray, np.ndarray]:
        """Element index and reference coordinate of each point; points outside are clamped to the end elements"""
        x = np.asarray(x, dtype=float)
        elem = np.searchsorted(self.nodes, x, side='right') - 1
        elem = np.clip(elem, 0, self.n_elements - 1)
        xi = (x - self.nodes[elem]) / self.element_sizes[elem]
        return elem, xi

    def shifted(self, offset: float) -> 'Mesh1D':
        return Mesh1D(self.nodes + offset, self.order)


class FEFunction1D:
    """Continuous piecewise-polynomial function on a Mesh1D"""

    def __init__(self, mesh: Mesh1D, coefficients):
        coefficients = np.asarray(coefficients)
        if coefficients.shape != (mesh.n_dofs,):
            raise ValueError(f"Expected {mesh.n_dofs} coefficients, got shape {coefficients.shape}")
        self.mesh = mesh
        self.coefficients = coefficients
        self._element_dofs = mesh.element_dofs()

    def evaluate(self, x) -> np.ndarray:
        elem, xi = self.mesh.locate(x)
        values, _ = lagrange_basis(self.mesh.order, xi)
        return np.sum(values * self.coefficients[self._element_dofs[elem]], axis=-1)

    def derivative(self, x) -> np.ndarray:
        elem, xi = self.mesh.locate(x)
        _, derivs = lagrange_basis(self.mesh.order, xi)
        slope = np.sum(derivs * self.coefficients[self._element_dofs[elem]], axis=-1)
        return slope / self.mesh.element_sizes[elem]

    def breakpoints(self) -> np.ndarray:
        return self.mesh.nodes

    def scaled(self, factor: complex) -> 'FEFunction1D':
        return FEFunction1D(self.mesh, factor * self.coefficients)

    def shifted(self, offset: float) -> 'FEFunction1D':
        return FEFunction1D(self.mesh.shifted(offset), self.coefficients)


class TransverseSpace:
    """
    Periodic Lagrange space on (0, 1).

    The last dof of the underlying mesh (s = 1) is identified with dof 0, so the
    space has N = n_elements * d degrees of freedom and every member is 1-periodic.
    """

    def __init__(self, mesh: Mesh1D):
        if abs(mesh.x_min) > 0 or abs(mesh.x_max - 1.0) > 0:
            raise ValueError(f"Transverse mesh must span [0, 1], got [{mesh.x_min}, {mesh.x_max}]")
        self.mesh = mesh
        self.order = mesh.order
        self.n_dofs = mesh.n_dofs - 1
        self.dof_points = mesh.dof_coordinates()[:-1]
        self._element_dofs = mesh.element_dofs() % self.n_dofs

    @classmethod
    def uniform(cls, n_elements: int, order: int = 1) -> 'TransverseSpace':
        return cls(Mesh1D.uniform(0.0, 1.0, n_elements, order))

    @staticmethod
    def wrap(s) -> np.ndarray:
        """s mod 1 in [0, 1), with 1.0 mapped to 0.0"""
        r = np.mod(np.asarray(s, dtype=float), 1.0)
        return np.where(r >= 1.0, 0.0, r)

    def basis_at(self, s) -> Tuple[np.ndarray, np.ndarray]:
        """
        Nonzero basis functions at each point of the periodic extension.

        Returns:
            (dofs, values), both of shape s.shape + (d + 1,)
        """
        elem, xi = self.mesh.locate(self.wrap(s))
        values, _ = lagrange_basis(self.order, xi)
        return self._element_dofs[elem], values

    def evaluate(self, coefficients, s) -> np.ndarray:
        dofs, values = self.basis_at(s)
        return np.sum(values * np.asarray(coefficients)[dofs], axis=-1)

    def interpolate(self, func) -> np.ndarray:
        return np.asarray(func(self.dof_points))

    def mass_matrix(self) -> np.ndarray:
        """Dense periodic mass matrix, exact for the space's polynomials"""
        from .quadrature import gauss_points

        ref_x, ref_w = gauss_points(self.order + 1)
        values, _ = lagrange_basis(self.order, ref_x)
        local = np.einsum('q,qi,qj->ij', ref_w, values, values)
        sizes = self.mesh.element_sizes
        mass = np.zeros((self.n_dofs, self.n_dofs))
        rows = np.repeat(self._element_dofs[:, :, None], self.order + 1, axis=2)
        cols = np.repeat(self._element_dofs[:, None, :], self.order + 1, axis=1)
        np.add.at(mass, (rows, cols), sizes[:, None, None] * local[None, :, :])
        return mass

    def element_vertices(self) -> np.ndarray:
        return self.mesh.nodes


class PeriodicTriMesh:
    """
    Structured triangulation of the unit cell (0, 1)^2.

    The m x m grid is split along the diagonal from (i, j) to (i + 1, j + 1). Solve
    dofs identify the faces y1 = 0 and y1 = 1; the faces y2 = 0 and y2 = 1 carry
    Dirichlet data and keep their own dofs.
    """

    def __init__(self, m: int):
        if m < 1:
            raise ValueError(f"Grid size must be positive, got {m}")
        self.m = m
        i, j = np.meshgrid(np.arange(m + 1), np.arange(m + 1), indexing='xy')
        self.vertices = np.column_stack([i.ravel() / m, j.ravel() / m])
        self.vertex_grid = np.column_stack([i.ravel(), j.ravel()])

        ii, jj = np.meshgrid(np.arange(m), np.arange(m), indexing='xy')
        v00 = self.vertex_index(ii, jj).ravel()
        v10 = self.vertex_index(ii + 1, jj).ravel()
        v11 = self.vertex_index(ii + 1, jj + 1).ravel()
        v01 = self.vertex_index(ii, jj + 1).ravel()
        lower = np.column_stack([v00, v10, v11])
        upper = np.column_stack([v00, v11, v01])
        self.triangles = np.vstack([lower, upper])

        col = np.arange(m + 1)
        self.y1_pairs = np.column_stack([self.vertex_index(0, col), self.vertex_index(m, col)])
        self.y2_pairs = np.column_stack([self.vertex_index(col, 0), self.vertex_index(col, m)])

        gi, gj = self.vertex_grid[:, 0], self.vertex_grid[:, 1]
        self.vertex_to_dof = (gi % m) + gj * m
        self.n_dofs = m * (m + 1)
        self.bottom_dofs = np.arange(m)
        self.top_dofs = m * m + np.arange(m)

    def vertex_index(self, i, j):
        return np.asarray(i) + np.asarray(j) * (self.m + 1)

    def transverse_space(self):
        """Transverse P1 space whose dof p sits at the bottom node (p/m, 0)"""
        return TransverseSpace.uniform(self.m, 1)

    def _cell_lookup(self, y):
        y = np.atleast_2d(np.asarray(y, dtype=float))
        m = self.m
        i = np.clip(np.floor(y[:, 0] * m).astype(int), 0, m - 1)
        j = np.clip(np.floor(y[:, 1] * m).astype(int), 0, m - 1)
        a = y[:, 0] * m - i
        b = y[:, 1] * m - j
        dofs = [self.vertex_to_dof[self.vertex_index(i + di, j + dj)] for di, dj in ((0, 0), (1, 0), (1, 1), (0, 1))]
        return a, b, dofs

    def evaluate(self, dof_values, y) -> np.ndarray:
        """Point values of a P1 field at local cell coordinates y (shape (n, 2))"""
        a, b, (d00, d10, d11, d01) = self._cell_lookup(y)
        u00, u10, u11, u01 = (dof_values[d] for d in (d00, d10, d11, d01))
        lower = (1 - a) * u00 + (a - b) * u10 + b * u11
        upper = (1 - b) * u00 + a * u11 + (b - a) * u01
        return np.where(a >= b, lower, upper)

    def directional_derivative(self, dof_values, y, theta) -> np.ndarray:
        """theta . grad of a P1 field at local cell coordinates y"""
        a, b, (d00, d10, d11, d01) = self._cell_lookup(y)
        u00, u10, u11, u01 = (dof_values[d] for d in (d00, d10, d11, d01))
        m = self.m
        lower = theta.theta1 * m * (u10 - u00) + theta.theta2 * m * (u11 - u10)
        upper = theta.theta1 * m * (u11 - u01) + theta.theta2 * m * (u01 - u00)
        return np.where(a >= b, lower, upper)

    def line_crossings(self, theta, x_max: float) -> np.ndarray:
        """Parameters x in [0, x_max] where x -> x*theta crosses a grid line or a diagonal"""
        m = self.m
        crossings = [np.array([0.0, x_max])]
        for rate in (theta.theta1, theta.theta2, abs(theta.theta1 - theta.theta2)):
            if rate > 0:
                k = np.arange(1, math.floor(x_max * rate * m) + 1)
                crossings.append(k / (m * rate))
        x = np.unique(np.concatenate(crossings))
        return x[(x >= 0.0) & (x <= x_max)]

    def vertex_values(self, dof_values) -> np.ndarray:
        return np.asarray(dof_values)[self.vertex_to_dof]
