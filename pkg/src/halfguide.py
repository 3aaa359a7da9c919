"""
Half-guide and half-line reconstruction, DtN operator and DtN coefficient
"""
import math
import logging
from concurrent.futures import ThreadPoolExecutor, as_completed
from dataclasses import dataclass
from typing import Callable, List, Optional

import numpy as np
import pandas as pd

from cells import (CellSolutions1D, CellSolutions2D, DtnQuad, FreshLocalDtn, assemble_dtn_quad_2d,
                   assemble_dtn_quad_quasi1d, cell_mesh, compute_cell_family, local_dtn_samples,
                   solve_cell_problems_1d, solve_cell_problems_2d)
from errors import DtnSignError
from fem import FEFunction1D, PeriodicTriMesh, TransverseSpace, assemble_directional_forms_2d
from media import CutVector, PeriodicCoefficient2D, constant_coefficient, wrap_unit
from riccati import PropagationOperator, QepSpectrum, select_and_build, solve_qep, spectral_radius

logger = logging.getLogger(__name__)

METHODS = ('2d', 'quasi1d')
BOUNDARY_DATA = ('one', 'cos')
REACH_TOLERANCE = 1e-12


def boundary_data(space: TransverseSpace, kind: str = 'one') -> np.ndarray:
    """Admissible boundary data with phi(0) = 1: 'one' or 'cos' (cos 2 pi s)"""
    if kind == 'one':
        return np.ones(space.n_dofs, dtype=complex)
    if kind == 'cos':
        return space.interpolate(lambda s: np.cos(2.0 * math.pi * s)).astype(complex)
    raise ValueError(f"Unknown boundary data: {kind!r}")


def check_reach(x: np.ndarray, x_max: float):
    """Reconstructed solutions cover [0, x_max] only"""
    slack = REACH_TOLERANCE * max(1.0, x_max)
    if x.size and (x.min() < -slack or x.max() > x_max + slack):
        raise ValueError(f"Half-line solution covers [0, {x_max:.6g}], got x in [{x.min():.6g}, {x.max():.6g}]; "
                         f"reconstruct more cells")


@dataclass(frozen=True)
class DtnResult:
    Lambda: np.ndarray  # Lambda_h = T10 P_h + T00
    lambda_plus: complex


def dtn_coefficient(T: DtnQuad, P: PropagationOperator, phi, space: TransverseSpace,
                    theta: CutVector) -> DtnResult:
    """
    lambda+ = (Lambda_h phi)(0) / theta2.

    The weak-form vector b = Lambda_h phi is turned into a transverse function by
    solving M c = b with the mass matrix; its value at s = 0 is c[0].
    """
    phi = np.asarray(phi, dtype=complex)
    if abs(space.evaluate(phi, 0.0) - 1.0) > 1e-12:
        raise ValueError("Boundary data must satisfy phi(0) = 1")
    Lambda = T.T10 @ P.matrix + T.T00
    nodal = np.linalg.solve(space.mass_matrix(), Lambda @ phi)
    lambda_plus = complex(space.evaluate(nodal, 0.0)) / theta.theta2
    if not lambda_plus.imag < 0:
        raise DtnSignError(f"nonphysical DtN sign: lambda+ = {lambda_plus}")
    return DtnResult(Lambda=Lambda, lambda_plus=lambda_plus)


class HalfLineSolution:
    """
    u+ on (0, L_cells/theta2), one scaled FE function per cell of length 1/theta2.

    Cell l carries w0[l] e0 + w1[l] e1 with the cell functions taken at s = l*beta mod 1.
    """

    def __init__(self, pieces: List[FEFunction1D], weights: np.ndarray, cell_length: float):
        self.pieces = pieces
        self.weights = weights
        self.cell_length = cell_length

    @property
    def x_max(self) -> float:
        return len(self.pieces) * self.cell_length

    def _dispatch(self, x, method: str) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        check_reach(x, self.x_max)
        cell = np.clip(np.floor(x / self.cell_length).astype(int), 0, len(self.pieces) - 1)
        out = np.zeros(x.shape, dtype=complex)
        for index in np.unique(cell):
            mask = cell == index
            out[mask] = getattr(self.pieces[index], method)(x[mask])
        return out

    def evaluate(self, x) -> np.ndarray:
        return self._dispatch(x, 'evaluate')

    def derivative(self, x) -> np.ndarray:
        return self._dispatch(x, 'derivative')

    def breakpoints(self, x_max: Optional[float] = None) -> np.ndarray:
        limit = self.x_max if x_max is None else x_max
        nodes = np.unique(np.concatenate([piece.breakpoints() for piece in self.pieces]))
        return nodes[nodes <= limit]


def reconstruct_halfline(P: PropagationOperator, cell_solver: Callable[[float], CellSolutions1D], phi,
                         l_cells: int, space: TransverseSpace, theta: CutVector,
                         max_workers: int = 1) -> HalfLineSolution:
    """
    Trace of the half-guide solution along the cut line.

    Weights are (P^l phi)(l beta mod 1) and (P^(l+1) phi)((l+1) beta mod 1); the cell
    functions come from fresh 1D solves at s = l beta mod 1.
    """
    beta = theta.slope
    traces = P.trace_sequence(phi, l_cells + 1)
    shifts = beta * np.arange(l_cells + 1)
    values = np.array([space.evaluate(traces[l], shifts[l]) for l in range(l_cells + 1)])
    values[0] = space.evaluate(np.asarray(phi, dtype=complex), 0.0)

    s_values = wrap_unit(shifts[:l_cells])
    cells: List[Optional[CellSolutions1D]] = [None] * l_cells
    with ThreadPoolExecutor(max_workers=max(1, max_workers)) as executor:
        futures = {executor.submit(cell_solver, float(s)): l for l, s in enumerate(s_values)}
        for future in as_completed(futures):
            cells[futures[future]] = future.result()

    length = theta.cell_length
    pieces = []
    for l, cell in enumerate(cells):
        coefficients = values[l] * cell.e0.coefficients + values[l + 1] * cell.e1.coefficients
        pieces.append(FEFunction1D(cell.e0.mesh.shifted(l * length), coefficients))
    weights = np.column_stack([values[:-1], values[1:]])
    return HalfLineSolution(pieces, weights, length)


class CutTrace:
    """x -> U(x theta) read off a 2D half-guide solution"""

    def __init__(self, halfguide: 'HalfGuideSolution'):
        self.halfguide = halfguide
        self.theta = halfguide.cells.theta
        self.mesh = halfguide.cells.mesh

    @property
    def x_max(self) -> float:
        return self.halfguide.l_cells * self.theta.cell_length

    def _local(self, x):
        x = np.asarray(x, dtype=float)
        check_reach(x, self.x_max)
        cell = np.clip(np.floor(x * self.theta.theta2).astype(int), 0, self.halfguide.l_cells - 1)
        y = np.column_stack([wrap_unit(x * self.theta.theta1), x * self.theta.theta2 - cell])
        return x, cell, y

    def _dispatch(self, x, derivative: bool) -> np.ndarray:
        x, cell, y = self._local(x)
        out = np.zeros(x.shape, dtype=complex)
        for index in np.unique(cell):
            mask = cell == index
            field = self.halfguide.cell_fields[index]
            if derivative:
                out[mask] = self.mesh.directional_derivative(field, y[mask], self.theta)
            else:
                out[mask] = self.mesh.evaluate(field, y[mask])
        return out

    def evaluate(self, x) -> np.ndarray:
        return self._dispatch(x, False)

    def derivative(self, x) -> np.ndarray:
        return self._dispatch(x, True)

    def breakpoints(self, x_max: Optional[float] = None) -> np.ndarray:
        return self.mesh.line_crossings(self.theta, self.x_max if x_max is None else x_max)


@dataclass
class HalfGuideSolution:
    """Cell-by-cell half-guide solution of the 2D method"""
    method: str
    phi: np.ndarray
    traces: np.ndarray  # (l_cells + 1, N), row l = P^l phi
    cell_fields: np.ndarray  # (l_cells, n_dofs)
    cells: CellSolutions2D

    @property
    def l_cells(self) -> int:
        return self.cell_fields.shape[0]

    def trace_along_cut(self) -> CutTrace:
        return CutTrace(self)

    def cell_h1_norms(self) -> np.ndarray:
        """H1_theta norm (int |U|^2 + |theta . grad U|^2)^(1/2) of each cell"""
        one = constant_coefficient(1.0)
        stiff, mass = assemble_directional_forms_2d(one, one, self.cells.theta, self.cells.mesh)
        gram = stiff + mass
        return np.array([math.sqrt(max(0.0, np.vdot(v, gram @ v).real)) for v in self.cell_fields])

    def field_frame(self, n_cells: Optional[int] = None) -> pd.DataFrame:
        """Vertex values of the first n_cells cells, y2 running upward through the guide"""
        mesh = self.cells.mesh
        count = self.l_cells if n_cells is None else min(n_cells, self.l_cells)
        frames = []
        for l in range(count):
            values = mesh.vertex_values(self.cell_fields[l])
            keep = mesh.vertex_grid[:, 1] < mesh.m if l < count - 1 else np.ones(values.size, dtype=bool)
            frames.append(pd.DataFrame({
                'y1': mesh.vertices[keep, 0],
                'y2': mesh.vertices[keep, 1] + l,
                'U_re': values[keep].real,
                'U_im': values[keep].imag,
            }))
        return pd.concat(frames, ignore_index=True)


def reconstruct_halfguide(P: PropagationOperator, cells2d: CellSolutions2D, phi, l_cells: int) -> HalfGuideSolution:
    """Cell l carries E0(P^l phi) + E1(P^(l+1) phi)"""
    phi = np.asarray(phi, dtype=complex)
    traces = P.trace_sequence(phi, l_cells + 1)
    traces[0] = phi
    fields = np.stack([cells2d.field(traces[l], traces[l + 1]) for l in range(l_cells)])
    return HalfGuideSolution(method='2d', phi=phi, traces=traces, cell_fields=fields, cells=cells2d)


@dataclass
class HalfLineResult:
    """Everything one half-line pipeline run produces"""
    method: str
    inv_h: int
    space: TransverseSpace
    dtn: DtnQuad
    spectrum: QepSpectrum
    propagation: PropagationOperator
    dtn_result: DtnResult
    solution: object  # HalfLineSolution or CutTrace
    halfguide: Optional[HalfGuideSolution] = None

    @property
    def lambda_plus(self) -> complex:
        return self.dtn_result.lambda_plus

    @property
    def spectral_radius(self) -> float:
        return spectral_radius(self.propagation)


def solve_halfline(mu_p: PeriodicCoefficient2D, rho_p: PeriodicCoefficient2D, theta: CutVector, omega,
                   method: str, h: float, h_theta: Optional[float] = None, order: int = 1,
                   l_cells: int = 8, boundary: str = 'one', fresh_cells: bool = False,
                   max_workers: int = 1, reconstruct: bool = True) -> HalfLineResult:
    """
    Full half-line pipeline: cell problems, DtN matrices, Riccati, reconstruction and lambda+.

    Args:
        h: transverse mesh step (1/h is rounded to the number of transverse elements)
        h_theta: step of the 1D cell meshes, defaults to h (quasi-1D only)
        reconstruct: skip the half-line solution when False (spectrum runs)
    """
    if method not in METHODS:
        raise ValueError(f"Unknown method: {method!r}")
    inv_h = max(1, int(round(1.0 / h)))
    w = complex(getattr(omega, 'omega', omega))
    logger.info(f"Half-line pipeline: method={method}, 1/h={inv_h}, omega={w}")

    if method == '2d':
        mesh = PeriodicTriMesh(inv_h)
        cells = solve_cell_problems_2d(mu_p, rho_p, theta, w, mesh, max_workers)
        space = cells.space
        T = assemble_dtn_quad_2d(cells)
    else:
        space = TransverseSpace.uniform(inv_h, order)
        mesh_theta = cell_mesh(theta, h_theta or h, order)
        family = compute_cell_family(space.dof_points, mu_p, rho_p, theta, w, mesh_theta, max_workers)
        t = local_dtn_samples(family, space)
        evaluator = FreshLocalDtn(mu_p, rho_p, theta, w, mesh_theta, max_workers) if fresh_cells else None
        T = assemble_dtn_quad_quasi1d(t, space, theta, w, evaluator)

    spectrum = solve_qep(T)
    P = select_and_build(spectrum, T)
    phi = boundary_data(space, boundary)
    dtn = dtn_coefficient(T, P, phi, space, theta)
    logger.info(f"lambda+ = {dtn.lambda_plus.real:.10g}{dtn.lambda_plus.imag:+.10g}i")

    halfguide, solution = None, None
    if reconstruct and method == '2d':
        halfguide = reconstruct_halfguide(P, cells, phi, l_cells)
        solution = halfguide.trace_along_cut()
    elif reconstruct:
        def cell_solver(s):
            return solve_cell_problems_1d(s, mu_p, rho_p, theta, w, mesh_theta)

        solution = reconstruct_halfline(P, cell_solver, phi, l_cells, space, theta, max_workers)

    return HalfLineResult(method=method, inv_h=inv_h, space=space, dtn=T, spectrum=spectrum, propagation=P,
                          dtn_result=dtn, solution=solution, halfguide=halfguide)
