"""
Complex-symmetric finite-element assembly
1D Helmholtz matrices on Mesh1D and directional (theta . grad) matrices on the unit cell
"""
import logging
from typing import Callable, Tuple

import numpy as np
import scipy.sparse as sps

from errors import AssemblyError
from .mesh import Mesh1D, PeriodicTriMesh, lagrange_basis
from .quadrature import gauss_points

logger = logging.getLogger(__name__)

# Symmetric 6-point rule on the reference triangle, exact up to degree 4
# (barycentric coordinates, weights summing to 1)
_TRI_A1, _TRI_W1 = 0.445948490915965, 0.223381589678011
_TRI_A2, _TRI_W2 = 0.091576213509771, 0.109951743655322
TRIANGLE_BARYCENTRIC = np.array([
    [1 - 2 * _TRI_A1, _TRI_A1, _TRI_A1],
    [_TRI_A1, 1 - 2 * _TRI_A1, _TRI_A1],
    [_TRI_A1, _TRI_A1, 1 - 2 * _TRI_A1],
    [1 - 2 * _TRI_A2, _TRI_A2, _TRI_A2],
    [_TRI_A2, 1 - 2 * _TRI_A2, _TRI_A2],
    [_TRI_A2, _TRI_A2, 1 - 2 * _TRI_A2],
])
TRIANGLE_WEIGHTS = np.array([_TRI_W1] * 3 + [_TRI_W2] * 3)


def _omega_value(omega) -> complex:
    return complex(getattr(omega, 'omega', omega))


def _sample(coef: Callable, *coords, name: str) -> np.ndarray:
    values = np.broadcast_to(np.asarray(coef(*coords)), coords[0].shape)
    if not np.all(np.isfinite(values)):
        bad = np.count_nonzero(~np.isfinite(values))
        raise AssemblyError(f"Coefficient {name} has {bad} non-finite samples")
    return values


def _to_csr(local: np.ndarray, dofs: np.ndarray, n: int) -> sps.csr_matrix:
    k = dofs.shape[1]
    rows = np.repeat(dofs[:, :, None], k, axis=2)
    cols = np.repeat(dofs[:, None, :], k, axis=1)
    return sps.coo_matrix((local.ravel(), (rows.ravel(), cols.ravel())), shape=(n, n)).tocsr()


def assemble_stiffness_mass_1d(mu: Callable, rho: Callable, mesh: Mesh1D,
                               quad_order: int = None) -> Tuple[sps.csr_matrix, sps.csr_matrix]:
    """
    Weighted stiffness and mass matrices of a 1D Lagrange mesh.

    Args:
        mu, rho: vectorized coefficient maps x -> value
        mesh: Mesh1D of any order
        quad_order: Gauss points per element, default max(2, d + 1)

    Returns:
        (K, M) with K[p, q] = int mu phi_q' phi_p' and M[p, q] = int rho phi_q phi_p
    """
    d = mesh.order
    q = quad_order or max(2, d + 1)
    ref_x, ref_w = gauss_points(q)
    values, derivs = lagrange_basis(d, ref_x)
    h = mesh.element_sizes
    x_q = mesh.nodes[:-1, None] + h[:, None] * ref_x[None, :]

    mu_q = _sample(mu, x_q, name='mu')
    rho_q = _sample(rho, x_q, name='rho')

    stiff = np.einsum('eq,q,qi,qj->eij', mu_q, ref_w, derivs, derivs) / h[:, None, None]
    mass = np.einsum('eq,q,qi,qj->eij', rho_q, ref_w, values, values) * h[:, None, None]

    dofs = mesh.element_dofs()
    return _to_csr(stiff, dofs, mesh.n_dofs), _to_csr(mass, dofs, mesh.n_dofs)


def assemble_helmholtz_1d(mu: Callable, rho: Callable, omega, mesh: Mesh1D,
                          quad_order: int = None) -> sps.csr_matrix:
    """A = K - omega^2 M, complex symmetric"""
    stiff, mass = assemble_stiffness_mass_1d(mu, rho, mesh, quad_order)
    w = _omega_value(omega)
    return (stiff.astype(complex) - (w * w) * mass).tocsr()


def assemble_load_1d(f: Callable, mesh: Mesh1D, quad_order: int = 6) -> np.ndarray:
    """Load vector b[p] = int f phi_p"""
    ref_x, ref_w = gauss_points(quad_order)
    values, _ = lagrange_basis(mesh.order, ref_x)
    h = mesh.element_sizes
    x_q = mesh.nodes[:-1, None] + h[:, None] * ref_x[None, :]
    f_q = _sample(f, x_q, name='f')
    local = np.einsum('eq,q,qi->ei', f_q, ref_w, values) * h[:, None]
    load = np.zeros(mesh.n_dofs, dtype=np.result_type(local.dtype, float))
    np.add.at(load, mesh.element_dofs(), local)
    return load


def assemble_directional_forms_2d(mu_p: Callable, rho_p: Callable, theta,
                                  mesh: PeriodicTriMesh) -> Tuple[sps.csr_matrix, sps.csr_matrix]:
    """
    Directional stiffness and mass matrices on the y1-periodic dof set of the unit cell.

    K[p, q] = int mu_p (theta . grad phi_q)(theta . grad phi_p),  M[p, q] = int rho_p phi_q phi_p
    """
    corners = mesh.vertices[mesh.triangles]  # (n_tri, 3, 2)
    x0, y0 = corners[:, 0, 0], corners[:, 0, 1]
    x1, y1 = corners[:, 1, 0], corners[:, 1, 1]
    x2, y2 = corners[:, 2, 0], corners[:, 2, 1]
    det = (x1 - x0) * (y2 - y0) - (x2 - x0) * (y1 - y0)
    area = 0.5 * np.abs(det)

    grad_x = np.column_stack([y1 - y2, y2 - y0, y0 - y1]) / det[:, None]
    grad_y = np.column_stack([x2 - x1, x0 - x2, x1 - x0]) / det[:, None]
    directional = theta.theta1 * grad_x + theta.theta2 * grad_y  # (n_tri, 3)

    qp = np.einsum('qk,tkd->tqd', TRIANGLE_BARYCENTRIC, corners)
    mu_q = _sample(mu_p, qp[..., 0], qp[..., 1], name='mu_p')
    rho_q = _sample(rho_p, qp[..., 0], qp[..., 1], name='rho_p')

    mu_avg = area * (mu_q @ TRIANGLE_WEIGHTS)
    stiff = mu_avg[:, None, None] * directional[:, :, None] * directional[:, None, :]
    mass = area[:, None, None] * np.einsum(
        'tq,q,qi,qj->tij', rho_q, TRIANGLE_WEIGHTS, TRIANGLE_BARYCENTRIC, TRIANGLE_BARYCENTRIC)

    dofs = mesh.vertex_to_dof[mesh.triangles]
    return _to_csr(stiff, dofs, mesh.n_dofs), _to_csr(mass, dofs, mesh.n_dofs)


def assemble_directional_helmholtz_2d(mu_p: Callable, rho_p: Callable, theta, omega,
                                      mesh: PeriodicTriMesh) -> sps.csr_matrix:
    stiff, mass = assemble_directional_forms_2d(mu_p, rho_p, theta, mesh)
    w = _omega_value(omega)
    logger.debug(f"Assembled 2D directional system: {mesh.n_dofs} dofs, omega={w}")
    return (stiff.astype(complex) - (w * w) * mass).tocsr()
