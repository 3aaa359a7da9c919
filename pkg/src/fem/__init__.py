"""
Lagrange finite-element layer: meshes, quadrature, assembly and direct solves
"""
from .mesh import Mesh1D, TransverseSpace, PeriodicTriMesh, FEFunction1D, lagrange_basis
from .quadrature import gauss_points, subdivided_gauss_points, quadrature_on_subdivided_interval
from .assembly import (
    assemble_stiffness_mass_1d,
    assemble_helmholtz_1d,
    assemble_load_1d,
    assemble_directional_forms_2d,
    assemble_directional_helmholtz_2d,
)
from .solvers import DirichletSolver, solve_dirichlet, factorize

__all__ = [
    'Mesh1D', 'TransverseSpace', 'PeriodicTriMesh', 'FEFunction1D', 'lagrange_basis',
    'gauss_points', 'subdivided_gauss_points', 'quadrature_on_subdivided_interval',
    'assemble_stiffness_mass_1d', 'assemble_helmholtz_1d', 'assemble_load_1d',
    'assemble_directional_forms_2d', 'assemble_directional_helmholtz_2d',
    'DirichletSolver', 'solve_dirichlet', 'factorize',
]
