"""
Cell problems and local DtN matrices for the quasi-1D and 2D discretizations
"""
from .dtn import DtnQuad, dtn_quad_distance
from .quasi1d import (
    CellSolutions1D,
    LocalDtnFunctions,
    FreshLocalDtn,
    cell_mesh,
    solve_cell_problems_1d,
    local_dtn_samples,
    compute_cell_family,
    assemble_dtn_quad_quasi1d,
)
from .cell2d import CellSolutions2D, solve_cell_problems_2d, assemble_dtn_quad_2d

__all__ = [
    'DtnQuad', 'dtn_quad_distance',
    'CellSolutions1D', 'LocalDtnFunctions', 'FreshLocalDtn', 'cell_mesh', 'solve_cell_problems_1d',
    'local_dtn_samples', 'compute_cell_family', 'assemble_dtn_quad_quasi1d',
    'CellSolutions2D', 'solve_cell_problems_2d', 'assemble_dtn_quad_2d',
]
