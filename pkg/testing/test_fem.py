"""
Tests for the finite-element layer
Quadrature, meshes, 1D and directional 2D assembly, constrained direct solves
"""
import math
import os
import sys
import unittest

import numpy as np
import scipy.sparse as sps

# Add src directory to path so imports work
current_dir = os.path.dirname(os.path.abspath(__file__))
parent_dir = os.path.dirname(current_dir)
sys.path.insert(0, os.path.join(parent_dir, 'src'))

from errors import AssemblyError, SingularSystemError
from fem import (DirichletSolver, FEFunction1D, Mesh1D, PeriodicTriMesh, TransverseSpace,
                 assemble_directional_forms_2d, assemble_helmholtz_1d, assemble_load_1d,
                 assemble_stiffness_mass_1d, factorize, gauss_points, lagrange_basis,
                 quadrature_on_subdivided_interval, solve_dirichlet, subdivided_gauss_points)
from media import CutVector, constant_coefficient, trig_mu, trig_rho

THETA = CutVector.from_angle(math.pi / 3)


def one(x):
    return np.ones_like(x)


class TestQuadrature(unittest.TestCase):
    def test_gauss_rule_on_unit_interval(self):
        points, weights = gauss_points(2)
        self.assertAlmostEqual(weights.sum(), 1.0, places=15)
        self.assertAlmostEqual(float(np.sum(weights * points ** 3)), 0.25, places=14)
        with self.assertRaises(ValueError):
            gauss_points(0)

    def test_subdivided_rule(self):
        value = quadrature_on_subdivided_interval([0.0, 0.3, 1.0], 2, lambda s: s ** 2)
        self.assertAlmostEqual(value, 1.0 / 3.0, places=14)
        points, _ = subdivided_gauss_points([0.0, 0.5, 0.5, 1.0], 3)
        self.assertEqual(points.size, 6)
        with self.assertRaises(ValueError):
            subdivided_gauss_points([1.0, 0.0], 2)

    def test_piecewise_integrand_exact_with_breakpoint(self):
        # |s - 0.3| is linear on each piece
        value = quadrature_on_subdivided_interval([0.0, 0.3, 1.0], 1, lambda s: np.abs(s - 0.3))
        self.assertAlmostEqual(value, 0.5 * 0.09 + 0.5 * 0.49, places=14)


class TestMeshes(unittest.TestCase):
    def test_lagrange_partition_of_unity(self):
        xi = np.linspace(0.0, 1.0, 11)
        values, derivs = lagrange_basis(3, xi)
        np.testing.assert_allclose(values.sum(axis=-1), 1.0, atol=1e-13)
        np.testing.assert_allclose(derivs.sum(axis=-1), 0.0, atol=1e-12)

    def test_breakpoint_mesh(self):
        mesh = Mesh1D.from_breakpoints([-1.0, -1.0 / 3.0, 0.0, 1.0 / 3.0, 1.0], 0.1)
        self.assertEqual(mesh.n_elements, 22)
        self.assertTrue(np.any(np.isclose(mesh.nodes, -1.0 / 3.0, atol=0, rtol=0)))
        self.assertLessEqual(mesh.element_sizes.max(), 0.1 + 1e-12)
        self.assertEqual(Mesh1D.uniform(0.0, 1.0, 4, order=2).n_dofs, 9)

    def test_invalid_mesh(self):
        with self.assertRaises(ValueError):
            Mesh1D(np.array([0.0, 0.0, 1.0]))
        with self.assertRaises(ValueError):
            Mesh1D(np.array([0.0, 1.0]), order=0)

    def test_quadratic_elements_reproduce_quadratics(self):
        mesh = Mesh1D.uniform(0.0, 2.0, 5, order=2)
        u = FEFunction1D(mesh, mesh.dof_coordinates() ** 2)
        x = np.linspace(0.0, 2.0, 37)
        np.testing.assert_allclose(u.evaluate(x), x ** 2, atol=1e-12)
        np.testing.assert_allclose(u.derivative(x[1:-1]), 2 * x[1:-1], atol=1e-11)
        np.testing.assert_allclose(u.shifted(1.0).evaluate(x + 1.0), x ** 2, atol=1e-12)

    def test_transverse_space_is_periodic(self):
        space = TransverseSpace.uniform(16, order=2)
        self.assertEqual(space.n_dofs, 32)
        coefficients = space.interpolate(lambda s: np.cos(2 * np.pi * s))
        s = np.array([0.1, 0.35, 0.8])
        np.testing.assert_allclose(space.evaluate(coefficients, s + 1.0), space.evaluate(coefficients, s))
        np.testing.assert_allclose(space.evaluate(coefficients, s), np.cos(2 * np.pi * s), atol=5e-3)
        self.assertAlmostEqual(space.mass_matrix().sum(), 1.0, places=13)

    def test_tri_mesh_layout(self):
        mesh = PeriodicTriMesh(4)
        self.assertEqual(mesh.n_dofs, 20)
        self.assertEqual(len(mesh.vertices), 25)
        self.assertEqual(len(mesh.triangles), 32)
        # y1 = 0 and y1 = 1 share dofs
        np.testing.assert_array_equal(mesh.vertex_to_dof[mesh.y1_pairs[:, 0]], mesh.vertex_to_dof[mesh.y1_pairs[:, 1]])

    def test_tri_mesh_evaluation(self):
        mesh = PeriodicTriMesh(6)
        field = mesh.vertices[:, 1].copy()
        dof_values = np.zeros(mesh.n_dofs)
        dof_values[mesh.vertex_to_dof] = field
        y = np.random.default_rng(1).random((50, 2))
        np.testing.assert_allclose(mesh.evaluate(dof_values, y), y[:, 1], atol=1e-13)
        np.testing.assert_allclose(mesh.directional_derivative(dof_values, y, THETA), THETA.theta2, atol=1e-12)

    def test_line_crossings(self):
        mesh = PeriodicTriMesh(4)
        x = mesh.line_crossings(THETA, THETA.cell_length)
        self.assertEqual(x[0], 0.0)
        self.assertAlmostEqual(x[-1], THETA.cell_length)
        self.assertTrue(np.all(np.diff(x) > 0))


class TestAssembly(unittest.TestCase):
    def test_constant_forms(self):
        mesh = Mesh1D.uniform(0.0, 2.0, 10, order=2)
        stiff, mass = assemble_stiffness_mass_1d(one, lambda x: 3.0 * np.ones_like(x), mesh)
        np.testing.assert_allclose(stiff @ np.ones(mesh.n_dofs), 0.0, atol=1e-12)
        self.assertAlmostEqual(mass.sum(), 6.0, places=12)
        self.assertAlmostEqual(float(assemble_load_1d(one, mesh).sum()), 2.0, places=12)

    def test_non_finite_coefficient(self):
        mesh = Mesh1D.uniform(0.0, 1.0, 4)
        with self.assertRaises(AssemblyError):
            assemble_stiffness_mass_1d(lambda x: np.full_like(x, np.nan), one, mesh)

    def test_helmholtz_cell_solution(self):
        omega = 8 + 0.25j
        length = 1.0
        mesh = Mesh1D.uniform(0.0, length, 1000)
        matrix = assemble_helmholtz_1d(one, one, omega, mesh)
        u = solve_dirichlet(matrix, [0, mesh.n_dofs - 1], [1.0, 0.0])
        x = mesh.dof_coordinates()
        exact = np.sin(omega * (length - x)) / np.sin(omega * length)
        self.assertLess(np.max(np.abs(u - exact)) / np.max(np.abs(exact)), 1e-4)
        self.assertEqual(u[0], 1.0)
        self.assertEqual(u[-1], 0.0)

    def test_directional_forms(self):
        mesh = PeriodicTriMesh(5)
        stiff, mass = assemble_directional_forms_2d(trig_mu(), constant_coefficient(1.0), THETA, mesh)
        self.assertAlmostEqual(mass.sum(), 1.0, places=12)
        np.testing.assert_allclose(stiff @ np.ones(mesh.n_dofs), 0.0, atol=1e-11)
        self.assertLess(abs(stiff - stiff.T).max(), 1e-13)
        _, weighted = assemble_directional_forms_2d(trig_mu(), trig_rho(), THETA, mesh)
        self.assertAlmostEqual(weighted.sum(), 1.5, places=2)


class TestSolvers(unittest.TestCase):
    def test_dirichlet_values_are_exact(self):
        mesh = Mesh1D.uniform(0.0, 1.0, 20)
        matrix = assemble_helmholtz_1d(one, one, 3 + 0.5j, mesh)
        solver = DirichletSolver(matrix, [0, mesh.n_dofs - 1], natural_order=True)
        data = np.array([[1.0, 0.0, 2.0], [0.0, 1.0, -1.0]])
        many = solver.solve_many(data, max_workers=2)
        np.testing.assert_array_equal(many[[0, -1]], data)
        np.testing.assert_allclose(many, solver.solve(data))
        residual = (matrix @ many)[1:-1]
        self.assertLess(np.abs(residual).max(), 1e-12)

    def test_singular_system(self):
        with self.assertRaises(SingularSystemError):
            factorize(sps.csr_matrix((4, 4)))
        with self.assertRaises(ValueError):
            DirichletSolver(sps.identity(3), [0, 0])


if __name__ == '__main__':
    unittest.main()
