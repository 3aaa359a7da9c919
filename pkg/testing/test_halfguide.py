"""
Tests for the half-line pipeline
DtN coefficient, half-line reconstruction (quasi-1D) and half-guide reconstruction (2D)
"""
import math
import os
import sys
import unittest

import numpy as np

# Add src directory to path so imports work
current_dir = os.path.dirname(os.path.abspath(__file__))
parent_dir = os.path.dirname(current_dir)
sys.path.insert(0, os.path.join(parent_dir, 'src'))

from halfguide import boundary_data, dtn_coefficient, reconstruct_halfguide, solve_halfline
from fem import TransverseSpace
from media import CutVector, constant_coefficient, trig_mu, trig_rho
from oracles import ConstantMediumReference, relative_h1_error

THETA = CutVector.from_angle(math.pi / 3)
OMEGA = 8 + 0.25j


class TestBoundaryData(unittest.TestCase):
    def test_kinds(self):
        space = TransverseSpace.uniform(8)
        for kind in ('one', 'cos'):
            phi = boundary_data(space, kind)
            self.assertAlmostEqual(complex(space.evaluate(phi, 0.0)), 1.0, places=12)
        with self.assertRaises(ValueError):
            boundary_data(space, 'triangle')


class TestConstantMediumQuasi1D(unittest.TestCase):
    def test_lambda_plus_matches_closed_form(self):
        for mu, rho in ((1.0, 1.0), (2.0, 0.5)):
            result = solve_halfline(constant_coefficient(mu), constant_coefficient(rho), THETA, OMEGA,
                                    'quasi1d', 1 / 16, h_theta=1e-3)
            expected = ConstantMediumReference(mu, rho, OMEGA, THETA).lambda_plus
            self.assertLess(abs(result.lambda_plus - expected) / abs(expected), 1e-3)
            print(f"\n[PASS] mu={mu}, rho={rho}: lambda+ = {result.lambda_plus:.6f} (exact {expected:.6f})")

    def test_halfline_solution_matches_closed_form(self):
        result = solve_halfline(constant_coefficient(1.0), constant_coefficient(1.0), THETA, OMEGA,
                                'quasi1d', 1 / 16, h_theta=1e-3)
        reference = ConstantMediumReference(1.0, 1.0, OMEGA, THETA)
        solution = result.solution
        self.assertAlmostEqual(solution.x_max, 8 * THETA.cell_length)
        self.assertAlmostEqual(complex(solution.evaluate(np.array([0.0]))[0]), 1.0, places=12)
        error = relative_h1_error(solution, reference, (0.0, 4 * THETA.cell_length))
        self.assertLess(error, 1e-2)
        self.assertAlmostEqual(result.spectral_radius, reference.spectral_radius, places=3)

    def test_reconstruction_can_be_skipped(self):
        result = solve_halfline(constant_coefficient(1.0), constant_coefficient(1.0), THETA, OMEGA,
                                'quasi1d', 1 / 8, h_theta=1e-2, reconstruct=False)
        self.assertIsNone(result.solution)
        self.assertIsNone(result.halfguide)
        self.assertLess(result.lambda_plus.imag, 0)


class TestTrigMedium(unittest.TestCase):
    @classmethod
    def setUpClass(cls):
        cls.result = solve_halfline(trig_mu(), trig_rho(), THETA, OMEGA, 'quasi1d', 1 / 8, h_theta=0.02,
                                    l_cells=4, max_workers=2)

    def test_physical_sign_and_decay(self):
        self.assertLess(self.result.lambda_plus.imag, 0)
        self.assertLess(self.result.spectral_radius, 1.0)
        self.assertEqual(self.result.inv_h, 8)

    def test_boundary_data_must_start_at_one(self):
        result = self.result
        with self.assertRaises(ValueError):
            dtn_coefficient(result.dtn, result.propagation, 2.0 * np.ones(result.space.n_dofs), result.space, THETA)

    def test_cosine_boundary_data(self):
        result = solve_halfline(trig_mu(), trig_rho(), THETA, OMEGA, 'quasi1d', 1 / 8, h_theta=0.02,
                                l_cells=2, boundary='cos')
        self.assertLess(result.lambda_plus.imag, 0)
        self.assertAlmostEqual(complex(result.solution.evaluate(np.array([0.0]))[0]), 1.0, places=10)

    def test_solution_is_continuous_across_cells(self):
        solution = self.result.solution
        length = THETA.cell_length
        for l in range(1, 4):
            left = solution.pieces[l - 1].evaluate(np.array([l * length]))[0]
            right = solution.pieces[l].evaluate(np.array([l * length]))[0]
            self.assertAlmostEqual(complex(left), complex(right), places=10)

    def test_unknown_method(self):
        with self.assertRaises(ValueError):
            solve_halfline(trig_mu(), trig_rho(), THETA, OMEGA, '3d', 1 / 8)


class TestHalfGuide2D(unittest.TestCase):
    @classmethod
    def setUpClass(cls):
        cls.result = solve_halfline(trig_mu(), trig_rho(), THETA, OMEGA, '2d', 1 / 8, l_cells=3, max_workers=2)

    def test_cut_trace(self):
        trace = self.result.solution
        self.assertAlmostEqual(complex(trace.evaluate(np.array([0.0]))[0]), 1.0, places=10)
        self.assertAlmostEqual(trace.x_max, 3 * THETA.cell_length)
        crossings = trace.breakpoints()
        self.assertEqual(crossings[0], 0.0)
        self.assertTrue(np.all(np.diff(crossings) > 0))

    def test_half_guide_fields(self):
        halfguide = self.result.halfguide
        self.assertEqual(halfguide.l_cells, 3)
        self.assertEqual(halfguide.traces.shape, (4, 8))
        norms = halfguide.cell_h1_norms()
        self.assertEqual(norms.shape, (3,))
        self.assertTrue(np.all(norms > 0))
        frame = halfguide.field_frame(n_cells=2)
        self.assertEqual(list(frame.columns), ['y1', 'y2', 'U_re', 'U_im'])
        self.assertEqual(len(frame), 9 * 8 + 9 * 9)
        self.assertAlmostEqual(frame['y2'].max(), 2.0)

    def test_physical_sign(self):
        self.assertLess(self.result.lambda_plus.imag, 0)
        self.assertLess(self.result.spectral_radius, 1.0)

    def test_constant_medium(self):
        result = solve_halfline(constant_coefficient(1.0), constant_coefficient(1.0), THETA, OMEGA, '2d', 1 / 32,
                                l_cells=1, reconstruct=False)
        expected = ConstantMediumReference(1.0, 1.0, OMEGA, THETA).lambda_plus
        self.assertLess(abs(result.lambda_plus - expected) / abs(expected), 3e-2)
        print(f"\n[PASS] 2D constant medium: lambda+ = {result.lambda_plus:.6f} (exact {expected:.6f})")


class TestReach(unittest.TestCase):
    @classmethod
    def setUpClass(cls):
        one = constant_coefficient(1.0)
        cls.quasi1d = solve_halfline(one, one, THETA, OMEGA, 'quasi1d', 1 / 8, h_theta=1e-2, l_cells=2).solution
        cls.trace = solve_halfline(one, one, THETA, OMEGA, '2d', 1 / 8, l_cells=2).solution

    def test_evaluation_stops_at_last_cell(self):
        for solution in (self.quasi1d, self.trace):
            self.assertAlmostEqual(solution.x_max, 2 * THETA.cell_length)
            values = solution.evaluate(np.array([0.0, solution.x_max]))
            self.assertTrue(np.all(np.isfinite(values)))
            with self.assertRaises(ValueError):
                solution.evaluate(np.array([3 * THETA.cell_length]))
            with self.assertRaises(ValueError):
                solution.derivative(np.array([solution.x_max + 1e-3]))
            with self.assertRaises(ValueError):
                solution.evaluate(np.array([-1e-3, 0.5]))

    def test_more_cells_extend_the_reach(self):
        one = constant_coefficient(1.0)
        solution = solve_halfline(one, one, THETA, OMEGA, 'quasi1d', 1 / 8, h_theta=1e-2, l_cells=3).solution
        x = 2.5 * THETA.cell_length
        reference = ConstantMediumReference(1.0, 1.0, OMEGA, THETA)
        exact = complex(reference.evaluate(np.array([x]))[0])
        self.assertLess(abs(complex(solution.evaluate(np.array([x]))[0]) - exact), 5e-2)


class TestFiberedCrossCheck(unittest.TestCase):
    def test_cut_trace_matches_quasi1d(self):
        one = constant_coefficient(1.0)
        for inv_h in (16, 32):
            h = 1.0 / inv_h
            quasi1d = solve_halfline(one, one, THETA, OMEGA, 'quasi1d', h, h_theta=h, l_cells=2,
                                     boundary='cos').solution
            trace = solve_halfline(one, one, THETA, OMEGA, '2d', h, l_cells=2, boundary='cos').solution
            x = np.linspace(0.0, trace.x_max, 201)
            reference = quasi1d.evaluate(x)
            distance = np.max(np.abs(trace.evaluate(x) - reference)) / np.max(np.abs(reference))
            self.assertLess(distance, 6 * (h + h))
            print(f"\n[PASS] 1/h={inv_h}: sup |U(x theta) - u_h(x)| / sup |u_h| = {distance:.3e}")


class TestBoundaryDataIndependence(unittest.TestCase):
    def test_lambda_plus_does_not_depend_on_phi(self):
        one = constant_coefficient(1.0)
        differences = []
        for inv_h in (32, 64):
            values = [solve_halfline(one, one, THETA, OMEGA, 'quasi1d', 1.0 / inv_h, h_theta=1e-3,
                                     boundary=kind, reconstruct=False).lambda_plus for kind in ('one', 'cos')]
            differences.append(abs(values[0] - values[1]) / abs(values[0]))
        self.assertLessEqual(differences[0], 5e-2)
        self.assertLess(differences[1], differences[0] + 1e-9)
        print(f"\n[PASS] |lambda+(one) - lambda+(cos)| / |lambda+| = {differences[0]:.2e}, {differences[1]:.2e}")


class TestGeometricDecay(unittest.TestCase):
    def test_dominant_mode_decays_at_spectral_radius(self):
        result = solve_halfline(trig_mu(), trig_rho(), THETA, OMEGA, '2d', 1 / 8, l_cells=1, max_workers=2)
        P = result.propagation
        dominant = P.eigenvectors[:, np.argmax(np.abs(P.eigenvalues))]
        halfguide = reconstruct_halfguide(P, result.halfguide.cells, dominant, 4)
        norms = halfguide.cell_h1_norms()
        np.testing.assert_allclose(norms[1:] / norms[:-1], result.spectral_radius, rtol=1e-6)

    def test_constant_medium_decay_rate(self):
        one = constant_coefficient(1.0)
        result = solve_halfline(one, one, THETA, OMEGA, '2d', 1 / 16, l_cells=4)
        norms = result.halfguide.cell_h1_norms()
        ratios = norms[1:] / norms[:-1]
        np.testing.assert_allclose(ratios, ratios[0], rtol=1e-6)
        expected = math.exp(-OMEGA.imag * THETA.cell_length)
        self.assertLess(abs(ratios[0] - expected) / expected, 5e-2)


if __name__ == '__main__':
    unittest.main()
