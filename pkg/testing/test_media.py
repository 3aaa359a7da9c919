"""
Tests for the quasiperiodic medium layer
Cut vectors, periodic coefficients, traces and the perturbed whole-line medium
"""
import math
import os
import sys
import tempfile
import unittest

import numpy as np

# Add src directory to path so imports work
current_dir = os.path.dirname(os.path.abspath(__file__))
parent_dir = os.path.dirname(current_dir)
sys.path.insert(0, os.path.join(parent_dir, 'src'))

from errors import MediumError
from media import (CutVector, Frequency, MediumSpec, PiecewiseCoefficient1D, bump_source,
                   coefficient_preset, constant_coefficient, interior_preset, load_tabulated_coefficient,
                   reflect_translate_medium, s_theta, sample_broken_line, source_preset,
                   tabulated_coefficient, trace_coefficient, trig_mu, trig_rho, wrap_unit)

THETA = CutVector.from_angle(math.pi / 3)


def reference_medium(interior='stepped', source='bump', a=1.0):
    mu_p, rho_p = trig_mu(), trig_rho()
    mu_i, rho_i = interior_preset(interior, mu_p, rho_p, THETA, a)
    return MediumSpec(mu_p=mu_p, rho_p=rho_p, theta=THETA, a=a, mu_i=mu_i, rho_i=rho_i,
                      source=source_preset(source, a))


class TestCutVector(unittest.TestCase):
    def test_slope_and_cell_length(self):
        self.assertAlmostEqual(THETA.slope, 1.0 / math.sqrt(3.0), places=14)
        self.assertAlmostEqual(THETA.cell_length, 2.0 / math.sqrt(3.0), places=14)

    def test_invalid_vectors(self):
        with self.assertRaises(MediumError):
            CutVector(-1.0, 1.0)
        with self.assertRaises(MediumError):
            CutVector(1.0, 0.0)
        with self.assertRaises(MediumError):
            CutVector(float('nan'), 1.0)

    def test_degenerate_direction_rejected_by_default(self):
        with self.assertRaises(MediumError):
            CutVector(0.0, 1.0)
        with self.assertRaises(MediumError):
            CutVector(0.0, 2.0, assert_irrational=True)

    def test_degenerate_direction_warns_when_allowed(self):
        with self.assertLogs('media', level='WARNING'):
            theta = CutVector(0.0, 1.0, allow_degenerate=True)
        self.assertEqual(theta.slope, 0.0)

    def test_wrap_unit(self):
        np.testing.assert_allclose(wrap_unit([-0.25, 1.0, 2.5]), [0.75, 0.0, 0.5])


class TestPeriodicCoefficients(unittest.TestCase):
    def test_trig_values(self):
        self.assertAlmostEqual(float(trig_mu()(0.0, 0.0)), 2.5)
        self.assertAlmostEqual(float(trig_mu()(0.5, 0.0)), 0.5)
        self.assertAlmostEqual(float(trig_rho()(0.25, 0.25)), 2.5)
        self.assertAlmostEqual(float(trig_rho()(0.75, 0.75)), 0.5)

    def test_bounds_and_periodicity_checks(self):
        for coef in (trig_mu(), trig_rho(), constant_coefficient(2.0)):
            coef.check_bounds()
            coef.check_periodicity()

    def test_check_bounds_detects_violation(self):
        wrong = trig_mu()
        lying = type(wrong)(wrong.evaluator, 1.0, 2.0, "lying")
        with self.assertRaises(MediumError):
            lying.check_bounds()

    def test_check_periodicity_detects_violation(self):
        coef = type(trig_mu())(lambda y1, y2: 2.0 + 0.1 * np.sin(y1), 1.0, 3.0, "aperiodic")
        with self.assertRaises(MediumError):
            coef.check_periodicity()

    def test_tabulated_bilinear(self):
        coef = tabulated_coefficient([[1.0, 2.0], [3.0, 4.0]])
        self.assertAlmostEqual(float(coef(0.0, 0.0)), 1.0)
        self.assertAlmostEqual(float(coef(0.5, 0.0)), 3.0)
        self.assertAlmostEqual(float(coef(0.25, 0.0)), 2.0)
        self.assertAlmostEqual(float(coef(1.0, 0.0)), 1.0)
        self.assertEqual((coef.lower_bound, coef.upper_bound), (1.0, 4.0))

    def test_tabulated_rejects_nonpositive(self):
        with self.assertRaises(MediumError):
            tabulated_coefficient([[1.0, 0.0]])

    def test_load_tabulated_from_csv(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = os.path.join(tmp, 'grid.csv')
            with open(path, 'w') as f:
                f.write("1.0,2.0\n3.0,4.0\n")
            coef = coefficient_preset(f"tabulated:{path}", 'mu')
            self.assertAlmostEqual(float(coef(0.5, 0.5)), 4.0)
            with self.assertRaises(MediumError):
                load_tabulated_coefficient(os.path.join(tmp, 'missing.csv'))

    def test_presets(self):
        self.assertTrue(coefficient_preset('constant(2)', 'rho').is_constant)
        self.assertAlmostEqual(float(coefficient_preset('constant(0.5)', 'mu')(0.3, 0.7)), 0.5)
        self.assertAlmostEqual(float(coefficient_preset('trig', 'rho')(0.25, 0.25)), 2.5)
        with self.assertRaises(MediumError):
            coefficient_preset('hexagonal', 'mu')
        with self.assertRaises(MediumError):
            coefficient_preset('trig', 'lambda')

    def test_frequency(self):
        with self.assertRaises(MediumError):
            Frequency(8.0)
        self.assertAlmostEqual(Frequency(8 + 0.25j).squared, (8 + 0.25j) ** 2)


class TestTraces(unittest.TestCase):
    def test_trace_is_periodic_in_offset(self):
        x = np.linspace(0.0, 5.0, 41)
        a = trace_coefficient(trig_mu(), THETA, 0.3, x)
        b = trace_coefficient(trig_mu(), THETA, 1.3, x)
        np.testing.assert_allclose(a, b, atol=1e-13)

    def test_s_theta_is_constant_along_lines(self):
        x = np.linspace(0.0, 3.0, 7)
        points = np.column_stack([0.4 + x * THETA.theta1, x * THETA.theta2])
        np.testing.assert_allclose(s_theta(points, THETA), 0.4, atol=1e-14)

    def test_sample_broken_line(self):
        x, points = sample_broken_line(THETA, 1.0, 0.25)
        self.assertEqual(len(x), 5)
        self.assertAlmostEqual(x[-1], 1.0)
        self.assertTrue(np.all((points >= 0.0) & (points < 1.0)))
        with self.assertRaises(MediumError):
            sample_broken_line(THETA, 1.0, 0.0)


class TestWholeLineMedium(unittest.TestCase):
    def test_stepped_interior_values(self):
        medium = reference_medium()
        np.testing.assert_allclose(medium.mu_i(np.array([-0.5, 0.0, 0.5])), [0.8339, 2.0, 0.8339])
        np.testing.assert_allclose(medium.rho_i(np.array([-0.5, 0.5])), [1.8729, 1.1271])
        np.testing.assert_allclose(medium.interior_breakpoints(), [-1.0, -1.0 / 3.0, 0.0, 1.0 / 3.0, 1.0])

    def test_whole_line_coefficients(self):
        medium = reference_medium()
        self.assertAlmostEqual(float(medium.whole_line_mu(np.array([0.0]))[0]), 2.0)
        x = np.array([-2.5, 1.7])
        np.testing.assert_allclose(medium.whole_line_rho(x), trace_coefficient(trig_rho(), THETA, 0.0, x))

    def test_continuation_interior(self):
        medium = reference_medium(interior='continuation', source='none')
        x = np.linspace(-0.9, 0.9, 7)
        np.testing.assert_allclose(medium.mu_i(x), trace_coefficient(trig_mu(), THETA, 0.0, x))
        np.testing.assert_allclose(medium.interior_breakpoints(), [-1.0, 1.0])

    def test_bump_source(self):
        f = bump_source(1.0)
        np.testing.assert_allclose(f(np.array([0.0, 1.0, -1.0, 2.0])), [1.0, 0.0, 0.0, 0.0])
        self.assertLess(float(f(np.array([0.5]))[0]), 1.0)

    def test_invalid_media(self):
        with self.assertRaises(MediumError):
            reference_medium(a=0.0)
        with self.assertRaises(MediumError):
            MediumSpec(mu_p=trig_mu(), rho_p=trig_rho(), theta=THETA, a=1.0,
                       mu_i=lambda x: np.ones_like(x), rho_i=lambda x: np.ones_like(x),
                       source=lambda x: np.ones_like(x))
        with self.assertRaises(MediumError):
            PiecewiseCoefficient1D((0.0, 1.0), (1.0, 2.0))
        with self.assertRaises(MediumError):
            interior_preset('smooth', trig_mu(), trig_rho(), THETA, 1.0)

    def test_reflected_traces_match_exterior(self):
        medium = reference_medium()
        x = np.linspace(0.0, 4.0, 17)
        (mu_plus, rho_plus), theta = reflect_translate_medium(medium, 'plus')
        np.testing.assert_allclose(trace_coefficient(mu_plus, theta, 0.0, x),
                                   trace_coefficient(trig_mu(), THETA, 0.0, medium.a + x), atol=1e-13)
        (mu_minus, rho_minus), _ = reflect_translate_medium(medium, 'minus')
        np.testing.assert_allclose(trace_coefficient(rho_minus, theta, 0.0, x),
                                   trace_coefficient(trig_rho(), THETA, 0.0, -medium.a - x), atol=1e-13)
        with self.assertRaises(MediumError):
            reflect_translate_medium(medium, 'left')


if __name__ == '__main__':
    unittest.main()
