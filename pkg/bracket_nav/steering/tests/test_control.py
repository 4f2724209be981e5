import math
import time

import numpy as np
from django.test import SimpleTestCase

from steering.control import (FULL_TRIPLE, REPEATED_INDEX, ControlLaw, ControlParams, FrequencyAssignment,
                              assign_frequencies, control_bound, control_bound_constants, eval_control, eval_phi,
                              gradient_control_bound, remark1_primitive, s2_amplitude, s3_amplitude,
                              validate_nonresonance)
from steering.exceptions import FrequencyAssignmentError, ScenarioError
from steering.scenarios import builtin_rigid_body, builtin_rolling_disc
from steering.system import BracketBasis

RIGID_BODY_BASIS = BracketBasis(s1=(1, 2), s3=((1, 2, 1),))
ROLLING_DISC_BASIS = BracketBasis(s1=(1, 2), s2=((1, 2),), s3=((1, 2, 2),))


class FrequencyAssignmentTests(SimpleTestCase):

    def test_equal_triple_frequencies_are_refused(self):
        with self.assertRaises(FrequencyAssignmentError):
            FrequencyAssignment(k3={(1, 2, 1): (2, 2)})

    def test_pair_frequency_must_be_positive(self):
        with self.assertRaises(FrequencyAssignmentError):
            FrequencyAssignment(k2={(1, 2): 0})

    def test_triple_frequencies(self):
        fa = FrequencyAssignment(k3={(1, 2, 2): (3, 7)})
        self.assertEqual(fa.triple_frequencies((1, 2, 2)), (3, 7, 10, 4))
        self.assertEqual(fa.max_frequency, 10)

    def test_from_values_follows_basis_order(self):
        fa = FrequencyAssignment.from_values(ROLLING_DISC_BASIS, (1, 3, 7))
        self.assertEqual(fa.k2, {(1, 2): 1})
        self.assertEqual(fa.k3, {(1, 2, 2): (3, 7)})

    def test_calibration_identity(self):
        for fa in (FrequencyAssignment(k2={(1, 2): 1}, k3={(1, 2, 2): (3, 7)}),
                   assign_frequencies(ROLLING_DISC_BASIS), assign_frequencies(RIGID_BODY_BASIS, seed=5)):
            for residual in fa.calibration_residuals().values():
                self.assertLess(residual, 1e-12)


class NonresonanceTests(SimpleTestCase):

    def test_published_assignments_pass(self):
        self.assertTrue(validate_nonresonance(FrequencyAssignment(k3={(1, 2, 1): (1, 3)}), RIGID_BODY_BASIS).passed)
        disc = FrequencyAssignment(k2={(1, 2): 1}, k3={(1, 2, 2): (3, 7)})
        self.assertTrue(validate_nonresonance(disc, ROLLING_DISC_BASIS).passed)

    def test_doubled_frequency_is_a_violation(self):
        report = validate_nonresonance(FrequencyAssignment(k3={(1, 2, 1): (1, 2)}), RIGID_BODY_BASIS)
        self.assertFalse(report.passed)
        self.assertIn('2|K1| = |K2|', report.violations[0])

    def test_duplicate_pair_magnitudes_are_a_violation(self):
        basis = BracketBasis(s2=((1, 2), (1, 3)))
        report = validate_nonresonance(FrequencyAssignment(k2={(1, 2): 2, (1, 3): 2}), basis)
        self.assertFalse(report.passed)

    def test_pair_frequency_may_not_coincide_with_a_triple_frequency(self):
        fa = FrequencyAssignment(k2={(1, 2): 4}, k3={(1, 2, 2): (3, 7)})
        self.assertFalse(validate_nonresonance(fa, ROLLING_DISC_BASIS).passed)

    def test_resonance_across_triples(self):
        basis = BracketBasis(s3=((1, 2, 1), (1, 2, 2)))
        # K1 of the first triple plus K1 of the second equals K2 of the first
        fa = FrequencyAssignment(k3={(1, 2, 1): (1, 3), (1, 2, 2): (2, 9)})
        report = validate_nonresonance(fa, basis)
        self.assertFalse(report.passed)
        self.assertIn('between triples', report.violations[0])

    def test_incomplete_assignment_is_a_violation(self):
        self.assertFalse(validate_nonresonance(FrequencyAssignment(), RIGID_BODY_BASIS).passed)

    def test_enumeration_for_four_triples_is_fast(self):
        basis = BracketBasis(s3=((1, 2, 1), (1, 2, 2), (1, 3, 1), (2, 3, 2)))
        fa = FrequencyAssignment(k3={(1, 2, 1): (1, 3), (1, 2, 2): (11, 29), (1, 3, 1): (71, 163),
                                     (2, 3, 2): (409, 997)})
        started = time.perf_counter()
        validate_nonresonance(fa, basis)
        self.assertLess(time.perf_counter() - started, 1.0)


class AssignFrequenciesTests(SimpleTestCase):

    def test_rigid_body_gets_the_published_choice(self):
        self.assertEqual(assign_frequencies(RIGID_BODY_BASIS).k3, {(1, 2, 1): (1, 3)})

    def test_assignment_is_valid_and_complete(self):
        fa = assign_frequencies(ROLLING_DISC_BASIS)
        self.assertEqual(set(fa.k2), {(1, 2)})
        self.assertEqual(set(fa.k3), {(1, 2, 2)})
        self.assertTrue(validate_nonresonance(fa, ROLLING_DISC_BASIS).passed)

    def test_first_order_basis_needs_no_frequencies(self):
        fa = assign_frequencies(BracketBasis(s1=(1, 2)))
        self.assertEqual((fa.k2, fa.k3), ({}, {}))

    def test_seed_selects_another_valid_assignment(self):
        first = assign_frequencies(RIGID_BODY_BASIS)
        second = assign_frequencies(RIGID_BODY_BASIS, seed=1)
        self.assertNotEqual(first.k3, second.k3)
        self.assertTrue(validate_nonresonance(second, RIGID_BODY_BASIS).passed)
        self.assertEqual(second.k3, assign_frequencies(RIGID_BODY_BASIS, seed=1).k3)

    def test_exhausted_search_raises(self):
        with self.assertRaises(FrequencyAssignmentError):
            assign_frequencies(RIGID_BODY_BASIS, max_magnitude=2)


class EvalPhiTests(SimpleTestCase):

    def test_pair_contributions(self):
        basis = BracketBasis(s2=((1, 2),))
        fa = FrequencyAssignment(k2={(1, 2): 1})
        self.assertAlmostEqual(float(eval_phi(fa, basis, 1, 0.0, 0.5)[0]), 2.0 * math.sqrt(math.pi))
        self.assertEqual(float(eval_phi(fa, basis, 3, 0.0, 0.5)[0]), 0.0)
        self.assertAlmostEqual(float(eval_phi(fa, basis, 1, 0.0, 0.5, signs=(-1.0,))[0]), -2.0 * math.sqrt(math.pi))

    def test_triple_contributions(self):
        fa = FrequencyAssignment(k3={(1, 2, 1): (1, 3)})
        quarter = 0.125
        phi_1 = eval_phi(fa, RIGID_BODY_BASIS, 1, quarter, 0.5)
        phi_2 = eval_phi(fa, RIGID_BODY_BASIS, 2, quarter, 0.5)
        np.testing.assert_allclose(phi_1, [1.0, 0.0, 0.0], atol=1e-12)
        np.testing.assert_allclose(phi_2, [0.0, 1.0, -s3_amplitude(1, 3)], atol=1e-12)

    def test_amplitudes(self):
        self.assertAlmostEqual(s2_amplitude(1), 2.0 * math.sqrt(math.pi))
        self.assertAlmostEqual(s3_amplitude(1, 3), 2.0 * (16.0 * math.pi ** 2) ** (1.0 / 3.0))


class ControlLawTests(SimpleTestCase):

    def setUp(self):
        self.scenario = builtin_rigid_body()
        self.law = ControlLaw(self.scenario.system, self.scenario.basis, self.scenario.navigation,
                              self.scenario.frequencies, self.scenario.params)

    def test_parameters_must_be_positive(self):
        with self.assertRaises(ScenarioError):
            ControlParams(epsilon=0.0, gamma=0.5)

    def test_control_vanishes_at_the_target(self):
        s = self.scenario
        for t in (0.0, 0.1, 0.37):
            u = eval_control(s.system, s.basis, s.navigation, s.frequencies, s.params, t, s.target)
            self.assertFalse(np.any(u))
        self.assertTrue(self.law.epoch(s.target).is_zero)

    def test_rigid_body_coefficients_match_the_closed_form(self):
        gamma = self.scenario.params.gamma
        for x in self.free_points(100):
            p = self.scenario.navigation.gradient(x)
            expected = np.array([-gamma * p[0], -gamma * p[1],
                                 0.5 * gamma * (x[1] ** 2 * p[0] - x[0] ** 2 * p[1] + p[2])])
            error = np.linalg.norm(self.law.coefficients(x) - expected) / max(np.linalg.norm(expected), 1e-12)
            self.assertLess(error, 1e-4)

    def test_rolling_disc_coefficients_match_the_closed_form(self):
        scenario = builtin_rolling_disc()
        law = ControlLaw(scenario.system, scenario.basis, scenario.navigation, scenario.frequencies, scenario.params)
        gamma = scenario.params.gamma
        for x in self.free_points(100, scenario):
            p = scenario.navigation.gradient(x)
            s, c = math.sin(x[2]), math.cos(x[2])
            expected = np.array([-gamma * p[3], -gamma * p[2], -gamma * (s * p[0] - c * p[1]),
                                 gamma * (c * p[0] + s * p[1] - p[3])])
            error = np.linalg.norm(law.coefficients(x) - expected) / max(np.linalg.norm(expected), 1e-12)
            self.assertLess(error, 1e-4)

    def test_rigid_body_controls_match_the_closed_form(self):
        x = np.array([0.3, -0.4, 0.5])
        eps = self.scenario.params.epsilon
        a1, a2, a121 = self.law.coefficients(x)
        amplitude = eps ** (-2.0 / 3.0) * np.cbrt(a121) * 2.0 * np.cbrt(2.0 * math.pi ** 2 * 8.0)
        for t in np.linspace(0.0, 2.0, 17):
            c = math.cos(2.0 * math.pi * t / eps)
            s = math.sin(6.0 * math.pi * t / eps)
            expected = [a1 + amplitude * c * (1.0 + s), a2 + amplitude * s]
            np.testing.assert_allclose(self.law(t, x), expected, rtol=1e-12, atol=1e-12)

    def test_controls_scale_with_the_gain(self):
        x = np.array([0.3, -0.4, 0.5])
        doubled = ControlLaw(self.law.system, self.law.basis, self.law.potential, self.law.frequencies,
                             ControlParams(self.law.params.epsilon, 2.0 * self.law.params.gamma))
        np.testing.assert_allclose(doubled.coefficients(x), 2.0 * self.law.coefficients(x), rtol=1e-12)

    def test_epoch_controls_are_periodic(self):
        epoch = self.law.epoch(np.array([0.3, -0.4, 0.5]))
        t = np.linspace(0.0, 0.5, 11)
        np.testing.assert_allclose(epoch.at(t), epoch.at(t + 0.5), atol=1e-9)

    def test_explicit_bound_dominates_the_controls(self):
        eps = self.scenario.params.epsilon
        t = np.linspace(0.0, eps, 2001)
        for x in self.free_points(20):
            epoch = self.law.epoch(x)
            measured = np.max(np.sum(np.abs(epoch.at(t)), axis=1))
            bound = control_bound(self.scenario.frequencies, self.scenario.basis, epoch.coefficients, eps)
            self.assertLessEqual(measured, bound * (1.0 + 1e-12))
            self.assertLessEqual(bound, gradient_control_bound(self.law, x) * (1.0 + 1e-9))

    def free_points(self, count, scenario=None):
        scene = (scenario or self.scenario).scene
        low, high = scene.bounding_box()
        rng = np.random.default_rng(7)
        points = []
        while len(points) < count:
            x = rng.uniform(low, high)
            if scene.margins(x) > 0.05:
                points.append(x)
        return points


class ControlBoundConstantTests(SimpleTestCase):

    def test_rigid_body_constants(self):
        c1, c2, c3 = control_bound_constants(FrequencyAssignment(k3={(1, 2, 1): (1, 3)}), RIGID_BODY_BASIS, 0.5, 1.0)
        self.assertAlmostEqual(c1, 0.5 * math.sqrt(2.0))
        self.assertEqual(c2, 0.0)
        # |K2^2 - K1^2| = 8 and (8^(2/5))^(5/6) = 2
        self.assertAlmostEqual(c3, 12.0 * math.pi ** (2.0 / 3.0))

    def test_rolling_disc_constants(self):
        fa = FrequencyAssignment(k2={(1, 2): 1}, k3={(1, 2, 2): (3, 7)})
        _, c2, c3 = control_bound_constants(fa, ROLLING_DISC_BASIS, 0.5, 2.0)
        self.assertAlmostEqual(c2, 4.0 * math.sqrt(math.pi))
        self.assertAlmostEqual(c3, 6.0 * (2.0 * math.pi ** 2) ** (1.0 / 3.0) * 40.0 ** (1.0 / 3.0))

    def test_several_entries_combine_by_hoelder(self):
        basis = BracketBasis(s1=(1,), s2=((1, 2), (1, 3)), s3=((1, 2, 1), (1, 3, 1)))
        fa = FrequencyAssignment(k2={(1, 2): 1, (1, 3): 8}, k3={(1, 2, 1): (1, 3), (1, 3, 1): (1, 3)})
        c1, c2, c3 = control_bound_constants(fa, basis, 1.0, 1.0)
        self.assertAlmostEqual(c1, 1.0)
        # (1 + 8^(2/3))^(3/4) = 5^(3/4), below the plain sum 1 + sqrt(8)
        self.assertAlmostEqual(c2, 4.0 * math.sqrt(math.pi) * 5.0 ** 0.75)
        self.assertAlmostEqual(c3, 6.0 * (2.0 * math.pi ** 2) ** (1.0 / 3.0) * 2.0 ** (5.0 / 6.0) * 2.0)


class Remark1PrimitiveTests(SimpleTestCase):

    def test_full_triple_signals(self):
        signal = remark1_primitive((1, 2, 3), (1, 3), 0.5)
        np.testing.assert_allclose(signal(0.0), [[1.0, 0.0, 0.0]])
        self.assertEqual(signal.m, 3)

    def test_first_two_channels_are_orthogonal_over_an_epoch(self):
        signal = remark1_primitive((1, 2, 3), (1, 3), 0.5)
        u = signal(np.linspace(0.0, 0.5, 1000, endpoint=False))
        self.assertLess(abs(np.mean(u[:, 0] * u[:, 1])), 1e-12)

    def test_repeated_index_channels_add_up(self):
        signal = remark1_primitive((1, 2, 1), (1, 3), 0.5, variant=REPEATED_INDEX)
        t = np.array([0.05])
        c, s = math.cos(2.0 * math.pi * 0.1), math.sin(6.0 * math.pi * 0.1)
        np.testing.assert_allclose(signal(t), [[c + c * s, s]])

    def test_variant_index_patterns(self):
        with self.assertRaises(ValueError):
            remark1_primitive((1, 2, 1), (1, 3), 0.5, variant=FULL_TRIPLE)
        with self.assertRaises(ValueError):
            remark1_primitive((1, 2, 3), (1, 3), 0.5, variant=REPEATED_INDEX)
        with self.assertRaises(ValueError):
            remark1_primitive((1, 2, 3), (1, 3), 0.5, variant='other')

    def test_leading_coefficient(self):
        signal = remark1_primitive((1, 2, 1), (1, 3), 2.0 * math.pi, variant=REPEATED_INDEX)
        self.assertAlmostEqual(signal.leading_coefficient, math.pi / 16.0)
        self.assertEqual(remark1_primitive((1, 2, 1), (2, 2), 0.5, variant=REPEATED_INDEX).leading_coefficient,
                         math.inf)
