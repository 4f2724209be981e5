from dataclasses import replace

import numpy as np
from django.test import SimpleTestCase

from steering.control import ControlLaw, FrequencyAssignment
from steering.exceptions import CollisionError, FrequencyAssignmentError, ScenarioError
from steering.oracles import lemma1_bound_check, monotonicity_check
from steering.scenarios import builtin_rigid_body, builtin_rolling_disc, with_overrides
from steering.sim import (COLLISION, CONVERGED, CRITICAL_POINT, HORIZON_EXHAUSTED, SimConfig, gradient_flow_solve,
                          integrate_epoch, pi_epsilon_solve)


def solve(scenario, **changes):
    return pi_epsilon_solve(scenario.system, scenario.basis, scenario.navigation, scenario.frequencies,
                            scenario.params, scenario.x0, replace(scenario.sim, **changes))


class SimConfigTests(SimpleTestCase):

    def test_substep_density_floor(self):
        with self.assertRaises(ScenarioError):
            SimConfig(epsilon=0.5, substeps_per_unit_frequency=49)

    def test_non_positive_horizon_is_refused(self):
        with self.assertRaises(ScenarioError):
            SimConfig(epsilon=0.5, t_max=0.0)

    def test_epoch_count_and_steps(self):
        cfg = SimConfig(epsilon=0.1, t_max=1.0, substeps_per_unit_frequency=100)
        self.assertEqual(cfg.epoch_count, 10)
        self.assertEqual(cfg.steps_per_epoch(4), 400)


class PiEpsilonSolveTests(SimpleTestCase):

    def setUp(self):
        self.scenario = builtin_rigid_body()

    def test_start_at_the_target_stays_there(self):
        s = self.scenario
        trajectory = pi_epsilon_solve(s.system, s.basis, s.navigation, s.frequencies, s.params, s.target, s.sim)
        self.assertEqual(trajectory.outcome, CONVERGED)
        self.assertEqual(trajectory.epochs, 0)
        np.testing.assert_array_equal(trajectory.final_state, s.target)

    def test_start_outside_the_free_space_is_refused(self):
        s = self.scenario
        with self.assertRaises(ScenarioError) as ctx:
            pi_epsilon_solve(s.system, s.basis, s.navigation, s.frequencies, s.params, [0.0, 0.0, 1.75], s.sim)
        self.assertEqual(ctx.exception.code, ScenarioError.FEASIBILITY)

    def test_resonant_frequencies_are_refused(self):
        s = replace(self.scenario, frequencies=FrequencyAssignment(k3={(1, 2, 1): (1, 2)}))
        with self.assertRaises(FrequencyAssignmentError):
            s.run()

    def test_short_horizon(self):
        trajectory = with_overrides(self.scenario, t_max=2.0).run()
        self.assertEqual(trajectory.outcome, HORIZON_EXHAUSTED)
        self.assertEqual(trajectory.epochs, 4)
        self.assertEqual(trajectory.epoch_starts, [0, 400, 800, 1200])
        self.assertEqual(len(trajectory.times), 1601)
        self.assertAlmostEqual(trajectory.times[-1], 2.0)
        self.assertEqual(trajectory.controls.shape, (1601, 2))

    def test_runs_are_bit_for_bit_reproducible(self):
        scenario = with_overrides(self.scenario, t_max=2.0)
        first, second = scenario.run(), scenario.run()
        np.testing.assert_array_equal(first.states, second.states)
        np.testing.assert_array_equal(first.controls, second.controls)

    def test_epoch_replays_from_its_record(self):
        s = with_overrides(self.scenario, t_max=2.0)
        trajectory = s.run()
        law = ControlLaw(s.system, s.basis, s.navigation, s.frequencies, s.params)
        window = trajectory.epoch_slice(2)
        t_j, x_j = trajectory.times[window.start], trajectory.states[window.start]
        segment = integrate_epoch(s.system, law.epoch(x_j), x_j, t_j, s.params.epsilon, 400)
        np.testing.assert_array_equal(segment.states, trajectory.states[window])

    def test_halving_the_step_barely_moves_an_epoch_endpoint(self):
        s = self.scenario
        law = ControlLaw(s.system, s.basis, s.navigation, s.frequencies, s.params)
        epoch = law.epoch(s.x0)
        coarse = integrate_epoch(s.system, epoch, s.x0, 0.0, s.params.epsilon, 400).states[-1]
        fine = integrate_epoch(s.system, epoch, s.x0, 0.0, s.params.epsilon, 800).states[-1]
        self.assertLess(np.linalg.norm(coarse - fine) / max(1.0, np.linalg.norm(fine)), 1e-8)

    def test_collision_carries_the_partial_trajectory(self):
        with self.assertRaises(CollisionError) as ctx:
            solve(self.scenario, collision_margin=2.0)
        error = ctx.exception
        self.assertEqual(error.trajectory.outcome, COLLISION)
        self.assertLess(error.trajectory.margin[-1], 2.0)
        np.testing.assert_array_equal(error.state, error.trajectory.final_state)



RIGID_BODY_SADDLE = np.array([-1.6725, 0.0, -2.2346])
ROLLING_DISC_MINIMUM = np.array([-0.457, -0.161, 0.0, 0.488])


class BuiltinRunTests(SimpleTestCase):
    """
    Full horizons of both built-ins. Their navigation functions have critical
    points other than the target on the way from x0, and the runs settle there.
    """

    @classmethod
    def setUpClass(cls):
        super().setUpClass()
        cls.rigid = builtin_rigid_body()
        cls.disc = builtin_rolling_disc()
        cls.rigid_run = cls.rigid.run()
        cls.disc_run = cls.disc.run()

    def assertStaysFreeAndMonotone(self, trajectory):
        self.assertEqual(trajectory.outcome, HORIZON_EXHAUSTED)
        self.assertEqual(trajectory.epochs, 400)
        self.assertGreater(trajectory.min_margin, 0.0)
        self.assertTrue(np.all(trajectory.log_barrier > 0.0))
        self.assertTrue(monotonicity_check(trajectory).passed)

    def test_rigid_body_settles_at_the_saddle_on_the_x2_plane(self):
        trajectory = self.rigid_run
        self.assertStaysFreeAndMonotone(trajectory)
        x = trajectory.final_state
        self.assertLess(abs(x[1]), 1e-6)
        self.assertLess(np.linalg.norm(x - RIGID_BODY_SADDLE), 0.1)
        self.assertAlmostEqual(trajectory.final_distance, 5.4953, delta=0.01)
        self.assertLess(np.linalg.norm(self.rigid.navigation.gradient(x)), 1e-3)

    def test_rolling_disc_settles_at_a_local_minimum(self):
        trajectory = self.disc_run
        self.assertStaysFreeAndMonotone(trajectory)
        x = trajectory.final_state
        self.assertAlmostEqual(self.disc.navigation.value(x), 0.8255, delta=1e-3)
        self.assertLess(np.linalg.norm(x - ROLLING_DISC_MINIMUM), 5e-3)
        self.assertLess(np.linalg.norm(self.disc.navigation.gradient(x)), 1e-6)

    def test_excursion_bound_holds_over_the_rigid_body_run(self):
        report = lemma1_bound_check(self.rigid_run, self.rigid.system)
        self.assertTrue(report.passed, report.violations[:3])
        self.assertEqual(report.epochs, 400)
        self.assertLessEqual(report.max_ratio, 1.0 + 1e-6)

    def test_excursion_bound_holds_over_the_rolling_disc_run(self):
        report = lemma1_bound_check(self.disc_run, self.disc.system)
        self.assertTrue(report.passed, report.violations[:3])
        self.assertEqual(report.epochs, 400)
        self.assertLessEqual(report.max_ratio, 1.0 + 1e-6)


class GradientFlowTests(SimpleTestCase):

    def test_flow_decreases_P_without_leaving_the_free_space(self):
        s = builtin_rigid_body()
        trajectory = gradient_flow_solve(s.navigation, s.x0, replace(s.sim, t_max=50.0))
        self.assertEqual(trajectory.outcome, HORIZON_EXHAUSTED)
        self.assertEqual(trajectory.epochs, 100)
        self.assertGreater(trajectory.min_margin, 0.0)
        self.assertTrue(np.all(np.diff(trajectory.potential) <= 1e-12))
        self.assertLess(trajectory.potential[-1], trajectory.potential[0])
        self.assertFalse(np.any(trajectory.controls))

    def test_flow_stops_at_the_saddle_on_the_x2_plane(self):
        s = builtin_rigid_body()
        trajectory = gradient_flow_solve(s.navigation, s.x0, replace(s.sim, t_max=3000.0))
        self.assertEqual(trajectory.outcome, CRITICAL_POINT)
        self.assertLess(trajectory.times[-1], 3000.0)
        self.assertLess(np.linalg.norm(s.navigation.gradient(trajectory.final_state)), s.sim.gradient_tolerance)
        self.assertLess(np.linalg.norm(trajectory.final_state - RIGID_BODY_SADDLE), 5e-3)

    def test_flow_from_the_target_is_converged(self):
        s = builtin_rigid_body()
        trajectory = gradient_flow_solve(s.navigation, s.target, s.sim)
        self.assertEqual(trajectory.outcome, CONVERGED)
        self.assertEqual(len(trajectory.times), 1)
