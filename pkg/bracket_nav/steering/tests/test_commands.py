import csv
import json
import os
import tempfile
from io import StringIO

import tomli_w
from django.core.management import CommandError, call_command, get_commands
from django.test import SimpleTestCase

from steering.decorators import EXIT_COLLISION, EXIT_INVALID, EXIT_NOT_CONVERGED, EXIT_ORACLE_FAILURE, EXIT_RANK
from steering.scenarios import builtin_rigid_body, dump_scenario, load_scenario
from steering.tests.test_scenarios import rigid_body_document


class CommandTestCase(SimpleTestCase):

    def setUp(self):
        workdir = tempfile.TemporaryDirectory()
        self.addCleanup(workdir.cleanup)
        self.workdir = workdir.name

    def path(self, *parts):
        return os.path.join(self.workdir, *parts)

    def call(self, *args):
        out = StringIO()
        call_command(*args, stdout=out, stderr=StringIO())
        return out.getvalue()

    def assertExitCode(self, code, *args):
        with self.assertRaises(CommandError) as ctx:
            self.call(*args)
        self.assertEqual(ctx.exception.returncode, code, str(ctx.exception))
        return ctx.exception

    def scenario_file(self, document, name='scenario.toml'):
        path = self.path(name)
        with open(path, 'wb') as f:
            tomli_w.dump(document, f)
        return path

    def read_report(self, *parts):
        with open(self.path(*parts, 'report.json')) as f:
            return json.load(f)


class ListBuiltinsCommandTests(CommandTestCase):

    def test_command_is_registered_under_its_hyphenated_name(self):
        self.assertEqual(get_commands()['list-builtins'], 'steering')

    def test_lists_scenarios_and_systems(self):
        output = self.call('list-builtins')
        for name in ('rigid-body', 'rolling-disc', 'brockett-integrator'):
            self.assertIn(name, output)

    def test_dump_is_a_loadable_scenario(self):
        output = self.call('list-builtins', '--dump', 'rigid-body')
        self.assertEqual(output, dump_scenario(builtin_rigid_body()))
        self.assertEqual(load_scenario(output).name, 'rigid-body')

    def test_dump_of_an_unknown_builtin(self):
        self.assertExitCode(EXIT_INVALID, 'list-builtins', '--dump', 'unicycle')


class ValidateCommandTests(CommandTestCase):

    def test_builtin_is_valid(self):
        self.assertIn('scenario rigid-body is valid', self.call('validate', 'rigid-body'))

    def test_resonant_frequencies_are_invalid(self):
        control = {'pairs': [], 'triples': [{'triple': [1, 2, 1], 'k1': 1, 'k2': 2}]}
        path = self.scenario_file(rigid_body_document(control=control))
        self.assertExitCode(EXIT_INVALID, 'validate', path)

    def test_unreadable_document_is_invalid(self):
        path = self.path('broken.toml')
        with open(path, 'w') as f:
            f.write('name = \n')
        self.assertExitCode(EXIT_INVALID, 'validate', path)

    def test_missing_file_is_invalid(self):
        self.assertExitCode(EXIT_INVALID, 'validate', self.path('missing.toml'))


class RunCommandTests(CommandTestCase):

    def test_converged_run_exits_cleanly(self):
        output = self.call('run', 'rigid-body', '--stop-distance', '6.5', '--output', self.path('near'))
        self.assertIn('converged', output)
        report = self.read_report('near')
        self.assertEqual(report['outcome'], 'converged')
        self.assertEqual(report['epochs'], 0)

    def test_short_horizon_writes_artifacts(self):
        self.assertExitCode(EXIT_NOT_CONVERGED, 'run', 'rigid-body', '--t-max', '1', '--output', self.path('a'))
        report = self.read_report('a')
        self.assertEqual(report['outcome'], 'horizon-exhausted')
        self.assertEqual(report['epochs'], 2)
        with open(self.path('a', 'trajectory.csv'), newline='') as f:
            rows = list(csv.reader(f))
        self.assertEqual(rows[0][0], 't')
        self.assertEqual(len(rows), 802)

    def test_trajectory_files_are_reproducible(self):
        for name in ('a', 'b'):
            self.assertExitCode(EXIT_NOT_CONVERGED, 'run', 'rigid-body', '--t-max', '1', '--output', self.path(name))
        with open(self.path('a', 'trajectory.csv'), 'rb') as a, open(self.path('b', 'trajectory.csv'), 'rb') as b:
            self.assertEqual(a.read(), b.read())

    def test_plots_pdf_and_json(self):
        self.assertExitCode(EXIT_NOT_CONVERGED, 'run', 'rigid-body', '--t-max', '1', '--format', 'json', '--plots',
                            '--pdf', '--projection', '1,3', '--output', self.path('full'))
        for name in ('trajectory.json', 'projection.svg', 'distance.svg', 'log_barrier.svg', 'summary.svg',
                     'report.pdf'):
            self.assertTrue(os.path.exists(self.path('full', name)), name)
        self.assertIn('report.pdf', self.read_report('full')['artifacts'])

    def test_bound_check_is_reported(self):
        self.assertExitCode(EXIT_NOT_CONVERGED, 'run', 'rigid-body', '--t-max', '1', '--check-bound', '--output',
                            self.path('bound'))
        self.assertEqual(self.read_report('bound')['lemma1_violations'], 0)

    def test_invalid_overrides(self):
        self.assertExitCode(EXIT_INVALID, 'run', 'rigid-body', '--epsilon', '0', '--output', self.path('x'))
        self.assertExitCode(EXIT_INVALID, 'run', 'rigid-body', '--projection', '1,1', '--output', self.path('x'))
        self.assertExitCode(EXIT_INVALID, 'run', 'rigid-body', '--projection', '1,4', '--output', self.path('x'))

    def test_collision_exit_code(self):
        path = self.scenario_file(rigid_body_document(sim={'collision_margin': 3.5}))
        self.assertExitCode(EXIT_COLLISION, 'run', path, '--output', self.path('crash'))
        self.assertEqual(self.read_report('crash')['outcome'], 'collision')
        self.assertTrue(os.path.exists(self.path('crash', 'trajectory.csv')))

    def test_rank_failure_exit_code(self):
        path = self.scenario_file(rigid_body_document(system={'catalog': 'brockett-integrator'}))
        self.assertExitCode(EXIT_RANK, 'run', path, '--output', self.path('rank'))
        self.assertEqual(self.read_report('rank')['outcome'], 'rank-failure')
        self.assertFalse(os.path.exists(self.path('rank', 'trajectory.csv')))


class SweepCommandTests(CommandTestCase):

    def read_table(self):
        with open(self.path('sweep', 'sweep.csv'), newline='') as f:
            return list(csv.DictReader(f))

    def test_empty_sweep_writes_a_header(self):
        self.call('sweep', 'rigid-body', '--output', self.path('sweep'))
        self.assertEqual(self.read_table(), [])
        with open(self.path('sweep', 'sweep.csv')) as f:
            self.assertTrue(f.readline().startswith('value,outcome'))

    def test_sweep_over_epsilon(self):
        self.call('sweep', 'rigid-body', '--values', '0.5', '0.25', '--t-max', '1', '--jobs', '2', '--output',
                  self.path('sweep'))
        rows = self.read_table()
        self.assertEqual([row['value'] for row in rows], ['0.5', '0.25'])
        self.assertEqual({row['outcome'] for row in rows}, {'horizon-exhausted'})
        self.assertEqual([row['epochs'] for row in rows], ['2', '4'])
        for name in ('epsilon-0.5', 'epsilon-0.25'):
            self.assertTrue(os.path.exists(self.path('sweep', name, 'trajectory.csv')))

    def test_invalid_value_becomes_an_error_row(self):
        self.call('sweep', 'rigid-body', '--parameter', 'gamma', '--values', '0', '--t-max', '1', '--output',
                  self.path('sweep'))
        self.assertEqual(self.read_table()[0]['outcome'], 'error')


class OracleCommandTests(CommandTestCase):

    def test_remark1_passes(self):
        self.assertIn('oracle remark1 passed', self.call('oracle', 'remark1'))

    def test_remark1_on_a_degenerate_bracket_fails(self):
        self.assertExitCode(EXIT_ORACLE_FAILURE, 'oracle', 'remark1', '--system', 'brockett-integrator')

    def test_remark1_side_condition_fails(self):
        self.assertExitCode(EXIT_ORACLE_FAILURE, 'oracle', 'remark1', '--k2', '2')

    def test_remark1_argument_errors(self):
        self.assertExitCode(EXIT_INVALID, 'oracle', 'remark1', '--triple', '1,2')
        self.assertExitCode(EXIT_INVALID, 'oracle', 'remark1', '--triple', '1,2,3')
        self.assertExitCode(EXIT_INVALID, 'oracle', 'remark1', '--x0', '0,0')
        self.assertExitCode(EXIT_INVALID, 'oracle', 'remark1', '--system', 'unicycle')

    def test_epoch_displacement_passes(self):
        self.assertIn('oracle epoch-displacement passed', self.call('oracle', 'epoch-displacement', 'rigid-body'))

    def test_lemma1_passes(self):
        self.assertIn('oracle lemma1 passed', self.call('oracle', 'lemma1', 'rigid-body', '--t-max', '2'))
