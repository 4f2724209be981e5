import time
from pathlib import Path

from django.core.management.base import BaseCommand, CommandError

from steering.conf import steering_setting
from steering.decorators import EXIT_INVALID, steering_command
from steering.exceptions import CollisionError, RankDeficiencyError
from steering.oracles import lemma1_bound_check
from steering.reports import build_run_report, rank_failure_report, write_run_artifacts
from steering.scenarios import resolve_scenario, validate_scenario, with_overrides


def add_override_arguments(parser):
    parser.add_argument('--epsilon', type=float, help='Epoch length.')
    parser.add_argument('--gamma', type=float, help='Gradient gain.')
    parser.add_argument('--t-max', dest='t_max', type=float, help='Simulation horizon.')
    parser.add_argument('--substeps', type=int, help='RK4 steps per epoch per unit of the largest frequency.')
    parser.add_argument('--stop-distance', dest='stop_distance', type=float, help='Target tolerance.')
    parser.add_argument('--seed', type=int, help='Re-assign frequencies, picking the seed-th valid assignment.')


def scenario_from_options(options):
    return with_overrides(resolve_scenario(options['scenario']), epsilon=options.get('epsilon'),
                          gamma=options.get('gamma'), t_max=options.get('t_max'), substeps=options.get('substeps'),
                          stop_distance=options.get('stop_distance'), seed=options.get('seed'))


def parse_projection(text, n):
    try:
        i, j = (int(part) for part in text.split(','))
    except ValueError:
        raise CommandError('--projection expects two coordinates like 1,2, got %r' % text, returncode=EXIT_INVALID)
    if i == j or not (1 <= i <= n and 1 <= j <= n):
        raise CommandError('--projection coordinates must be distinct and within 1..%d' % n, returncode=EXIT_INVALID)
    return i - 1, j - 1


def output_directory(options, name):
    if options.get('output'):
        return Path(options['output'])
    return Path(steering_setting('OUTPUT_DIR')) / name


class Command(BaseCommand):
    help = 'Runs a scenario (built-in name or TOML file) and writes its trajectory, report and plots.'

    def add_arguments(self, parser):
        parser.add_argument('scenario', help='Built-in scenario name or path to a TOML scenario.')
        add_override_arguments(parser)
        parser.add_argument('--output', help='Directory for the artifacts.')
        parser.add_argument('--format', choices=('csv', 'json'), default='csv')
        parser.add_argument('--plots', action='store_true', help='Write SVG plots.')
        parser.add_argument('--projection', default='1,2', help='Coordinate pair for the projection plot.')
        parser.add_argument('--pdf', action='store_true', help='Write a PDF summary.')
        parser.add_argument('--check-bound', action='store_true', help='Check the per-epoch excursion bound.')

    @steering_command
    def handle(self, *args, **options):
        scenario = scenario_from_options(options)
        projection = parse_projection(options['projection'], scenario.system.n)
        output = output_directory(options, scenario.name)

        started = time.perf_counter()
        trajectory, detail = None, ''
        try:
            trajectory = scenario.run()
        except CollisionError as exc:
            trajectory, detail = exc.trajectory, str(exc)
        except RankDeficiencyError as exc:
            report = rank_failure_report(scenario, exc, time.perf_counter() - started)
        wall_time = time.perf_counter() - started

        if trajectory is not None:
            lemma1 = lemma1_bound_check(trajectory, scenario.system) if options['check_bound'] else None
            report = build_run_report(scenario, trajectory, wall_time, lemma1=lemma1, detail=detail)
        checks = validate_scenario(scenario).checks if options['pdf'] else ()
        write_run_artifacts(report, trajectory, scenario, output, fmt=options['format'], plots=options['plots'],
                            projection=projection, pdf=options['pdf'], checks=checks)

        if report.exit_code:
            raise CommandError(report.summary(), returncode=report.exit_code)
        self.stdout.write(self.style.SUCCESS(report.summary()))
        self.stdout.write('artifacts in %s' % output)
