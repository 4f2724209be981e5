from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from django.core.management.base import BaseCommand

from steering.conf import steering_setting
from steering.decorators import steering_command
from steering.exceptions import CollisionError, RankDeficiencyError, SteeringError
from steering.oracles import monotonicity_check
from steering.reports import write_json, write_sweep_table, write_trajectory_csv
from steering.scenarios import resolve_scenario, with_overrides
from steering.sim import RANK_FAILURE


def run_one(scenario, parameter, value, output):
    row = {'value': value}
    run_dir = output / ('%s-%s' % (parameter, value))
    try:
        candidate = with_overrides(scenario, **{parameter: value})
        try:
            trajectory = candidate.run()
        except CollisionError as exc:
            trajectory = exc.trajectory
            row['detail'] = str(exc)
    except RankDeficiencyError as exc:
        row.update(outcome=RANK_FAILURE, detail=str(exc))
        return row
    except SteeringError as exc:
        row.update(outcome='error', detail=str(exc))
        return row
    run_dir.mkdir(parents=True, exist_ok=True)
    write_trajectory_csv(trajectory, run_dir / 'trajectory.csv')
    row.update(
        outcome=trajectory.outcome,
        final_distance=trajectory.final_distance,
        min_margin=trajectory.min_margin,
        monotonicity_violations=monotonicity_check(trajectory).violations,
        epochs=trajectory.epochs,
    )
    write_json(row, run_dir / 'report.json')
    return row


class Command(BaseCommand):
    help = 'Runs a scenario once per value of epsilon or gamma and tabulates the outcomes.'

    def add_arguments(self, parser):
        parser.add_argument('scenario', help='Built-in scenario name or path to a TOML scenario.')
        parser.add_argument('--parameter', choices=('epsilon', 'gamma'), default='epsilon')
        parser.add_argument('--values', nargs='*', type=float, default=[])
        parser.add_argument('--output', help='Directory for the summary table and per-run artifacts.')
        parser.add_argument('--jobs', type=int, default=None, help='Concurrent runs.')
        parser.add_argument('--t-max', dest='t_max', type=float)
        parser.add_argument('--stop-distance', dest='stop_distance', type=float)

    @steering_command
    def handle(self, *args, **options):
        scenario = with_overrides(resolve_scenario(options['scenario']), t_max=options['t_max'],
                                  stop_distance=options['stop_distance'])
        parameter = options['parameter']
        output = Path(options['output'] or Path(steering_setting('OUTPUT_DIR')) / ('%s-sweep' % scenario.name))
        output.mkdir(parents=True, exist_ok=True)
        jobs = options['jobs'] or steering_setting('SWEEP_WORKERS')

        with ThreadPoolExecutor(max_workers=max(1, jobs)) as pool:
            rows = list(pool.map(lambda v: run_one(scenario, parameter, v, output), options['values']))

        table = write_sweep_table(rows, output / 'sweep.csv')
        self.stdout.write('%-10s %-18s %-14s %-14s %s' % (parameter, 'outcome', 'distance', 'min margin',
                                                          'P increases'))
        for row in rows:
            self.stdout.write('%-10g %-18s %-14s %-14s %s' % (
                row['value'], row['outcome'], _fmt(row.get('final_distance')), _fmt(row.get('min_margin')),
                row.get('monotonicity_violations', '')))
        self.stdout.write(self.style.SUCCESS('%d runs, table in %s' % (len(rows), table)))


def _fmt(value):
    return '' if value is None else '%.6g' % value
