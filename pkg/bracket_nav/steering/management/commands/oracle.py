import numpy as np
from django.core.management.base import BaseCommand, CommandError

from steering.catalog import SYSTEM_CATALOG, catalog_system
from steering.control import FULL_TRIPLE, REPEATED_INDEX
from steering.decorators import EXIT_INVALID, EXIT_ORACLE_FAILURE, steering_command
from steering.exceptions import CollisionError
from steering.oracles import epoch_displacement_oracle, lemma1_bound_check, remark1_displacement_oracle
from steering.scenarios import resolve_scenario, with_overrides

DEFAULT_EPSILONS = {
    'epoch-displacement': [0.2, 0.1, 0.05, 0.025],
    'remark1': [0.1, 0.05, 0.025],
}


def parse_indices(text, width, label):
    try:
        values = tuple(int(part) for part in text.split(','))
    except ValueError:
        values = ()
    if len(values) != width:
        raise CommandError('%s expects %d comma-separated integers, got %r' % (label, width, text),
                           returncode=EXIT_INVALID)
    return values


class Command(BaseCommand):
    help = 'Runs a verification oracle: epoch-displacement, remark1 or lemma1.'

    def add_arguments(self, parser):
        parser.add_argument('which', choices=('epoch-displacement', 'remark1', 'lemma1'))
        parser.add_argument('scenario', nargs='?', default='rigid-body',
                            help='Scenario for epoch-displacement and lemma1.')
        parser.add_argument('--epsilons', nargs='+', type=float)
        parser.add_argument('--system', default='rigid-body',
                            help='Catalog system for remark1: %s.' % ', '.join(SYSTEM_CATALOG))
        parser.add_argument('--triple', default='1,2,1')
        parser.add_argument('--variant', choices=(FULL_TRIPLE, REPEATED_INDEX), default=REPEATED_INDEX)
        parser.add_argument('--k1', type=int, default=1)
        parser.add_argument('--k2', type=int, default=3)
        parser.add_argument('--x0', help='Comma-separated initial state (remark1 default: origin).')
        parser.add_argument('--t-max', dest='t_max', type=float, help='Horizon of the lemma1 run.')

    @steering_command
    def handle(self, *args, **options):
        which = options['which']
        epsilons = options['epsilons'] or DEFAULT_EPSILONS.get(which)
        if which == 'remark1':
            report = self.remark1(options, epsilons)
        elif which == 'epoch-displacement':
            scenario = resolve_scenario(options['scenario'])
            x0 = self.initial_state(options, scenario.system.n, scenario.x0)
            report = epoch_displacement_oracle(scenario.system, scenario.basis, scenario.navigation,
                                               scenario.frequencies, scenario.params, x0, epsilons)
        else:
            report = self.lemma1(options)

        document = report.to_document()
        for key in sorted(document):
            self.stdout.write('%-18s %s' % (key, document[key]))
        if not report.passed:
            raise CommandError('oracle %s failed: %s' % (which, '; '.join(getattr(report, 'failures', [])) or
                                                         '%d violations' % len(report.violations)),
                               returncode=EXIT_ORACLE_FAILURE)
        self.stdout.write(self.style.SUCCESS('oracle %s passed' % which))

    def initial_state(self, options, n, default):
        if not options.get('x0'):
            return np.asarray(default, dtype=float)
        try:
            x0 = np.array([float(v) for v in options['x0'].split(',')])
        except ValueError:
            x0 = np.zeros(0)
        if x0.shape != (n,):
            raise CommandError('--x0 needs %d comma-separated numbers' % n, returncode=EXIT_INVALID)
        return x0

    def remark1(self, options, epsilons):
        system = catalog_system(options['system'])
        triple = parse_indices(options['triple'], 3, '--triple')
        if max(triple) > system.m:
            raise CommandError('triple %s needs %d inputs, %s has %d' % (triple, max(triple), system.name, system.m),
                               returncode=EXIT_INVALID)
        x0 = self.initial_state(options, system.n, np.zeros(system.n))
        try:
            return remark1_displacement_oracle(system, triple, (options['k1'], options['k2']), epsilons, x0,
                                               variant=options['variant'])
        except ValueError as exc:
            raise CommandError(str(exc), returncode=EXIT_INVALID)

    def lemma1(self, options):
        scenario = with_overrides(resolve_scenario(options['scenario']), t_max=options['t_max'])
        try:
            trajectory = scenario.run()
        except CollisionError as exc:
            trajectory = exc.trajectory
        return lemma1_bound_check(trajectory, scenario.system)
