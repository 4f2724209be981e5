from django.core.management.base import BaseCommand, CommandError

from steering.catalog import SYSTEM_CATALOG
from steering.decorators import EXIT_INVALID
from steering.scenarios import BUILTINS, dump_scenario


class Command(BaseCommand):
    help = 'Lists the built-in scenarios and catalog systems, or dumps one scenario as TOML.'

    def add_arguments(self, parser):
        parser.add_argument('--dump', metavar='NAME', help='Print a built-in scenario as an editable TOML document.')

    def handle(self, *args, **options):
        if options['dump']:
            if options['dump'] not in BUILTINS:
                raise CommandError('unknown built-in %r; choose from %s' % (options['dump'], ', '.join(BUILTINS)),
                                   returncode=EXIT_INVALID)
            self.stdout.write(dump_scenario(BUILTINS[options['dump']]()), ending='')
            return
        self.stdout.write('scenarios:')
        for name, factory in BUILTINS.items():
            scenario = factory()
            self.stdout.write('  %-14s %s, n=%d, m=%d, epsilon=%g, gamma=%g' % (
                name, scenario.system.name, scenario.system.n, scenario.system.m, scenario.params.epsilon,
                scenario.params.gamma))
        self.stdout.write('systems:')
        for name, factory in SYSTEM_CATALOG.items():
            system = factory()
            self.stdout.write('  %-20s n=%d, m=%d' % (name, system.n, system.m))
