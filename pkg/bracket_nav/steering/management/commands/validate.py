from django.core.management.base import BaseCommand, CommandError

from steering.decorators import EXIT_INVALID, steering_command
from steering.scenarios import resolve_scenario, validate_scenario


class Command(BaseCommand):
    help = 'Runs the static checks of a scenario: rank, non-resonance, calibration, scene validity, jacobians.'

    def add_arguments(self, parser):
        parser.add_argument('scenario', help='Built-in scenario name or path to a TOML scenario.')
        parser.add_argument('--seed', type=int, default=0, help='Seed of the sampling checks.')

    @steering_command
    def handle(self, *args, **options):
        scenario = resolve_scenario(options['scenario'])
        report = validate_scenario(scenario, seed=options['seed'])
        for check in report.checks:
            line = '%-22s %s' % (check.name, check.detail)
            if check.passed:
                self.stdout.write(self.style.SUCCESS('PASS ') + line)
            else:
                self.stdout.write(self.style.ERROR('FAIL ') + line)
        for warning in report.warnings:
            self.stdout.write(self.style.WARNING('WARN ') + warning)
        if not report.passed:
            raise CommandError('scenario %s failed validation' % scenario.name, returncode=EXIT_INVALID)
        self.stdout.write(self.style.SUCCESS('scenario %s is valid' % scenario.name))
