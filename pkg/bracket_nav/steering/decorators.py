import functools

from django.core.management.base import CommandError

from .exceptions import (BoundarySingularityError, CollisionError, EvaluationDomainError,
                         FrequencyAssignmentError, OutsideFreeSpaceError, RankDeficiencyError, ScenarioError)

EXIT_OK = 0
EXIT_ORACLE_FAILURE = 1
EXIT_NOT_CONVERGED = 2
EXIT_COLLISION = 3
EXIT_INVALID = 4
EXIT_RANK = 5


def exit_code_for(error):
    if isinstance(error, RankDeficiencyError):
        return EXIT_RANK
    if isinstance(error, (CollisionError, BoundarySingularityError, OutsideFreeSpaceError)):
        return EXIT_COLLISION
    return EXIT_INVALID


def steering_command(function=None):
    '''
    Decorator for management command handlers that turns steering errors
    into CommandError carrying the matching process exit code.
    '''
    def actual_decorator(handle):
        @functools.wraps(handle)
        def wrapper(self, *args, **options):
            try:
                return handle(self, *args, **options)
            except ScenarioError as exc:
                raise CommandError('invalid scenario (%s): %s' % (exc.code, exc), returncode=EXIT_INVALID)
            except (FrequencyAssignmentError, EvaluationDomainError) as exc:
                raise CommandError(str(exc), returncode=EXIT_INVALID)
            except (RankDeficiencyError, CollisionError, BoundarySingularityError, OutsideFreeSpaceError) as exc:
                raise CommandError(str(exc), returncode=exit_code_for(exc))
        return wrapper

    if function:
        return actual_decorator(function)
    return actual_decorator
