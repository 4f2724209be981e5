class SteeringError(Exception):
    """Base class of every error raised by the steering app."""


class EvaluationDomainError(SteeringError):
    """A vector field returned a non-finite value."""


class RankDeficiencyError(SteeringError):
    def __init__(self, message, x=None, condition=None):
        super().__init__(message)
        self.x = x
        self.condition = condition


class OutsideFreeSpaceError(SteeringError):
    """The navigation function radicand is negative at the queried point."""


class BoundarySingularityError(SteeringError):
    """The product of obstacle functions is too close to zero for a gradient."""


class FrequencyAssignmentError(SteeringError):
    pass


class CollisionError(SteeringError):
    def __init__(self, message, time=None, state=None, trajectory=None):
        super().__init__(message)
        self.time = time
        self.state = state
        self.trajectory = trajectory


class ScenarioError(SteeringError):
    SCHEMA = 'schema'
    DIMENSION = 'dimension'
    FEASIBILITY = 'feasibility'

    def __init__(self, messages, code=SCHEMA):
        if isinstance(messages, str):
            messages = [messages]
        super().__init__('; '.join(messages))
        self.messages = list(messages)
        self.code = code
