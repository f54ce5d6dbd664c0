"""Exception hierarchy shared by all components."""


class AdaptiveBDIError(Exception):
    """Base class for every error raised by this package."""


# self-model
class DuplicateAction(AdaptiveBDIError):
    pass


class VocabularyViolation(AdaptiveBDIError):
    pass


class UnknownAction(AdaptiveBDIError, KeyError):
    def __str__(self):
        return Exception.__str__(self)


class StaleVersion(AdaptiveBDIError):
    pass


class InvalidDescription(AdaptiveBDIError, ValueError):
    pass


# life-cycles
class IllegalTransition(AdaptiveBDIError):
    def __init__(self, state, event):
        super().__init__(f"illegal transition: {state.value} --{event.value}-->")
        self.state = state
        self.event = event


# monitor
class EmptyWindow(AdaptiveBDIError):
    pass


# BDI engine
class NoApplicablePlan(AdaptiveBDIError):
    pass


# planner
class Unsolvable(AdaptiveBDIError):
    pass


class IndexOutOfRange(AdaptiveBDIError, IndexError):
    pass


class BoundExceeded(AdaptiveBDIError):
    pass


# learner
class InsufficientData(AdaptiveBDIError):
    pass


class InconsistentSchema(AdaptiveBDIError):
    pass


class EmptyEffects(AdaptiveBDIError):
    pass


# environment
class InvalidCommand(AdaptiveBDIError):
    pass


class CommandWhileBusy(AdaptiveBDIError):
    pass


class UnknownEdge(AdaptiveBDIError):
    pass
