"""Exception types raised across the toolkit."""


class StratClsError(Exception):
    """Base class for every error raised by stratcls."""


class DomainError(StratClsError, ValueError):
    pass


class DimensionMismatch(StratClsError, ValueError):
    pass


class NotPSD(StratClsError, ValueError):
    pass


class Singular(StratClsError, ValueError):
    pass


class CycleDetected(StratClsError, ValueError):
    def __init__(self, cycle, names=None):
        self.cycle = list(cycle)
        labels = [names[i] for i in self.cycle] if names else [str(i) for i in self.cycle]
        super().__init__("graph contains a cycle: " + " -> ".join(labels))


class SchemaError(StratClsError, ValueError):
    pass


class ZeroEffort(StratClsError, ValueError):
    pass


class PartitionError(StratClsError, ValueError):
    pass


class PreconditionError(StratClsError, ValueError):
    pass


class DepthExceeded(StratClsError, ValueError):
    pass


class UnknownClassifier(StratClsError, KeyError):
    pass


class Infeasible(StratClsError):
    """No effort profile satisfies the constraint.

    ``threshold_delta`` carries the smallest admissible failure tolerance
    when it is known.
    """

    def __init__(self, message, threshold_delta=None):
        super().__init__(message)
        self.threshold_delta = threshold_delta


class SingularCovariance(StratClsError, ValueError):
    pass


class NumericalFailure(StratClsError, RuntimeError):
    pass


class IterationLimit(NumericalFailure):
    pass
