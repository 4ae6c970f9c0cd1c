"""Exception types shared across the solver modules."""


class SingularSystemError(RuntimeError):
    """The posterior linear system is numerically singular.

    Raised after the one-shot ridge retry has failed; ``floor`` records
    the diagonal regularization that was applied before giving up.
    """

    def __init__(self, message: str, floor: float):
        super().__init__(f"{message} (ridge floor applied: {floor:.3e})")
        self.floor = floor


class InfeasibleProblemError(RuntimeError):
    """The constraint set of a weighted-l1 problem is empty."""


class InnerSolverError(RuntimeError):
    """The inner weighted-l1 solver hit its iteration cap before converging.

    Carries the last (feasible) iterate so callers can still inspect or
    report it.
    """

    def __init__(self, message: str, last_iterate, iterations: int):
        super().__init__(message)
        self.last_iterate = last_iterate
        self.iterations = iterations


class ConsistencyError(RuntimeError):
    """An internal identity was violated beyond numerical tolerance.

    Signals that a posterior and the precision diagonal it was built from
    do not match (e.g. shrinkage factors outside [0, 1])."""


class GenerationError(RuntimeError):
    """Synthetic-instance generation could not satisfy the layout rules."""
