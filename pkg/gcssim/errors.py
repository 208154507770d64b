# errors.py


class GcsSimError(Exception):
    """Base class for simulator errors."""


class ConfigError(GcsSimError):
    """Invalid configuration. Carries the offending key and its line when known."""

    def __init__(self, message, key=None, line=None):
        self.key = key
        self.line = line
        where = ""
        if key is not None:
            where = f" [{key}" + (f", line {line}" if line is not None else "") + "]"
        super().__init__(f"{message}{where}")


class UnknownScenario(ConfigError):
    def __init__(self, name, known=()):
        self.name = name
        hint = f"; known: {', '.join(known)}" if known else ""
        super().__init__(f"unknown scenario '{name}'{hint}", key="scenario")


class ConstraintViolation(GcsSimError):
    """A parameter constraint failed: `name` is the constraint, lhs/rhs its two sides."""

    def __init__(self, name, lhs, rhs):
        self.name = name
        self.lhs = lhs
        self.rhs = rhs
        super().__init__(f"constraint {name} violated: {lhs} vs {rhs}")


class HistoryGap(GcsSimError):
    def __init__(self, start, end, covered):
        self.start = start
        self.end = end
        self.covered = covered
        super().__init__(f"mode history covers {covered}, window [{start}, {end}] requested")


class MismatchedEll(GcsSimError):
    def __init__(self, expected, found):
        self.expected = expected
        self.found = found
        super().__init__(f"threshold word has ell={found}, expected ell={expected}")


class InvariantViolation(GcsSimError):
    """Raised by the runtime monitor in abort mode. `trace` holds everything recorded so far."""

    def __init__(self, invariant, time, node, detail, trace=None):
        self.invariant = invariant
        self.time = time
        self.node = node
        self.detail = detail
        self.trace = trace
        super().__init__(f"{invariant} violated at t={time} fs on node {node}: {detail}")


class DeadlockDetected(GcsSimError):
    def __init__(self, time, detail=""):
        self.time = time
        super().__init__(f"Fairbanks net deadlocked at t={time}" + (f": {detail}" if detail else ""))


class NotFound(GcsSimError):
    pass


__all__ = [
    'GcsSimError', 'ConfigError', 'UnknownScenario', 'ConstraintViolation',
    'HistoryGap', 'MismatchedEll', 'InvariantViolation', 'DeadlockDetected', 'NotFound'
]
