"""Exception taxonomy shared across the package."""


class ImmtsfError(Exception):
    """Base class for all package errors."""


class InputError(ImmtsfError, ValueError):
    """Malformed or inconsistent caller input (mismatched ids, bad shapes,
    unparseable rows, missing query rows)."""


class AmbiguityError(InputError):
    """Duplicate (timestamp, variable) observations that cannot be aligned
    without an arbitrary tie-break."""


class CapacityError(InputError):
    """A fixed-length grid is too small for the window it must hold."""


class SplitError(ImmtsfError, ValueError):
    """Chronological splitting is impossible (too few windows)."""


class MetricError(ImmtsfError, ValueError):
    """An irregularity metric is undefined on the given input (degenerate
    normalizer, empty data, zero time range, too few points)."""


class TrainingError(ImmtsfError, RuntimeError):
    """Optimization failure, e.g. a non-finite loss or gradient."""
