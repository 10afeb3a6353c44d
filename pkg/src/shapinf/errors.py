"""Exception hierarchy shared across the package."""


class ShapinfError(Exception):
    """Base class for all errors raised by this package."""


class SchemaError(ShapinfError):
    """Schema file is malformed or violates a schema invariant."""


class DataFormatError(ShapinfError):
    """Data file is malformed or contains out-of-domain values."""


class CapacityError(ShapinfError):
    """A requested computation exceeds a configured enumeration cap."""


class QueryError(ShapinfError):
    """A query or configuration value does not resolve against the schema."""


class EmptySubsampleError(QueryError):
    """No training rows match the requested (partial assignment, class) pair.

    This signals that the query is unanswerable from the sample, not a bug.
    """

    def __init__(self, fixed: dict, target):
        self.fixed = dict(fixed)
        self.target = target
        where = ", ".join(f"{k}={v}" for k, v in self.fixed.items()) or "<none>"
        super().__init__(
            f"no rows with class {target!r} match the assignment {{{where}}}"
        )


class UnseenAssignmentError(ShapinfError):
    """An unsmoothed frequency classifier was queried on an unobserved row."""


class SizeLimitError(ShapinfError):
    """A player set is larger than the configured exact-computation bound."""
