"""Exception taxonomy shared across the package."""


class MgrError(Exception):
    """Base class for all package errors."""


class SchemaError(MgrError):
    """A column reference, kind, or comparator does not fit the schema."""


class DataError(MgrError):
    """Input data violates a contract: bad CSV, misaligned files, bad labels."""


class ConfigError(MgrError):
    """A configuration file or parameter set is invalid."""


class EmptyGroupError(MgrError):
    """A metric that conditions on a group was evaluated on an empty group."""


class DistributionError(MgrError):
    """A discrete distribution is malformed: negative mass or not normalized."""


class PredictionError(MgrError):
    """A predictor emitted values outside [0, 1] or could not resolve a row."""


class BoostInvariantError(MgrError):
    """An internal invariant of the boosting loop failed; indicates a bug."""
