"""Exception hierarchy.

Three top-level families map onto the CLI's distinct exit codes:
ConfigError (bad parameters), DataError (malformed/inconsistent inputs)
and NumericError (model or numeric inconsistencies detected at runtime).
"""


class FaultSigError(Exception):
    """Base class for all package errors."""


class ConfigError(FaultSigError):
    """Invalid configuration or parameter values."""


class DataError(FaultSigError):
    """Malformed, missing or schema-violating input data."""


class NumericError(FaultSigError):
    """Numeric inconsistency detected while computing."""


# --- config ---

class InvalidSpec(ConfigError):
    """Filter specification violates its invariants."""


class InvalidConfig(ConfigError):
    """Synthesis configuration violates its invariants."""


# --- data / schema ---

class MissingColumn(DataError):
    def __init__(self, column: str):
        self.column = column
        super().__init__(f"required column {column!r} not found in header")


class NonNumericCell(DataError):
    def __init__(self, row: int, column: str, text: str):
        self.row = row          # 1-based, header = row 1
        self.column = column
        super().__init__(f"non-numeric cell at row {row}, column {column!r}: {text!r}")


class EmptyFile(DataError):
    pass


class SeriesTooShort(DataError):
    pass


class EmptyInput(DataError):
    pass


class EmptyTrainSet(DataError):
    pass


class ClassTooSmall(DataError):
    def __init__(self, label: int, count: int, needed: int):
        self.label = label
        super().__init__(f"class {label} has {count} rows, needs at least {needed}")


class FeatureCountMismatch(DataError):
    pass


class LengthMismatch(DataError):
    pass


class LabelOutOfRange(DataError):
    pass


class EmptyMatrix(DataError):
    pass


class TooManyFeatures(DataError):
    pass


# --- numeric ---

class InconsistentCovers(NumericError):
    """Tree node covers are not additive (parent != left + right)."""
