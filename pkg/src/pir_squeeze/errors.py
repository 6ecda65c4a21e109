"""Exception types shared across the package."""


class PirError(Exception):
    """Base class for every error raised by pir_squeeze."""

    code = "error"


class ValidationError(PirError, ValueError):
    code = "invalid_params"


class ModulusMismatch(PirError, ValueError):
    code = "modulus_mismatch"


class DivisionByZero(PirError, ZeroDivisionError):
    code = "division_by_zero"


class DimensionMismatch(PirError, ValueError):
    code = "dimension_mismatch"


class DuplicateNodes(PirError, ValueError):
    code = "duplicate_nodes"


class SingularMatrix(PirError, ValueError):
    code = "singular_matrix"


class NoSolution(PirError, ValueError):
    code = "no_solution"


class FieldTooSmall(PirError, ValueError):
    code = "field_too_small"


class RetriesExhausted(PirError, RuntimeError):
    code = "retries_exhausted"


class SpanFailure(PirError, RuntimeError):
    """Downloaded undesired symbols do not span the queried ones."""

    code = "span_failure"


class NotApplicable(PirError, ValueError):
    """A closed-form rate was requested outside its parameter domain."""

    code = "not_applicable"
