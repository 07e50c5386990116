"""Exception types shared across the toolkit."""


class BilevelCertError(Exception):
    """Base class for all toolkit errors."""


class ParseError(BilevelCertError):
    """Raised on malformed expression text.

    Carries the byte offset of the failure plus a description of what was
    expected and what was found there.
    """

    def __init__(self, offset, expected, found):
        self.offset = offset
        self.expected = expected
        self.found = found
        super().__init__(f"parse error at offset {offset}: expected {expected}, found {found}")


class EvaluationDomainError(BilevelCertError):
    """Division by zero or other domain violation during evaluation."""


class NonFiniteResultError(BilevelCertError):
    """Evaluation produced inf or nan."""


class ExactArithmeticError(BilevelCertError):
    """Exact rational evaluation hit a transcendental node or irrational data."""


class DimensionError(BilevelCertError):
    """Inconsistent vector/matrix dimensions."""


class ValidationError(BilevelCertError):
    """Aggregated list of problem-validation failures."""

    def __init__(self, problems):
        self.problems = list(problems)
        super().__init__("; ".join(self.problems))


class PointNotInSetError(BilevelCertError):
    """Queried point lies outside the set beyond tolerance."""


class GraphMembershipError(BilevelCertError):
    """(y, z) is not on the graph of the normal-cone map within tolerance."""


class BranchCapExceededError(BilevelCertError):
    """Branch enumeration would exceed the configured cap."""


class PivotLimitError(BilevelCertError):
    """Simplex pivot count exceeded the cycling guard; internal error."""


class StaleCertificateError(BilevelCertError):
    """Stored certificate fails independent residual recomputation."""


class EmptyGridError(BilevelCertError):
    """Grid does not intersect the feasible set."""


class TooFewSamplesError(BilevelCertError):
    """Not enough set members found near the base point for sampling."""


class SchemaError(BilevelCertError):
    """Problem or report file violates the strict schema."""
