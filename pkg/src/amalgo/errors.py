"""Exception hierarchy shared by all amalgo modules."""


class AmalgoError(Exception):
    """Base class; ``code`` is the machine-readable tag emitted by the CLI."""

    code = "error"

    def to_json(self) -> dict:
        return {"error": self.code, "message": str(self)}


class UnknownVertexError(AmalgoError, KeyError):
    code = "unknown-vertex"

    def __str__(self):
        return Exception.__str__(self)


class BudgetExceededError(AmalgoError):
    code = "budget-exceeded"


class IdentificationBudgetError(BudgetExceededError):
    code = "identification-budget-exceeded"


class ContainmentError(AmalgoError):
    """Internal invariant failure: a geodesic escaped its certified window."""

    code = "containment-violated"


class AdhesionError(AmalgoError, ValueError):
    code = "adhesion-invalid"


class PreconditionError(AmalgoError, ValueError):
    code = "precondition-failed"


class NotATreeError(PreconditionError):
    code = "not-a-tree"


class TooFewEndsError(PreconditionError):
    code = "too-few-ends"


class NotMultiEndedError(PreconditionError):
    code = "not-multi-ended"


class MismatchedEndpointError(PreconditionError):
    code = "mismatched-endpoint"


class NamespaceError(AmalgoError, ValueError):
    code = "namespace-inconsistency"


class SchemaError(AmalgoError, ValueError):
    code = "schema-invalid"
