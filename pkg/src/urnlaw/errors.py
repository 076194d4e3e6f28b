"""Exception hierarchy shared by all modules (and mapped to CLI exit codes)."""


class ValidationError(ValueError):
    """Input violates a documented precondition."""


class BudgetError(ValidationError):
    """A computation would exceed its hard size budget."""


class PoleError(ZeroDivisionError, ValidationError):
    """Evaluation at a pole of a meromorphic function."""


class VerificationError(AssertionError):
    """An internal cross-check between independent routes failed."""
