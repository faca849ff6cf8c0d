"""Exception hierarchy shared by every icheck module."""


class IcheckError(Exception):
    """Base class for all errors raised by icheck."""


class MalformedProgramError(IcheckError):
    """Syntax errors, arity clashes and unsafe clauses."""


class VocabularyError(IcheckError):
    """A constraint mentions a predicate the database does not declare."""


class NotStratifiableError(IcheckError):
    def __init__(self, cycle):
        self.cycle = tuple(cycle)
        super().__init__(
            "rule set is not stratifiable: negative dependency cycle "
            + " -> ".join(self.cycle)
        )


class InstantiationRequiredError(IcheckError):
    """A parameterized update was applied without binding its parameters."""


class MissingBindingError(IcheckError):
    pass


class UnsupportedRecursionError(IcheckError):
    def __init__(self, cycle):
        self.cycle = tuple(cycle)
        super().__init__(
            "constraint depends on a recursive view: " + " -> ".join(self.cycle)
        )


class UnsupportedUpdateError(IcheckError):
    pass


class UnsupportedNegationError(IcheckError):
    """Negated view whose rules carry local variables; not expressible as denials."""


class ResourceError(IcheckError):
    """An explicit size bound was reached; nothing was truncated silently."""


class BudgetExceededError(ResourceError):
    def __init__(self, needed, budget):
        self.needed = needed
        self.budget = budget
        super().__init__(
            f"enumeration needs {needed} databases but the budget is {budget}"
        )


class SimplificationLimitError(ResourceError):
    def __init__(self, produced, cap):
        self.produced = produced
        self.cap = cap
        super().__init__(
            f"simplification produced more than {cap} denials for a single "
            f"input denial ({produced} so far); raise max_denials to allow it"
        )


class SamplingError(ResourceError):
    def __init__(self, accepted, drawn):
        self.accepted = accepted
        self.drawn = drawn
        super().__init__(
            f"only {accepted} of {drawn} sampled databases meet the premise; "
            "lower the fact density or the sample size"
        )
