"""Exception hierarchy shared by every layer of the package."""


class MpnetError(Exception):
    """Base class for all errors raised by this package."""


class ParseError(MpnetError):
    """Syntax error with source position and the tokens that were expected."""

    def __init__(self, message, line, column, expected=()):
        self.line = line
        self.column = column
        self.expected = tuple(sorted(expected))
        detail = f"{message} at {line}:{column}"
        if self.expected:
            detail += " (expected " + ", ".join(self.expected) + ")"
        super().__init__(detail)


class EvalError(MpnetError):
    """Base class for expression-evaluation failures."""


class UnboundVariable(EvalError):
    def __init__(self, name):
        self.name = name
        super().__init__(f"unbound variable '{name}'")


class TypeMismatch(EvalError):
    def __init__(self, op, *kinds):
        self.op = op
        self.kinds = kinds
        super().__init__(f"operator '{op}' not applicable to {', '.join(kinds)}")


class OpaqueInspection(EvalError):
    def __init__(self, op):
        super().__init__(f"cannot apply '{op}' to an opaque value")


class DivisionByZero(EvalError):
    def __init__(self, op):
        super().__init__(f"'{op}' by zero")


class ConditionNotBoolean(EvalError):
    def __init__(self, text):
        super().__init__(f"condition '{text}' did not evaluate to a boolean")


class PickAddressUnresolved(EvalError):
    """pick_address() was evaluated outside a firing context."""

    def __init__(self):
        super().__init__("pick_address() outside a nondeterministic-choice context")


class NetError(MpnetError):
    """Structural net errors (transforms, building)."""


class ValidationFailed(NetError):
    def __init__(self, defects):
        self.defects = tuple(defects)
        lines = "; ".join(str(d) for d in self.defects)
        super().__init__(f"net has {len(self.defects)} defect(s): {lines}")


class CompoundKindMismatch(NetError):
    pass


class CompoundColorMismatch(NetError):
    pass


class TargetPlaceMissing(NetError):
    def __init__(self, name):
        self.name = name
        super().__init__(f"no area contains a place named '{name}'")


class ColorMismatch(NetError):
    def __init__(self, place, value):
        super().__init__(f"value {value} not admissible in place '{place}'")


class UnknownPlace(NetError):
    def __init__(self, name):
        self.name = name
        super().__init__(f"unknown place '{name}'")


class DuplicateLabel(NetError):
    def __init__(self, label):
        super().__init__(f"duplicate annotation label '{label}'")


class InvalidFragment(NetError):
    pass


class EngineError(MpnetError):
    pass


class UnsupportedPattern(EngineError):
    def __init__(self, text):
        super().__init__(f"pattern element '{text}' has unbound variables and is not a bare variable")


class BindingSearchBudgetExceeded(EngineError):
    pass


class NotServiceable(EngineError):
    pass


class StaleCandidate(EngineError):
    def __init__(self):
        super().__init__("state changed since the candidate was computed")


class LimitExceeded(EngineError):
    """Exploration hit its state or depth limit; partial results are attached."""

    def __init__(self, graph):
        self.graph = graph
        super().__init__("exploration limit exceeded")


class FrontendError(MpnetError):
    pass


class RankCountTooSmall(FrontendError):
    def __init__(self, n):
        super().__init__(f"need at least 2 ranks, got {n}")


class UnknownVariable(FrontendError):
    def __init__(self, name):
        super().__init__(f"unknown variable '{name}'")
