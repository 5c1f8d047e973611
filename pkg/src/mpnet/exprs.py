"""Arc-inscription expressions: AST, free variables, evaluation.

Evaluation is pure: an expression plus a binding (variable name -> value)
deterministically yields a value or raises an evaluation error.  The only
impure-looking construct, ``pick_address(lo, hi)``, is not evaluated here;
the engine resolves each occurrence to a concrete address before firing
and passes the resolution in via ``picks``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Mapping, Optional, Union

from . import values as V
from .errors import (ConditionNotBoolean, DivisionByZero, EvalError,
                     OpaqueInspection, PickAddressUnresolved, TypeMismatch,
                     UnboundVariable)

Binding = Mapping[str, V.Value]

ARITH_OPS = ("+", "-", "*", "div", "mod")
CMP_OPS = ("=", "!=", "<", "<=", ">", ">=")
BOOL_OPS = ("and", "or")

BUILTINS = ("pick_address",)

ANON = "_"


class Expression:
    __slots__ = ()

    def __repr__(self):
        return f"<expr {pretty(self)}>"


@dataclass(frozen=True, slots=True, repr=False)
class Lit(Expression):
    value: V.Value


@dataclass(frozen=True, slots=True, repr=False)
class Var(Expression):
    name: str


@dataclass(frozen=True, slots=True, repr=False)
class BinOp(Expression):
    op: str
    left: Expression
    right: Expression


@dataclass(frozen=True, slots=True, repr=False)
class Not(Expression):
    operand: Expression


@dataclass(frozen=True, slots=True, repr=False)
class TupleExpr(Expression):
    items: tuple[Expression, ...]


@dataclass(frozen=True, slots=True, repr=False)
class RecordExpr(Expression):
    fields: tuple[tuple[str, Expression], ...]


@dataclass(frozen=True, slots=True, repr=False)
class FieldAccess(Expression):
    base: Expression
    name: str


@dataclass(frozen=True, slots=True, repr=False)
class IndexAccess(Expression):
    """1-based tuple component access, written ``t.1``."""

    base: Expression
    index: int


@dataclass(frozen=True, slots=True, repr=False)
class IfExpr(Expression):
    cond: Expression
    then: Expression
    orelse: Expression


@dataclass(frozen=True, slots=True, repr=False)
class Call(Expression):
    func: str
    args: tuple[Expression, ...]


def lit(x) -> Lit:
    """Convenience literal constructor from Python ints/bools/values."""
    if isinstance(x, V.Value):
        return Lit(x)
    if isinstance(x, bool):
        return Lit(V.bool_(x))
    if isinstance(x, int):
        return Lit(V.Nat(x))
    raise TypeError(f"cannot make a literal from {x!r}")


def free_vars(e: Expression) -> frozenset[str]:
    """All variable occurrences; the language has no binders."""
    out: set[str] = set()
    _collect_vars(e, out)
    return frozenset(out)


def _collect_vars(e, out):
    if isinstance(e, Var):
        out.add(e.name)
    elif isinstance(e, BinOp):
        _collect_vars(e.left, out)
        _collect_vars(e.right, out)
    elif isinstance(e, Not):
        _collect_vars(e.operand, out)
    elif isinstance(e, TupleExpr):
        for x in e.items:
            _collect_vars(x, out)
    elif isinstance(e, RecordExpr):
        for _, x in e.fields:
            _collect_vars(x, out)
    elif isinstance(e, (FieldAccess, IndexAccess)):
        _collect_vars(e.base, out)
    elif isinstance(e, IfExpr):
        _collect_vars(e.cond, out)
        _collect_vars(e.then, out)
        _collect_vars(e.orelse, out)
    elif isinstance(e, Call):
        for x in e.args:
            _collect_vars(x, out)


def contains_pick(e: Expression) -> bool:
    if isinstance(e, Call) and e.func == "pick_address":
        return True
    if isinstance(e, BinOp):
        return contains_pick(e.left) or contains_pick(e.right)
    if isinstance(e, Not):
        return contains_pick(e.operand)
    if isinstance(e, TupleExpr):
        return any(contains_pick(x) for x in e.items)
    if isinstance(e, RecordExpr):
        return any(contains_pick(x) for _, x in e.fields)
    if isinstance(e, (FieldAccess, IndexAccess)):
        return contains_pick(e.base)
    if isinstance(e, IfExpr):
        return any(contains_pick(x) for x in (e.cond, e.then, e.orelse))
    if isinstance(e, Call):
        return any(contains_pick(x) for x in e.args)
    return False


def pick_sites(e: Expression) -> set[Call]:
    """Distinct pick_address call expressions occurring in e."""
    out: set[Call] = set()
    _collect_picks(e, out)
    return out


def _collect_picks(e, out):
    if isinstance(e, Call):
        if e.func == "pick_address":
            out.add(e)
        for x in e.args:
            _collect_picks(x, out)
    elif isinstance(e, BinOp):
        _collect_picks(e.left, out)
        _collect_picks(e.right, out)
    elif isinstance(e, Not):
        _collect_picks(e.operand, out)
    elif isinstance(e, TupleExpr):
        for x in e.items:
            _collect_picks(x, out)
    elif isinstance(e, RecordExpr):
        for _, x in e.fields:
            _collect_picks(x, out)
    elif isinstance(e, (FieldAccess, IndexAccess)):
        _collect_picks(e.base, out)
    elif isinstance(e, IfExpr):
        for x in (e.cond, e.then, e.orelse):
            _collect_picks(x, out)


def eval_expr(e: Expression, b: Binding,
              picks: Optional[Mapping[Call, V.Value]] = None) -> V.Value:
    if isinstance(e, Lit):
        return e.value
    if isinstance(e, Var):
        v = b.get(e.name)
        if v is None:
            raise UnboundVariable(e.name)
        return v
    if isinstance(e, BinOp):
        return _eval_binop(e, b, picks)
    if isinstance(e, Not):
        v = eval_expr(e.operand, b, picks)
        if not isinstance(v, V.Bool):
            raise TypeMismatch("not", V.kind_of(v))
        return V.bool_(not v.flag)
    if isinstance(e, TupleExpr):
        return V.Tup(tuple(eval_expr(x, b, picks) for x in e.items))
    if isinstance(e, RecordExpr):
        return V.Record(tuple((f, eval_expr(x, b, picks)) for f, x in e.fields))
    if isinstance(e, FieldAccess):
        base = eval_expr(e.base, b, picks)
        if isinstance(base, V.Opaque):
            raise OpaqueInspection("." + e.name)
        if not isinstance(base, V.Record):
            raise TypeMismatch("." + e.name, V.kind_of(base))
        v = base.get(e.name)
        if v is None:
            raise TypeMismatch("." + e.name, f"record without field '{e.name}'")
        return v
    if isinstance(e, IndexAccess):
        base = eval_expr(e.base, b, picks)
        if isinstance(base, V.Opaque):
            raise OpaqueInspection(f".{e.index}")
        if not isinstance(base, V.Tup):
            raise TypeMismatch(f".{e.index}", V.kind_of(base))
        if not 1 <= e.index <= len(base.items):
            raise TypeMismatch(f".{e.index}", f"tuple of length {len(base.items)}")
        return base.items[e.index - 1]
    if isinstance(e, IfExpr):
        c = eval_expr(e.cond, b, picks)
        if not isinstance(c, V.Bool):
            raise TypeMismatch("if", V.kind_of(c))
        return eval_expr(e.then if c.flag else e.orelse, b, picks)
    if isinstance(e, Call):
        if e.func == "pick_address":
            if picks is None or e not in picks:
                raise PickAddressUnresolved()
            return picks[e]
        raise TypeMismatch(e.func, "unknown function")
    raise TypeError(f"not an Expression: {e!r}")


def _eval_binop(e: BinOp, b, picks):
    return apply_binop(e.op, eval_expr(e.left, b, picks),
                       eval_expr(e.right, b, picks))


def apply_binop(op: str, left: V.Value, right: V.Value) -> V.Value:
    if op in ("=", "!="):
        same = V.matches(left, right)
        return V.bool_(same if op == "=" else not same)
    if op in ("<", "<=", ">", ">="):
        for side in (left, right):
            if isinstance(side, V.Opaque):
                raise OpaqueInspection(op)
        if not (isinstance(left, V.Nat) and isinstance(right, V.Nat)):
            raise TypeMismatch(op, V.kind_of(left), V.kind_of(right))
        table = {"<": left.n < right.n, "<=": left.n <= right.n,
                 ">": left.n > right.n, ">=": left.n >= right.n}
        return V.bool_(table[op])
    if op in ARITH_OPS:
        for side in (left, right):
            if isinstance(side, V.Opaque):
                raise OpaqueInspection(op)
        if not (isinstance(left, V.Nat) and isinstance(right, V.Nat)):
            raise TypeMismatch(op, V.kind_of(left), V.kind_of(right))
        if op == "+":
            return V.Nat(left.n + right.n)
        if op == "-":
            return V.Nat(max(0, left.n - right.n))
        if op == "*":
            return V.Nat(left.n * right.n)
        if right.n == 0:
            raise DivisionByZero(op)
        return V.Nat(left.n // right.n if op == "div" else left.n % right.n)
    if op in BOOL_OPS:
        if not (isinstance(left, V.Bool) and isinstance(right, V.Bool)):
            raise TypeMismatch(op, V.kind_of(left), V.kind_of(right))
        return V.bool_(left.flag and right.flag if op == "and"
                       else left.flag or right.flag)
    raise TypeError(f"unknown operator {op!r}")


def compile_expr(e: Expression) -> Callable:
    """Compile to a closure ``fn(binding, picks) -> Value`` with the same
    semantics (and the same errors) as :func:`eval_expr`; the engine uses
    this on its hot paths.
    """
    if isinstance(e, Lit):
        v = e.value
        return lambda b, p: v
    if isinstance(e, Var):
        name = e.name

        def var_fn(b, p):
            v = b.get(name)
            if v is None:
                raise UnboundVariable(name)
            return v
        return var_fn
    if isinstance(e, BinOp):
        op = e.op
        left = compile_expr(e.left)
        right = compile_expr(e.right)
        return lambda b, p: apply_binop(op, left(b, p), right(b, p))
    if isinstance(e, Not):
        operand = compile_expr(e.operand)

        def not_fn(b, p):
            v = operand(b, p)
            if not isinstance(v, V.Bool):
                raise TypeMismatch("not", V.kind_of(v))
            return V.bool_(not v.flag)
        return not_fn
    if isinstance(e, TupleExpr):
        items = tuple(compile_expr(x) for x in e.items)
        return lambda b, p: V.Tup(tuple(fn(b, p) for fn in items))
    if isinstance(e, RecordExpr):
        fields = tuple((f, compile_expr(x)) for f, x in e.fields)
        return lambda b, p: V.Record(tuple((f, fn(b, p)) for f, fn in fields))
    if isinstance(e, FieldAccess):
        base = compile_expr(e.base)
        name = e.name

        def field_fn(b, p):
            v = base(b, p)
            if isinstance(v, V.Opaque):
                raise OpaqueInspection("." + name)
            if not isinstance(v, V.Record):
                raise TypeMismatch("." + name, V.kind_of(v))
            out = v.get(name)
            if out is None:
                raise TypeMismatch("." + name, f"record without field '{name}'")
            return out
        return field_fn
    if isinstance(e, IndexAccess):
        base = compile_expr(e.base)
        index = e.index

        def index_fn(b, p):
            v = base(b, p)
            if isinstance(v, V.Opaque):
                raise OpaqueInspection(f".{index}")
            if not isinstance(v, V.Tup):
                raise TypeMismatch(f".{index}", V.kind_of(v))
            if not 1 <= index <= len(v.items):
                raise TypeMismatch(f".{index}", f"tuple of length {len(v.items)}")
            return v.items[index - 1]
        return index_fn
    if isinstance(e, IfExpr):
        cond = compile_expr(e.cond)
        then = compile_expr(e.then)
        orelse = compile_expr(e.orelse)

        def if_fn(b, p):
            c = cond(b, p)
            if not isinstance(c, V.Bool):
                raise TypeMismatch("if", V.kind_of(c))
            return then(b, p) if c.flag else orelse(b, p)
        return if_fn
    if isinstance(e, Call):
        if e.func == "pick_address":
            def pick_fn(b, p, site=e):
                if p is None or site not in p:
                    raise PickAddressUnresolved()
                return p[site]
            return pick_fn
        raise TypeMismatch(e.func, "unknown function")
    raise TypeError(f"not an Expression: {e!r}")


def eval_arc(conditions, pattern, b: Binding,
             picks: Optional[Mapping[Call, V.Value]] = None) -> tuple[V.Value, ...]:
    """Evaluate a whole arc expression (condition set + pattern sequence).

    Returns the empty sequence as soon as any condition is false; the
    result is independent of condition order because every condition is
    inspected before an error is propagated.
    """
    failures = []
    for c in sorted(conditions, key=pretty):
        try:
            v = eval_expr(c, b, picks)
        except EvalError as err:
            failures.append(err)
            continue
        if isinstance(v, V.Bool):
            if not v.flag:
                return ()
        else:
            failures.append(ConditionNotBoolean(pretty(c)))
    if failures:
        raise failures[0]
    return tuple(eval_expr(p, b, picks) for p in pattern)


# ---------------------------------------------------------------------------
# arc expressions

@dataclass(frozen=True, slots=True)
class InputArcExpr:
    """``[conditions] (pattern, size, values)`` with derived short forms
    already expanded: absent size means the pattern length, absent values
    means no values variable.
    """

    conditions: tuple[Expression, ...] = ()
    pattern: tuple[Expression, ...] = ()
    size: Union[int, str, None] = None
    values_var: Optional[str] = None

    def __post_init__(self):
        if not self.pattern:
            raise ValueError("input arc pattern is empty")
        if self.size is None and self.values_var is not None:
            raise ValueError("values variable without a size")

    def effective_size(self) -> Union[int, str]:
        return len(self.pattern) if self.size is None else self.size

    def is_bulk(self) -> bool:
        return isinstance(self.size, str)

    def free(self) -> frozenset[str]:
        out = set()
        for c in self.conditions:
            out |= free_vars(c)
        for p in self.pattern:
            out |= free_vars(p)
        if isinstance(self.size, str):
            out.add(self.size)
        if self.values_var:
            out.add(self.values_var)
        return frozenset(out)

    def pretty(self) -> str:
        parts = ""
        if self.conditions:
            parts += "[" + ", ".join(pretty(c) for c in self.conditions) + "] "
        pats = ", ".join(pretty(p) for p in self.pattern)
        if self.size is None:
            if len(self.pattern) == 1:
                return parts + "(" + pats + ")"
            return parts + pats
        if len(self.pattern) != 1:
            raise ValueError("explicit size requires a single-element pattern")
        size = str(self.size)
        if self.values_var is None:
            return parts + f"({pats}, {size})"
        return parts + f"({pats}, {size}, {self.values_var})"


@dataclass(frozen=True, slots=True)
class OutputArcExpr:
    """``[conditions] pattern@location``; absent location targets the
    arc's own place.
    """

    conditions: tuple[Expression, ...] = ()
    pattern: tuple[Expression, ...] = ()
    location: Optional[Expression] = None

    def __post_init__(self):
        if not self.pattern:
            raise ValueError("output arc pattern is empty")

    def free(self) -> frozenset[str]:
        out = set()
        for c in self.conditions:
            out |= free_vars(c)
        for p in self.pattern:
            out |= free_vars(p)
        if self.location is not None:
            out |= free_vars(self.location)
        return frozenset(out)

    def pretty(self) -> str:
        parts = ""
        if self.conditions:
            parts += "[" + ", ".join(pretty(c) for c in self.conditions) + "] "
        pats = ", ".join(pretty(p) for p in self.pattern)
        if self.location is not None:
            return parts + pats + " @ " + pretty(self.location)
        return parts + pats


# ---------------------------------------------------------------------------
# pretty printing

_LEVEL_IF = 0
_LEVEL_OR = 1
_LEVEL_AND = 2
_LEVEL_CMP = 3
_LEVEL_ADD = 4
_LEVEL_MUL = 5
_LEVEL_UNARY = 6
_LEVEL_POSTFIX = 7

_BIN_LEVEL = {"or": _LEVEL_OR, "and": _LEVEL_AND,
              "=": _LEVEL_CMP, "!=": _LEVEL_CMP, "<": _LEVEL_CMP,
              "<=": _LEVEL_CMP, ">": _LEVEL_CMP, ">=": _LEVEL_CMP,
              "+": _LEVEL_ADD, "-": _LEVEL_ADD,
              "*": _LEVEL_MUL, "div": _LEVEL_MUL, "mod": _LEVEL_MUL}


def pretty(e: Expression) -> str:
    return _pp(e, 0)


def _pp(e, level):
    if isinstance(e, Lit):
        return _pp_value(e.value)
    if isinstance(e, Var):
        return e.name
    if isinstance(e, BinOp):
        own = _BIN_LEVEL[e.op]
        if own == _LEVEL_CMP:
            # comparisons do not chain
            s = f"{_pp(e.left, own + 1)} {e.op} {_pp(e.right, own + 1)}"
        else:
            s = f"{_pp(e.left, own)} {e.op} {_pp(e.right, own + 1)}"
        return f"({s})" if level > own else s
    if isinstance(e, Not):
        s = f"not {_pp(e.operand, _LEVEL_UNARY)}"
        return f"({s})" if level > _LEVEL_UNARY else s
    if isinstance(e, TupleExpr):
        if len(e.items) == 1:
            return f"({_pp(e.items[0], 0)},)"
        return "(" + ", ".join(_pp(x, 0) for x in e.items) + ")"
    if isinstance(e, RecordExpr):
        return "{" + ", ".join(f"{f}={_pp(x, 0)}" for f, x in e.fields) + "}"
    if isinstance(e, FieldAccess):
        return f"{_pp(e.base, _LEVEL_POSTFIX)}.{e.name}"
    if isinstance(e, IndexAccess):
        return f"{_pp(e.base, _LEVEL_POSTFIX)}.{e.index}"
    if isinstance(e, IfExpr):
        s = (f"if {_pp(e.cond, _LEVEL_IF + 1)} then {_pp(e.then, _LEVEL_IF + 1)} "
             f"else {_pp(e.orelse, _LEVEL_IF + 1)}")
        return f"({s})" if level > _LEVEL_IF else s
    if isinstance(e, Call):
        return f"{e.func}(" + ", ".join(_pp(x, 0) for x in e.args) + ")"
    raise TypeError(f"not an Expression: {e!r}")


def _pp_value(v: V.Value) -> str:
    if isinstance(v, (V.Unit, V.Bool, V.Nat, V.AnyValue)):
        return repr(v)
    if isinstance(v, V.Tup):
        if len(v.items) == 1:
            return f"({_pp_value(v.items[0])},)"
        return "(" + ", ".join(_pp_value(x) for x in v.items) + ")"
    if isinstance(v, V.Record):
        return "{" + ", ".join(f"{f}={_pp_value(x)}" for f, x in v.fields) + "}"
    if isinstance(v, V.Opaque):
        text = v.data.decode("ascii", errors="replace")
        if v.data.isascii() and text.isprintable() and '"' not in text and "\\" not in text:
            return f'opaque("{text}")'
        return f'opaque_hex("{v.data.hex()}")'
    raise TypeError(f"not a Value: {v!r}")
