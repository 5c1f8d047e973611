"""Lowering annotated sequential program fragments to program nets.

A fragment is a state-machine graph: nodes are program points, edges are
statements.  Lowering replaces each node by a unit place and each edge by
a transition, threads a single control token through them, and adds one
memory place holding a record of every program variable.  Annotations
splice put/wait/get chains between a statement and its successor, wiring
the program to the communication net.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from . import exprs as E
from . import netmodel as N
from . import values as V
from .errors import DuplicateLabel, InvalidFragment, UnknownPlace
from .parsing import TokenStream, tokenize, _expr as _parse_expr

MEMORY_VAR = "M"


# ---------------------------------------------------------------------------
# directives and annotations

@dataclass(frozen=True, slots=True)
class Put:
    place: str
    expr: E.Expression


@dataclass(frozen=True, slots=True)
class Wait:
    place: str


@dataclass(frozen=True, slots=True)
class Get:
    """Bulk read of a place's entire content into a variable; the optional
    count expression gates firing on the number of tokens taken.
    """

    place: str
    var: str
    count: Optional[E.Expression] = None


@dataclass(frozen=True, slots=True)
class Take:
    """Consume one token matching the conditions; used for waiting on a
    specific request id where a bulk get cannot filter.
    """

    place: str
    var: str
    conditions: tuple[E.Expression, ...] = ()


Directive = object  # Put | Wait | Get | Take


@dataclass(frozen=True, slots=True)
class Annotation:
    label: str
    directives: tuple


# ---------------------------------------------------------------------------
# fragment graphs

@dataclass(frozen=True, slots=True)
class AssignEdge:
    src: int
    dst: int
    var: str
    expr: E.Expression
    annotation: Optional[Annotation] = None


@dataclass(frozen=True, slots=True)
class BranchEdge:
    src: int
    dst: int
    cond: E.Expression


@dataclass(frozen=True, slots=True)
class NoopEdge:
    src: int
    dst: int
    annotation: Optional[Annotation] = None


@dataclass
class Fragment:
    """Statement graph plus the initial values of program variables."""

    entry: int = 0
    exit: int = 0
    next_node: int = 1
    edges: list = field(default_factory=list)
    params: dict = field(default_factory=dict)
    source_text: Optional[str] = None

    def node(self) -> int:
        n = self.next_node
        self.next_node += 1
        return n

    def assign(self, src, dst, var, expr, annotation=None):
        self.edges.append(AssignEdge(src, dst, var, expr, annotation))

    def branch(self, src, dst, cond):
        self.edges.append(BranchEdge(src, dst, cond))

    def noop(self, src, dst, annotation=None):
        self.edges.append(NoopEdge(src, dst, annotation))

    def variables(self) -> list[str]:
        out = set(self.params)
        for e in self.edges:
            if isinstance(e, AssignEdge):
                out.add(e.var)
            ann = getattr(e, "annotation", None)
            if ann:
                for d in ann.directives:
                    if isinstance(d, (Get, Take)):
                        out.add(d.var)
        return sorted(out)

    def check(self):
        if MEMORY_VAR in self.variables():
            raise InvalidFragment(f"'{MEMORY_VAR}' is reserved for the memory record")
        labels = set()
        for e in self.edges:
            ann = getattr(e, "annotation", None)
            if ann:
                if ann.label in labels:
                    raise DuplicateLabel(ann.label)
                labels.add(ann.label)
        out_edges: dict[int, list] = {}
        nodes = {self.entry, self.exit}
        for e in self.edges:
            nodes.add(e.src)
            nodes.add(e.dst)
            out_edges.setdefault(e.src, []).append(e)
        for n, edges in out_edges.items():
            branches = [e for e in edges if isinstance(e, BranchEdge)]
            if branches and len(branches) != len(edges):
                raise InvalidFragment(f"node {n} mixes branch and plain edges")
            if not branches and len(edges) > 1:
                raise InvalidFragment(f"node {n} has several unconditional edges")
        if self.exit in out_edges:
            raise InvalidFragment("exit node has outgoing edges")
        seen = {self.entry}
        frontier = [self.entry]
        while frontier:
            n = frontier.pop()
            for e in out_edges.get(n, ()):
                if e.dst not in seen:
                    seen.add(e.dst)
                    frontier.append(e.dst)
        unreachable = nodes - seen
        if unreachable:
            raise InvalidFragment(f"unreachable nodes {sorted(unreachable)}")


# ---------------------------------------------------------------------------
# lowering

@dataclass
class ProgramNet:
    """Handles into the area net for the lowered fragment."""

    entry_place: N.Place
    exit_place: N.Place
    memory_place: N.Place
    edge_transitions: list[N.Transition]


def _subst(e: E.Expression, fields: set[str], exclude=frozenset()) -> E.Expression:
    """Rewrite program-variable reads into memory-record field accesses."""
    if isinstance(e, E.Var):
        if e.name in fields and e.name not in exclude:
            return E.FieldAccess(E.Var(MEMORY_VAR), e.name)
        return e
    if isinstance(e, E.Lit):
        return e
    if isinstance(e, E.BinOp):
        return E.BinOp(e.op, _subst(e.left, fields, exclude),
                       _subst(e.right, fields, exclude))
    if isinstance(e, E.Not):
        return E.Not(_subst(e.operand, fields, exclude))
    if isinstance(e, E.TupleExpr):
        return E.TupleExpr(tuple(_subst(x, fields, exclude) for x in e.items))
    if isinstance(e, E.RecordExpr):
        return E.RecordExpr(tuple((f, _subst(x, fields, exclude))
                                  for f, x in e.fields))
    if isinstance(e, E.FieldAccess):
        return E.FieldAccess(_subst(e.base, fields, exclude), e.name)
    if isinstance(e, E.IndexAccess):
        return E.IndexAccess(_subst(e.base, fields, exclude), e.index)
    if isinstance(e, E.IfExpr):
        return E.IfExpr(_subst(e.cond, fields, exclude),
                        _subst(e.then, fields, exclude),
                        _subst(e.orelse, fields, exclude))
    if isinstance(e, E.Call):
        return E.Call(e.func, tuple(_subst(x, fields, exclude) for x in e.args))
    raise TypeError(e)


def _memory_update(fields: list[str], assigned: dict[str, E.Expression]) -> E.Expression:
    """Record expression rebuilding the memory token, with some fields
    replaced; unassigned fields are copied through from M.
    """
    pairs = []
    for f in fields:
        if f in assigned:
            pairs.append((f, assigned[f]))
        else:
            pairs.append((f, E.FieldAccess(E.Var(MEMORY_VAR), f)))
    return E.RecordExpr(tuple(pairs))


_UNIT_PATTERN = (E.Lit(V.UNIT),)


def _unit_in(cn, place, transition):
    cn.arc(place, transition, N.IN, E.InputArcExpr(pattern=_UNIT_PATTERN))


def _unit_out(cn, transition, place):
    cn.arc(transition, place, N.OUT, E.OutputArcExpr(pattern=_UNIT_PATTERN))


def to_program_net(f: Fragment, cn: N.CommunicationNet) -> ProgramNet:
    """Build the program net for ``f`` inside ``cn`` and splice every
    annotation's directive chain.
    """
    f.check()
    fields = f.variables()
    field_set = set(fields)

    places = {}
    for n in sorted({f.entry, f.exit}
                    | {e.src for e in f.edges} | {e.dst for e in f.edges}):
        if n == f.entry:
            name, marking = "entry", (V.UNIT,)
        elif n == f.exit:
            name, marking = "exit", ()
        else:
            name, marking = f"p{n}", ()
        places[n] = cn.place(name, N.MULTISET, N.UNIT_COLOR, marking=marking)

    initial = V.Record(tuple(
        (name, f.params.get(name, V.UNIT)) for name in fields))
    memory = cn.place("mem", N.MULTISET, N.ColorSet("record"), marking=(initial,))

    mem_var = (E.Var(MEMORY_VAR),)
    transitions = []
    for k, e in enumerate(f.edges):
        t = cn.transition(f"e{k}")
        transitions.append(t)
        _unit_in(cn, places[e.src], t)
        _unit_out(cn, t, places[e.dst])
        if isinstance(e, AssignEdge):
            update = _memory_update(fields, {e.var: _subst(e.expr, field_set)})
            cn.arc(memory, t, N.IN, E.InputArcExpr(pattern=mem_var))
            cn.arc(t, memory, N.OUT, E.OutputArcExpr(pattern=(update,)))
        elif isinstance(e, BranchEdge):
            cond = _subst(e.cond, field_set)
            cn.arc(memory, t, N.IN,
                   E.InputArcExpr(conditions=(cond,), pattern=mem_var))
            cn.arc(t, memory, N.OUT, E.OutputArcExpr(pattern=mem_var))
        else:
            cn.arc(memory, t, N.IN, E.InputArcExpr(pattern=mem_var))
            cn.arc(t, memory, N.OUT, E.OutputArcExpr(pattern=mem_var))
        ann = getattr(e, "annotation", None)
        if ann is not None:
            apply_directives(cn, t, ann, memory, fields)

    return ProgramNet(places[f.entry], places[f.exit], memory, transitions)


def _control_output(cn: N.CommunicationNet, transition: N.Transition,
                    memory_id: str) -> N.Arc:
    outs = [a for a in cn.arcs
            if a.source == transition.id and a.category == N.OUT
            and a.target != memory_id
            and cn.places.get(a.target) is not None
            and cn.places[a.target].colorset == N.UNIT_COLOR]
    if len(outs) != 1:
        raise InvalidFragment(
            f"{transition.id} has {len(outs)} control outputs, expected 1")
    return outs[0]


def apply_directives(cn: N.CommunicationNet, transition: N.Transition,
                     a: Annotation, memory: N.Place, fields: list[str]) -> None:
    """Expand an annotation behind ``transition``.

    Each directive contributes one unit place and one transition, spliced
    into the control chain in directive order; the chain ends where the
    original control arc pointed.
    """
    if transition.id not in cn.transitions:
        raise UnknownPlace(transition.id)
    field_set = set(fields)
    tail_arc = _control_output(cn, transition, memory.id)
    final_target = tail_arc.target
    cn.arcs.remove(tail_arc)

    def resolve(name):
        pid = f"{cn.name}.{name}"
        if pid not in cn.places:
            raise UnknownPlace(name)
        return cn.places[pid]

    prev = transition
    kind_counts: dict[str, int] = {}
    mem_var = (E.Var(MEMORY_VAR),)
    for i, d in enumerate(a.directives):
        link = cn.place(f"{a.label}.c{i + 1}", N.MULTISET, N.UNIT_COLOR)
        _unit_out(cn, prev, link)
        kind = type(d).__name__.lower()
        kind_counts[kind] = kind_counts.get(kind, 0) + 1
        suffix = kind if kind_counts[kind] == 1 else f"{kind}{kind_counts[kind]}"
        t = cn.transition(f"{a.label}.{suffix}")
        _unit_in(cn, link, t)
        target = resolve(d.place)

        if isinstance(d, Put):
            cn.arc(memory, t, N.IN, E.InputArcExpr(pattern=mem_var))
            cn.arc(t, memory, N.OUT, E.OutputArcExpr(pattern=mem_var))
            cn.arc(t, target, N.OUT,
                   E.OutputArcExpr(pattern=(_subst(d.expr, field_set),)))
        elif isinstance(d, Wait):
            if target.kind == N.QUEUING:
                cn.arc(target, t, N.QIN_DOUBLE_RO,
                       E.InputArcExpr(pattern=(E.Var(E.ANON),)))
            else:
                watch = E.Var(f"_w_{a.label}")
                cn.arc(target, t, N.IN, E.InputArcExpr(pattern=(watch,)))
                cn.arc(t, target, N.OUT, E.OutputArcExpr(pattern=(watch,)))
        elif isinstance(d, Get):
            size_var = f"_n_{d.var}"
            conds = ()
            if d.count is not None:
                conds = (E.BinOp("=", E.Var(size_var),
                                 _subst(d.count, field_set)),)
            cn.arc(target, t,
                   N.QIN_DOUBLE if target.kind == N.QUEUING else N.IN,
                   E.InputArcExpr(conditions=conds, pattern=(E.Var(E.ANON),),
                                  size=size_var, values_var=d.var))
            update = _memory_update(fields, {d.var: E.Var(d.var)})
            cn.arc(memory, t, N.IN, E.InputArcExpr(pattern=mem_var))
            cn.arc(t, memory, N.OUT, E.OutputArcExpr(pattern=(update,)))
        elif isinstance(d, Take):
            conds = tuple(_subst(c, field_set, exclude={d.var})
                          for c in d.conditions)
            cn.arc(target, t,
                   N.QIN_DOUBLE if target.kind == N.QUEUING else N.IN,
                   E.InputArcExpr(conditions=conds, pattern=(E.Var(d.var),)))
            update = _memory_update(fields, {d.var: E.Var(d.var)})
            cn.arc(memory, t, N.IN, E.InputArcExpr(pattern=mem_var))
            cn.arc(t, memory, N.OUT, E.OutputArcExpr(pattern=(update,)))
        else:
            raise TypeError(f"unknown directive {d!r}")
        prev = t

    _unit_out(cn, prev, final_target)


# ---------------------------------------------------------------------------
# surface syntax for annotated fragment files

@dataclass(frozen=True, slots=True)
class PlaceDecl:
    name: str
    queuing: bool = False
    compound: Optional[str] = None


def parse_fragment(text: str) -> tuple[Fragment, list[PlaceDecl]]:
    """Parse a fragment file: optional ``place`` declarations followed by
    `;`-terminated statements with optional ``@LABEL [directives]``
    annotations.
    """
    ts = TokenStream(tokenize(text))
    decls = []
    while ts.at("place"):
        ts.advance()
        name = ts.expect_kind("ident", "place name").text
        queuing = bool(ts.accept("queuing"))
        compound = None
        if ts.accept("compound"):
            compound = ts.expect_kind("ident", "compound label").text
        ts.expect(";")
        decls.append(PlaceDecl(name, queuing, compound))

    f = Fragment(source_text=text)
    f.entry = 0
    current = f.entry
    current = _parse_statements(ts, f, current, stop_at_brace=False)
    f.exit = current
    f.check()
    return f, decls


def _parse_statements(ts, f, current, stop_at_brace):
    while True:
        tok = ts.peek()
        if tok.kind == "eof":
            if stop_at_brace:
                ts.fail("unexpected end of input", {"'}'"})
            return current
        if stop_at_brace and ts.at("}"):
            return current
        current = _parse_statement(ts, f, current)


def _parse_statement(ts, f, current):
    if ts.at("if"):
        ts.advance()
        ts.expect("(")
        cond = _parse_expr(ts)
        ts.expect(")")
        then_start = f.node()
        f.branch(current, then_start, cond)
        ts.expect("{")
        then_end = _parse_statements(ts, f, then_start, stop_at_brace=True)
        ts.expect("}")
        join = f.node()
        f.noop(then_end, join)
        if ts.accept("else"):
            else_start = f.node()
            f.branch(current, else_start, E.Not(cond))
            ts.expect("{")
            else_end = _parse_statements(ts, f, else_start, stop_at_brace=True)
            ts.expect("}")
            f.noop(else_end, join)
        else:
            f.branch(current, join, E.Not(cond))
        return join
    if ts.at("for"):
        ts.advance()
        ts.expect("(")
        var = ts.expect_kind("ident", "loop variable").text
        ts.expect("=")
        init = _parse_expr(ts)
        ts.expect(";")
        cond = _parse_expr(ts)
        ts.expect(";")
        update_var = ts.expect_kind("ident", "loop variable").text
        ts.expect("=")
        update = _parse_expr(ts)
        ts.expect(")")
        head = f.node()
        f.assign(current, head, var, init)
        body_start = f.node()
        f.branch(head, body_start, cond)
        done = f.node()
        f.branch(head, done, E.Not(cond))
        ts.expect("{")
        body_end = _parse_statements(ts, f, body_start, stop_at_brace=True)
        ts.expect("}")
        f.assign(body_end, head, update_var, update)
        return done
    if ts.at("skip"):
        ts.advance()
        ann = _parse_annotation(ts)
        ts.expect(";")
        nxt = f.node()
        f.noop(current, nxt, ann)
        return nxt
    var_tok = ts.expect_kind("ident", "statement")
    ts.expect("=")
    expr = _parse_expr(ts)
    ann = _parse_annotation(ts)
    ts.expect(";")
    nxt = f.node()
    f.assign(current, nxt, var_tok.text, expr, ann)
    return nxt


def _parse_annotation(ts) -> Optional[Annotation]:
    if not ts.accept("@"):
        return None
    label = ts.expect_kind("ident", "annotation label").text
    ts.expect("[")
    directives = [_parse_directive(ts)]
    while ts.accept(","):
        directives.append(_parse_directive(ts))
    ts.expect("]")
    return Annotation(label, tuple(directives))


def _parse_directive(ts):
    kind = ts.expect_kind("ident", "directive").text
    ts.expect("(")
    place = ts.expect_kind("ident", "place name").text
    if kind == "put":
        ts.expect("=")
        expr = _parse_expr(ts)
        ts.expect(")")
        return Put(place, expr)
    if kind == "wait":
        ts.expect(")")
        return Wait(place)
    if kind == "get":
        ts.expect("->")
        var = ts.expect_kind("ident", "variable").text
        ts.expect(")")
        return Get(place, var)
    ts.fail(f"unknown directive '{kind}'", {"put", "wait", "get"})


def build_fragment_area(net: N.MPNet, address: int, text: str,
                        name: Optional[str] = None) -> N.Area:
    """One fragment file becomes one addressable area: declared places
    first, auto-declared multiset places for any other directive target,
    then the lowered program net.
    """
    f, decls = parse_fragment(text)
    area = net.new_area(address, name, fragment_text=text)
    for d in decls:
        area.net.place(d.name, N.QUEUING if d.queuing else N.MULTISET,
                       N.ANY_COLORS, compound=d.compound)
    for e in f.edges:
        ann = getattr(e, "annotation", None)
        if ann:
            for d in ann.directives:
                pid = f"{area.net.name}.{d.place}"
                if pid not in area.net.places:
                    area.net.place(d.place, N.MULTISET, N.ANY_COLORS)
    to_program_net(f, area.net)
    return area
