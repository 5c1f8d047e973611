"""MPI-like mini-language frontend.

Parses small message-passing programs, expands every point-to-point call
into its two-part request/completion block, attaches the generic message
broker area and yields a complete multi-area net for ``n`` ranks.

Envelope model: requests and completions are records flowing through a
single compound queuing place ``ASR`` (all active send/receive requests)
and per-rank multiset completion places ``CSR``/``CRR``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from importlib import resources
from typing import Optional, Union

from . import engine as EN
from . import exprs as E
from . import fragments as F
from . import netmodel as N
from . import values as V
from .errors import FrontendError, ParseError, RankCountTooSmall, UnknownVariable
from .parsing import TokenStream, tokenize, _expr as _parse_expr

OP_SEND = 0
OP_RECV = 1

ASR = "ASR"     # active send/receive requests (compound, queuing)
CSR = "CSR"     # completed send requests (local, multiset)
CRR = "CRR"     # completed receive requests (local, multiset)

SIZE_VAR = "size"

REQUEST_COLORS = N.ColorSet("record", ("op", "source", "destination", "tag", "reqId"))
COMPLETION_COLORS = N.ColorSet("record", ("reqId", "actualSource"))


# ---------------------------------------------------------------------------
# request/completion records

@dataclass(frozen=True, slots=True)
class RequestToken:
    op: str                       # 'send' | 'recv'
    source: Optional[int]         # None encodes the ANY wildcard
    destination: int
    tag: int
    req_id: int
    data: Optional[V.Value] = None

    def __post_init__(self):
        if self.op == "send" and (self.source is None or self.data is None):
            raise ValueError("send requests carry a concrete source and data")

    def to_value(self) -> V.Record:
        fields = [("op", V.Nat(OP_SEND if self.op == "send" else OP_RECV)),
                  ("source", V.ANY if self.source is None else V.Nat(self.source)),
                  ("destination", V.Nat(self.destination)),
                  ("tag", V.Nat(self.tag)),
                  ("reqId", V.Nat(self.req_id))]
        if self.data is not None:
            fields.append(("data", self.data))
        return V.Record(tuple(fields))


@dataclass(frozen=True, slots=True)
class CompletionToken:
    req_id: int
    actual_source: int
    data: Optional[V.Value] = None

    def to_value(self) -> V.Record:
        fields = [("reqId", V.Nat(self.req_id)),
                  ("actualSource", V.Nat(self.actual_source))]
        if self.data is not None:
            fields.append(("data", self.data))
        return V.Record(tuple(fields))


def match(s: RequestToken, r: RequestToken) -> bool:
    """MPI envelope pairing: destination and tag agree, and the receive
    names the sender or uses the ANY wildcard.
    """
    if s.op != "send" or r.op != "recv":
        return False
    return (s.destination == r.destination and s.tag == r.tag
            and (r.source is None or r.source == s.source))


# ---------------------------------------------------------------------------
# program AST

@dataclass(frozen=True, slots=True)
class Span:
    line: int
    column: int


@dataclass(frozen=True, slots=True)
class Assign:
    var: str
    expr: E.Expression
    span: Span


@dataclass(frozen=True, slots=True)
class If:
    cond: E.Expression
    then: tuple
    orelse: tuple
    span: Span


@dataclass(frozen=True, slots=True)
class For:
    var: str
    init: E.Expression
    cond: E.Expression
    update_var: str
    update: E.Expression
    body: tuple
    span: Span


@dataclass(frozen=True, slots=True)
class CallStmt:
    kind: str                     # send recv isend irecv wait waitall
    args: tuple                   # ((name, expr), ...)
    out: Optional[str] = None
    handle: Optional[str] = None
    span: Span = Span(0, 0)

    def arg(self, name) -> E.Expression:
        for k, v in self.args:
            if k == name:
                return v
        raise KeyError(name)


@dataclass
class MpiProgram:
    name: str
    rank_var: str
    body: tuple
    source_text: str = ""


_CALL_ARGS = {
    "send": ("data", "dest", "tag"),
    "recv": ("src", "tag"),
    "isend": ("data", "dest", "tag"),
    "irecv": ("src", "tag"),
}


def parse_program(text: str) -> MpiProgram:
    ts = TokenStream(tokenize(text))
    if not ts.accept("program"):
        ts.fail("expected 'program'", {"program"})
    name = ts.expect_kind("ident", "program name").text
    ts.expect("(")
    rank_var = ts.expect_kind("ident", "rank parameter").text
    ts.expect(")")
    ts.expect("{")
    body = _stmts(ts)
    ts.expect("}")
    if ts.peek().kind != "eof":
        ts.fail("trailing input", {"end of input"})
    if rank_var in (SIZE_VAR, F.MEMORY_VAR):
        raise FrontendError(f"rank parameter may not be named '{rank_var}'")
    return MpiProgram(name, rank_var, tuple(body), text)


def _stmts(ts) -> list:
    out = []
    while not ts.at("}") and ts.peek().kind != "eof":
        out.append(_stmt(ts))
    return out


def _stmt(ts):
    tok = ts.peek()
    span = Span(tok.line, tok.column)
    if ts.at("if"):
        ts.advance()
        ts.expect("(")
        cond = _parse_expr(ts)
        ts.expect(")")
        ts.expect("{")
        then = tuple(_stmts(ts))
        ts.expect("}")
        orelse = ()
        if ts.accept("else"):
            ts.expect("{")
            orelse = tuple(_stmts(ts))
            ts.expect("}")
        return If(cond, then, orelse, span)
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
        ts.expect("{")
        body = tuple(_stmts(ts))
        ts.expect("}")
        return For(var, init, cond, update_var, update, body, span)
    name = ts.expect_kind("ident", "statement").text
    if ts.at("("):
        stmt = _call(ts, name, span)
        ts.expect(";")
        return stmt
    ts.expect("=")
    expr = _parse_expr(ts)
    ts.expect(";")
    return Assign(name, expr, span)


def _call(ts, kind, span):
    if kind not in ("send", "recv", "isend", "irecv", "wait", "waitall"):
        ts.fail(f"unknown call '{kind}'",
                {"send", "recv", "isend", "irecv", "wait", "waitall"})
    ts.expect("(")
    if kind in ("wait", "waitall"):
        expr = _parse_expr(ts)
        ts.expect(")")
        return CallStmt(kind, (("request", expr),), span=span)
    args = []
    out = None
    if not ts.at(")"):
        while True:
            arg_name = ts.expect_kind("ident", "argument name").text
            ts.expect("=")
            expr = _parse_expr(ts)
            if arg_name == "out":
                if not isinstance(expr, E.Var):
                    ts.fail("out argument must be a variable")
                out = expr.name
            else:
                args.append((arg_name, expr))
            if not ts.accept(","):
                break
    ts.expect(")")
    handle = None
    if ts.accept("->"):
        handle = ts.expect_kind("ident", "request variable").text
    required = set(_CALL_ARGS[kind])
    given = {k for k, _ in args}
    missing = required - given
    if missing:
        raise ParseError(f"{kind}() missing argument '{sorted(missing)[0]}'",
                         span.line, span.column, required)
    extra = given - required
    if extra:
        raise ParseError(f"{kind}() has no argument '{sorted(extra)[0]}'",
                         span.line, span.column, required)
    if kind in ("recv", "irecv") and out is None:
        raise ParseError(f"{kind}() missing argument 'out'",
                         span.line, span.column, {"out"})
    if kind in ("isend", "irecv") and handle is None:
        raise ParseError(f"{kind}() must bind a request variable with '->'",
                         span.line, span.column, {"->"})
    return CallStmt(kind, tuple(args), out, handle, span)


# ---------------------------------------------------------------------------
# expansion

@dataclass
class _ExpandCtx:
    rank_var: str
    labels: dict = field(default_factory=dict)
    handles: dict = field(default_factory=dict)   # handle var -> 'send'|'recv'

    def label(self, kind) -> str:
        n = self.labels.get(kind, 0)
        self.labels[kind] = n + 1
        return f"{kind}{n}"


def _collect_assigned(stmts, out):
    for s in stmts:
        if isinstance(s, Assign):
            out.add(s.var)
        elif isinstance(s, If):
            _collect_assigned(s.then, out)
            _collect_assigned(s.orelse, out)
        elif isinstance(s, For):
            out.add(s.var)
            out.add(s.update_var)
            _collect_assigned(s.body, out)


def program_fragment(p: MpiProgram, rank: int, n: int) -> F.Fragment:
    """Per-rank fragment: the program body with every MPI call expanded
    into request-counter bookkeeping plus an annotated no-op carrying the
    put/wait/get directives.
    """
    ctx = _ExpandCtx(p.rank_var)
    f = F.Fragment(source_text=p.source_text)
    assigned = set()
    _collect_assigned(p.body, assigned)
    if p.rank_var in assigned or SIZE_VAR in assigned:
        raise FrontendError(f"'{p.rank_var}' and '{SIZE_VAR}' are read-only")
    end = _lower_stmts(f, p.body, f.entry, ctx)
    f.exit = end
    f.params = {p.rank_var: V.Nat(rank), SIZE_VAR: V.Nat(n), "_rc": V.Nat(0)}
    for h in ctx.handles:
        f.params[f"_cnt_{h}"] = V.Nat(0)
    return f


def _lower_stmts(f, stmts, current, ctx):
    for s in stmts:
        current = _lower_stmt(f, s, current, ctx)
    return current


def _lower_stmt(f, s, current, ctx):
    if isinstance(s, Assign):
        nxt = f.node()
        f.assign(current, nxt, s.var, s.expr)
        return nxt
    if isinstance(s, If):
        then_start = f.node()
        f.branch(current, then_start, s.cond)
        then_end = _lower_stmts(f, s.then, then_start, ctx)
        join = f.node()
        f.noop(then_end, join)
        if s.orelse:
            else_start = f.node()
            f.branch(current, else_start, E.Not(s.cond))
            else_end = _lower_stmts(f, s.orelse, else_start, ctx)
            f.noop(else_end, join)
        else:
            f.branch(current, join, E.Not(s.cond))
        return join
    if isinstance(s, For):
        head = f.node()
        f.assign(current, head, s.var, s.init)
        body_start = f.node()
        f.branch(head, body_start, s.cond)
        done = f.node()
        f.branch(head, done, E.Not(s.cond))
        body_end = _lower_stmts(f, s.body, body_start, ctx)
        f.assign(body_end, head, s.update_var, s.update)
        return done
    if isinstance(s, CallStmt):
        return _lower_call(f, s, current, ctx)
    raise TypeError(s)


def _fresh_request(f, current, label, record_fields):
    """Assign the next request id to a label-scoped variable and bump the
    per-area counter; returns (node, rid variable, request record expr).
    """
    rid = f"_rid_{label}"
    n1 = f.node()
    f.assign(current, n1, rid, E.Var("_rc"))
    n2 = f.node()
    f.assign(n1, n2, "_rc", E.BinOp("+", E.Var("_rc"), E.lit(1)))
    record = E.RecordExpr(tuple(record_fields + [("reqId", E.Var(rid))]))
    return n2, rid, record


def _lower_call(f, s, current, ctx):
    if s.kind == "send" or s.kind == "isend":
        label = ctx.label("s")
        fields = [("op", E.lit(OP_SEND)),
                  ("source", E.Var(ctx.rank_var)),
                  ("destination", s.arg("dest")),
                  ("tag", s.arg("tag")),
                  ("data", s.arg("data"))]
    else:
        label = ctx.label("r") if s.kind in ("recv", "irecv") else None
        if label is not None:
            fields = [("op", E.lit(OP_RECV)),
                      ("source", s.arg("src")),
                      ("destination", E.Var(ctx.rank_var)),
                      ("tag", s.arg("tag"))]

    if s.kind == "send":
        node, _rid, record = _fresh_request(f, current, label, fields)
        nxt = f.node()
        f.noop(node, nxt, F.Annotation(label, (
            F.Put(ASR, record),
            F.Wait(CSR),
            F.Get(CSR, f"_ack_{label}", count=E.lit(1)))))
        return nxt
    if s.kind == "recv":
        node, _rid, record = _fresh_request(f, current, label, fields)
        cvar = f"_c_{label}"
        mid = f.node()
        f.noop(node, mid, F.Annotation(label, (
            F.Put(ASR, record),
            F.Wait(CRR),
            F.Get(CRR, cvar, count=E.lit(1)))))
        nxt = f.node()
        f.assign(mid, nxt, s.out,
                 E.FieldAccess(E.IndexAccess(E.Var(cvar), 1), "data"))
        return nxt
    if s.kind in ("isend", "irecv"):
        kind = "send" if s.kind == "isend" else "recv"
        prior = ctx.handles.setdefault(s.handle, kind)
        if prior != kind:
            raise FrontendError(
                f"request variable '{s.handle}' mixes send and receive requests")
        node, rid, record = _fresh_request(f, current, label, fields)
        mid = f.node()
        f.noop(node, mid, F.Annotation(label, (F.Put(ASR, record),)))
        n3 = f.node()
        f.assign(mid, n3, s.handle, E.Var(rid))
        nxt = f.node()
        cnt = f"_cnt_{s.handle}"
        f.assign(n3, nxt, cnt, E.BinOp("+", E.Var(cnt), E.lit(1)))
        return nxt
    if s.kind == "wait":
        expr = s.arg("request")
        place = _completion_place(expr, ctx)
        label = ctx.label("w")
        cvar = f"_c_{label}"
        cond = E.BinOp("=", E.FieldAccess(E.Var(cvar), "reqId"), expr)
        nxt = f.node()
        f.noop(current, nxt, F.Annotation(label, (
            F.Take(place, cvar, (cond,)),)))
        return nxt
    if s.kind == "waitall":
        expr = s.arg("request")
        if not isinstance(expr, E.Var):
            raise FrontendError("waitall takes a request variable")
        place = _completion_place(expr, ctx)
        label = ctx.label("w")
        nxt = f.node()
        f.noop(current, nxt, F.Annotation(label, (
            F.Wait(place),
            F.Get(place, f"_done_{label}", count=E.Var(f"_cnt_{expr.name}")))))
        return nxt
    raise TypeError(s.kind)


def _completion_place(expr, ctx) -> str:
    handles = [v for v in E.free_vars(expr) if v in ctx.handles]
    if len(handles) != 1:
        raise UnknownVariable(E.pretty(expr))
    return CSR if ctx.handles[handles[0]] == "send" else CRR


def _rank_area(net: N.MPNet, p: MpiProgram, rank: int, n: int) -> None:
    area = net.new_area(rank, fragment_text=p.source_text)
    area.net.place(ASR, N.QUEUING, REQUEST_COLORS, compound=ASR)
    area.net.place(CSR, N.MULTISET, COMPLETION_COLORS)
    area.net.place(CRR, N.MULTISET, COMPLETION_COLORS)
    fragment = program_fragment(p, rank, n)
    F.to_program_net(fragment, area.net)
    _decorate_call_blocks(area.net)


def _decorate_call_blocks(cn: N.CommunicationNet) -> None:
    """Control-flow arcs from each request put to the wait of the same
    annotation: informative only, removed when flattening.
    """
    for t in list(cn.transitions.values()):
        if not t.name.endswith(".put"):
            continue
        label = t.name.rsplit(".", 1)[0]
        wait_id = f"{cn.name}.{label}.wait"
        take_id = f"{cn.name}.{label}.take"
        target = cn.transitions.get(wait_id) or cn.transitions.get(take_id)
        if target is not None:
            cn.arc(t, target, N.CF)


def broker_area(net: N.MPNet, address: int) -> N.Area:
    """The generic message broker: one transition pairing a send request
    with a matching receive request, routing completions back by address.
    """
    area = net.new_area(address, "broker")
    asr = area.net.place(ASR, N.QUEUING, REQUEST_COLORS, compound=ASR)
    csr = area.net.place(CSR, N.MULTISET, COMPLETION_COLORS)
    crr = area.net.place(CRR, N.MULTISET, COMPLETION_COLORS)

    s, r = E.Var("s"), E.Var("r")
    s_field = lambda name: E.FieldAccess(s, name)
    r_field = lambda name: E.FieldAccess(r, name)
    pair = area.net.transition("pair", events=(
        ("send_complete", E.RecordExpr((
            ("source", s_field("source")),
            ("destination", s_field("destination")),
            ("tag", s_field("tag")),
            ("reqId", s_field("reqId"))))),
        ("recv_complete", E.RecordExpr((
            ("source", s_field("source")),
            ("destination", r_field("destination")),
            ("tag", r_field("tag")),
            ("sendReqId", s_field("reqId")),
            ("recvReqId", r_field("reqId"))))),
    ))
    area.net.arc(asr, pair, N.QIN_DOUBLE, E.InputArcExpr(
        conditions=(E.BinOp("=", s_field("op"), E.lit(OP_SEND)),),
        pattern=(s,)))
    area.net.arc(asr, pair, N.QIN_DOUBLE, E.InputArcExpr(
        conditions=(E.BinOp("=", r_field("op"), E.lit(OP_RECV)),
                    E.BinOp("=", s_field("destination"), r_field("destination")),
                    E.BinOp("=", s_field("tag"), r_field("tag")),
                    E.BinOp("=", r_field("source"), s_field("source"))),
        pattern=(r,)))
    area.net.arc(pair, csr, N.OUT, E.OutputArcExpr(
        pattern=(E.RecordExpr((
            ("reqId", s_field("reqId")),
            ("actualSource", s_field("source")))),),
        location=s_field("source")))
    area.net.arc(pair, crr, N.OUT, E.OutputArcExpr(
        pattern=(E.RecordExpr((
            ("reqId", r_field("reqId")),
            ("actualSource", s_field("source")),
            ("data", s_field("data")))),),
        location=r_field("destination")))
    return area


def expand(p: MpiProgram, n: int) -> N.MPNet:
    """MP net for ``p`` on ranks 0..n-1 plus the broker at address n."""
    if n < 2:
        raise RankCountTooSmall(n)
    net = N.MPNet()
    for rank in range(n):
        _rank_area(net, p, rank, n)
    broker_area(net, n)
    return net


# ---------------------------------------------------------------------------
# property helpers on expanded nets

def exit_place_ids(flat: N.FlatNet) -> list[str]:
    return sorted(pid for pid, p in flat.places.items()
                  if N.base_name(p.name) == "exit")


def comm_place_ids(flat: N.FlatNet) -> list[str]:
    return sorted(pid for pid, p in flat.places.items()
                  if N.base_name(p.name) in (ASR, CSR, CRR))


def is_terminal_marking(engine: EN.Engine, state: EN.SimState) -> bool:
    """All program fragments at their exit place and every communication
    place drained.
    """
    for pid in exit_place_ids(engine.flat):
        if engine.pool_of(state, engine.place_index[pid]) != ((V.UNIT, 1),):
            return False
    for pid in comm_place_ids(engine.flat):
        idx = engine.place_index[pid]
        entry = state.entries[idx]
        if engine.queuing[idx]:
            if entry[0] or entry[1]:
                return False
        elif entry:
            return False
    return True


def live_requests(engine: EN.Engine, state: EN.SimState, op: int) -> int:
    """Tokens with the given op currently in the request place, queued or
    already serviced.
    """
    total = 0
    for pid, p in engine.flat.places.items():
        if N.base_name(p.name) != ASR:
            continue
        idx = engine.place_index[pid]
        queue, dep = state.entries[idx]
        for v in queue:
            if isinstance(v, V.Record) and v.get("op") == V.Nat(op):
                total += 1
        for v, c in dep:
            if isinstance(v, V.Record) and v.get("op") == V.Nat(op):
                total += c
    return total


def check_non_overtaking(graph: EN.StateGraph) -> bool:
    """Along every maximal path, completions that share an envelope occur
    in request order (request ids are per-area counters, so both the send
    and the receive id sequences must increase per envelope).
    """

    def project(ev):
        label, value = ev
        if label != "recv_complete" or not isinstance(value, V.Record):
            return None
        return (value.get("source").n, value.get("destination").n,
                value.get("tag").n, value.get("sendReqId").n,
                value.get("recvReqId").n)

    for sequence in EN.event_sequences(graph, project):
        last: dict[tuple, tuple] = {}
        for source, dest, tag, send_id, recv_id in sequence:
            envelope = (source, dest, tag)
            if envelope in last:
                prev_send, prev_recv = last[envelope]
                if send_id <= prev_send or recv_id <= prev_recv:
                    return False
            last[envelope] = (send_id, recv_id)
    return True


# ---------------------------------------------------------------------------
# bundled example programs

EXAMPLES = ("allsendone_v1", "allsendone_v2", "allsendone_v3")
_ALIASES = {"v1": "allsendone_v1", "v2": "allsendone_v2", "v3": "allsendone_v3"}


def example_source(name: str) -> str:
    name = _ALIASES.get(name, name)
    if name not in EXAMPLES:
        raise KeyError(name)
    return (resources.files("mpnet") / "programs" / f"{name}.mpl").read_text()


def build_example(name: str, n: int) -> N.MPNet:
    return expand(parse_program(example_source(name)), n)
