"""Execution engine for flattened nets.

States are immutable snapshots kept in *scheduling normal form*: after
the initial marking and after every firing, each queuing place's
scheduling fixpoint has already run, so enabledness is a pure function of
the depositories.  Binding search matches input-arc patterns left to
right; firing consumes the selected tokens (read-only selections stay),
evaluates output arcs and enqueues/deposits the results.

The net is compiled once into flat index-based structures; candidate
enumeration and firing avoid repeated expression analysis.
"""

from __future__ import annotations

import hashlib
import itertools
import json
import random
from dataclasses import dataclass
from typing import Callable, Iterable, Optional

from . import exprs as E
from . import netmodel as N
from . import queues as Q
from . import values as V
from .errors import (BindingSearchBudgetExceeded, ColorMismatch,
                     ConditionNotBoolean, EngineError, EvalError,
                     LimitExceeded, StaleCandidate, UnsupportedPattern)

Multiset = tuple[tuple[V.Value, int], ...]          # sorted by value key


def ms_from_iter(values: Iterable[V.Value]) -> Multiset:
    counts: dict[V.Value, int] = {}
    for v in values:
        counts[v] = counts.get(v, 0) + 1
    return ms_from_dict(counts)


def ms_from_dict(counts: dict) -> Multiset:
    return tuple(sorted(((v, c) for v, c in counts.items() if c > 0),
                        key=lambda vc: V.value_key(vc[0])))


def ms_total(ms: Multiset) -> int:
    return sum(c for _, c in ms)


class SimState:
    """Marking snapshot; entry order follows the engine's place order."""

    __slots__ = ("entries", "_hash", "_hex")

    def __init__(self, entries: tuple):
        self.entries = entries
        self._hash = hash(entries)
        self._hex = None

    def __eq__(self, other):
        return isinstance(other, SimState) and self.entries == other.entries

    def __hash__(self):
        return self._hash


class Candidate:
    """One way to fire a transition: a binding, the tokens selected per
    input arc (with their consume/read-only mode) and the resolved
    pick_address choices.
    """

    __slots__ = ("transition", "binding", "selections", "picks", "pre_hash",
                 "sort_key", "_key")

    def __init__(self, transition, binding, selections, picks, pre_hash):
        self.transition = transition
        self.binding = binding          # tuple[(name, Value)], name-sorted
        self.selections = selections    # tuple[(arc_id, tuple[Value], readonly)]
        self.picks = picks              # tuple[(site pretty, Call, Value)]
        self.pre_hash = pre_hash
        self.sort_key = (
            transition,
            tuple((n, V.value_key(v)) for n, v in binding),
            tuple((p, V.value_key(v)) for p, _site, v in picks),
            tuple((aid, tuple(V.value_key(v) for v in taken), ro)
                  for aid, taken, ro in selections),
        )
        self._key = None

    def stamp(self, pre_hash: int) -> "Candidate":
        """Copy bound to a concrete pre-state (cached searches are shared
        between states with equal input sub-markings).
        """
        c = Candidate.__new__(Candidate)
        c.transition = self.transition
        c.binding = self.binding
        c.selections = self.selections
        c.picks = self.picks
        c.pre_hash = pre_hash
        c.sort_key = self.sort_key
        c._key = self._key
        return c

    def binding_dict(self) -> dict:
        return dict(self.binding)

    def picks_dict(self) -> dict:
        return {site: v for _p, site, v in self.picks}

    def binding_json(self) -> dict:
        return {name: V.to_json(v) for name, v in self.binding}

    def picks_json(self) -> dict:
        return {p: V.to_json(v) for p, _site, v in self.picks}

    def key(self) -> str:
        """Canonical, human-readable identity used for traces, reports
        and replay.
        """
        if self._key is None:
            out = self.transition
            if self.binding:
                out += " " + json.dumps(self.binding_json(), sort_keys=True,
                                        separators=(",", ":"))
            if self.picks:
                out += " picks" + json.dumps(self.picks_json(), sort_keys=True,
                                             separators=(",", ":"))
            self._key = out
        return self._key


@dataclass
class TraceStep:
    step: int
    transition: str
    binding: dict
    picks: dict
    pre_hash: str
    post_hash: str
    events: list

    def to_json(self) -> dict:
        return {"step": self.step, "transition": self.transition,
                "binding": self.binding, "picks": self.picks,
                "preHash": self.pre_hash, "postHash": self.post_hash,
                "events": self.events}


@dataclass
class StateGraph:
    states: list[SimState]
    edges: list[tuple[int, Candidate, int, tuple]]
    depth: list[int]
    terminals: list[int]
    limit_hit: bool

    def successors(self, i: int):
        return [(c, dst, ev) for src, c, dst, ev in self.edges if src == i]


# pattern element ops
_ANON, _VAR, _GROUND, _EXPR = 0, 1, 2, 3


@dataclass
class _InArc:
    arc_id: str
    place_idx: int
    readonly: bool
    ops: tuple                      # ((opcode, payload), ...)
    size: object                    # int | str | None
    values_var: Optional[str]


@dataclass
class _OutArc:
    arc_id: str
    place_idx: int
    conditions: tuple               # ((expr, fn), ...) presorted
    pattern: tuple                  # (fn, ...)


@dataclass
class _Trans:
    tid: str
    in_arcs: tuple
    out_arcs: tuple
    in_conditions: tuple            # ((arc_id, fn), ...) presorted
    min_need: tuple                 # ((place_idx, count), ...)
    pick_sites: tuple               # ((pretty, Call, lo fn, hi fn), ...)
    events: tuple                   # ((label, fn), ...)
    in_place_idxs: tuple            # sorted distinct input place indices
    arc_place: dict                 # arc id -> place index


_SEARCH_BUDGET = 20000


class Engine:
    def __init__(self, flat: N.FlatNet):
        self.flat = flat
        self.place_ids = sorted(flat.places)
        self.place_index = {pid: i for i, pid in enumerate(self.place_ids)}
        self.places = [flat.places[pid] for pid in self.place_ids]
        self.queuing = [p.kind == N.QUEUING for p in self.places]
        self.transition_ids = sorted(flat.transitions)

        inputs: dict[str, list[N.Arc]] = {t: [] for t in self.transition_ids}
        outputs: dict[str, list[N.Arc]] = {t: [] for t in self.transition_ids}
        out_arcs_per_place: dict[str, list[N.Arc]] = {p: [] for p in self.place_ids}
        for arc in flat.arcs:
            if arc.category in N.INPUT_CATEGORIES:
                inputs[arc.target].append(arc)
                out_arcs_per_place[arc.source].append(arc)
            elif arc.category == N.OUT:
                outputs[arc.source].append(arc)

        self.compiled: list[_Trans] = []
        for tid in self.transition_ids:
            in_arcs = []
            conditions = []
            need: dict[int, int] = {}
            for arc in sorted(inputs[tid], key=lambda a: a.id):
                insc = arc.inscription
                ops = []
                for el in insc.pattern:
                    if isinstance(el, E.Var):
                        ops.append((_ANON, None) if el.name == E.ANON
                                   else (_VAR, el.name))
                    elif not E.free_vars(el):
                        if E.contains_pick(el):
                            raise UnsupportedPattern(E.pretty(el))
                        ops.append((_GROUND, E.eval_expr(el, {})))
                    else:
                        if E.contains_pick(el):
                            raise UnsupportedPattern(E.pretty(el))
                        ops.append((_EXPR, (el, E.compile_expr(el))))
                size = insc.effective_size()
                if isinstance(size, int):
                    idx = self.place_index[arc.source]
                    need[idx] = need.get(idx, 0) + size
                in_arcs.append(_InArc(arc.id, self.place_index[arc.source],
                                      N.is_readonly(arc.category), tuple(ops),
                                      size, insc.values_var))
                for cond in insc.conditions:
                    conditions.append((E.pretty(cond), arc.id, cond))
            out_arcs = []
            sites: set[E.Call] = set()
            for arc in sorted(outputs[tid], key=lambda a: a.id):
                insc = arc.inscription
                conds = tuple((c, E.compile_expr(c)) for _txt, c in
                              sorted((E.pretty(c), c) for c in insc.conditions))
                out_arcs.append(_OutArc(
                    arc.id, self.place_index[arc.target], conds,
                    tuple(E.compile_expr(p) for p in insc.pattern)))
                for c in insc.conditions:
                    sites |= E.pick_sites(c)
                for p in insc.pattern:
                    sites |= E.pick_sites(p)
            for _txt, _arcid, cond in conditions:
                sites |= E.pick_sites(cond)
            transition = flat.transitions[tid]
            for _label, expr in transition.events:
                sites |= E.pick_sites(expr)
            for site in sites:
                if len(site.args) != 2:
                    raise EngineError(
                        f"pick_address takes two arguments, got {len(site.args)}")
            conditions.sort(key=lambda c: (c[0], c[1]))
            in_place_idxs = tuple(sorted({a.place_idx for a in in_arcs}))
            self.compiled.append(_Trans(
                tid, tuple(in_arcs), tuple(out_arcs),
                tuple((aid, E.compile_expr(c)) for _txt, aid, c in conditions),
                tuple(sorted(need.items())),
                tuple((txt, s, E.compile_expr(s.args[0]),
                       E.compile_expr(s.args[1]))
                      for txt, s in sorted((E.pretty(s), s) for s in sites)),
                tuple((label, E.compile_expr(expr))
                      for label, expr in transition.events),
                in_place_idxs,
                {a.arc_id: a.place_idx for a in in_arcs}))
        self._compiled_by_id = {ct.tid: ct for ct in self.compiled}
        self._cand_cache: list[dict] = [{} for _ in self.compiled]

        # a transition needing k>=1 tokens from some place cannot fire
        # while that place is empty; index transitions by one such gate
        self._gated: list[list[int]] = [[] for _ in self.places]
        self._ungated: list[int] = []
        for k, ct in enumerate(self.compiled):
            positive = [idx for idx, count in ct.min_need if count >= 1]
            # control places sit empty most of the time, so they reject
            # far more states than an always-populated memory place
            unit_gates = [idx for idx in positive
                          if self.places[idx].colorset == N.UNIT_COLOR]
            gate = (unit_gates or positive or [None])[0]
            if gate is None:
                self._ungated.append(k)
            else:
                self._gated[gate].append(k)

        # static per-place demand for the scheduling phase
        self._demand: list = [None] * len(self.places)
        for i, p in enumerate(self.places):
            if not self.queuing[i]:
                continue
            demand: set[V.Value] = set()
            wildcard = False
            for arc in out_arcs_per_place[p.id]:
                insc = arc.inscription
                if insc.is_bulk():
                    wildcard = True
                    break
                for el in insc.pattern:
                    if E.free_vars(el):
                        wildcard = True
                        break
                    demand.add(E.eval_expr(el, {}))
                if wildcard:
                    break
            self._demand[i] = Q.DEMAND_ALL if wildcard else demand

    # -- states ---------------------------------------------------------

    def initial_state(self) -> SimState:
        entries = []
        for i, p in enumerate(self.places):
            if self.queuing[i]:
                entries.append((tuple(p.initial_marking), ()))
            else:
                entries.append(ms_from_iter(p.initial_marking))
        return self._normalize(entries)

    def _normalize(self, entries: list) -> SimState:
        for i, is_q in enumerate(self.queuing):
            if not is_q:
                continue
            queue, dep = entries[i]
            if not queue:
                continue
            q2, d2 = Q.schedule((queue, dict(dep)), self._demand[i],
                                self.flat.disciplines[self.place_ids[i]])
            entries[i] = (tuple(q2), ms_from_dict(d2))
        return SimState(tuple(entries))

    def pool_of(self, state: SimState, place_idx: int) -> Multiset:
        entry = state.entries[place_idx]
        return entry[1] if self.queuing[place_idx] else entry

    def state_json(self, state: SimState) -> dict:
        out = {}
        for i, pid in enumerate(self.place_ids):
            if self.queuing[i]:
                queue, dep = state.entries[i]
                out[pid] = {"kind": "queuing",
                            "queue": [V.to_json(v) for v in queue],
                            "depository": [[V.to_json(v), c] for v, c in dep]}
            else:
                out[pid] = {"kind": "multiset",
                            "tokens": [[V.to_json(v), c]
                                       for v, c in state.entries[i]]}
        return out

    def state_hash(self, state: SimState) -> str:
        if state._hex is None:
            text = json.dumps(self.state_json(state), sort_keys=True,
                              separators=(",", ":"))
            state._hex = hashlib.sha256(text.encode()).hexdigest()
        return state._hex

    # -- binding search --------------------------------------------------

    def enabled(self, state: SimState) -> list[Candidate]:
        """Complete, duplicate-free, canonically ordered candidate list.

        Searches are cached per transition keyed by the sub-marking of its
        input places; a cache hit re-stamps the shared candidates with
        this state's identity.
        """
        h = hash(state)
        entries = state.entries
        check = list(self._ungated)
        for i, is_q in enumerate(self.queuing):
            if (entries[i][1] if is_q else entries[i]):
                check.extend(self._gated[i])
        out = []
        for k in check:
            ct = self.compiled[k]
            key = tuple(entries[i] for i in ct.in_place_idxs)
            cache = self._cand_cache[k]
            protos = cache.get(key)
            if protos is None:
                protos = self._transition_candidates(state, ct)
                cache[key] = protos
            out.extend(c.stamp(h) for c in protos)
        out.sort(key=lambda c: c.sort_key)
        return out

    def _transition_candidates(self, state, ct: _Trans) -> list[Candidate]:
        pools: dict[int, dict] = {}
        for idx in ct.in_place_idxs:
            pools[idx] = dict(self.pool_of(state, idx))
        for idx, count in ct.min_need:
            if sum(pools[idx].values()) < count:
                return []

        results: list[Candidate] = []
        budget = [_SEARCH_BUDGET]

        def recurse(arc_no, binding, selections):
            budget[0] -= 1
            if budget[0] < 0:
                raise BindingSearchBudgetExceeded(ct.tid)
            if arc_no == len(ct.in_arcs):
                self._close_candidate(ct, binding, selections, results)
                return
            arc = ct.in_arcs[arc_no]
            pool = pools[arc.place_idx]
            for new_binding, taken in self._match_arc(arc, binding, pool):
                for v in taken:
                    pool[v] -= 1
                recurse(arc_no + 1, new_binding,
                        selections + ((arc.arc_id, tuple(taken), arc.readonly),))
                for v in taken:
                    pool[v] += 1

        recurse(0, {}, ())
        if len(results) <= 1:
            return results
        results.sort(key=lambda c: c.sort_key)
        unique = [results[0]]
        for c in results[1:]:
            if c.sort_key != unique[-1].sort_key:
                unique.append(c)
        return unique

    def _match_arc(self, arc: _InArc, binding, pool):
        """Yield (binding, taken-values-list) alternatives for one arc.

        A bulk arc (free size variable) reads the entire pool: the token
        sequence is the canonical value order, the pattern must match its
        prefix, and exactly one alternative results.  Fixed-size arcs
        branch over the tokens their pattern can select; surplus tokens
        beyond the pattern are taken in canonical order.
        """
        size = arc.size
        if isinstance(size, str):
            bound = binding.get(size)
            if bound is None:
                yield from self._match_bulk(arc, binding, pool)
                return
            if not isinstance(bound, V.Nat):
                return
            k = bound.n
        else:
            k = size
        if k < len(arc.ops):
            return

        order = sorted(pool, key=V.value_key)

        def match_elems(i, b, taken):
            if i == len(arc.ops):
                yield b, taken
                return
            opcode, payload = arc.ops[i]
            if opcode == _ANON or (opcode == _VAR and payload not in b):
                for v in order:
                    if pool[v] - taken.count(v) > 0:
                        if opcode == _VAR:
                            b2 = dict(b)
                            b2[payload] = v
                            yield from match_elems(i + 1, b2, taken + [v])
                        else:
                            yield from match_elems(i + 1, b, taken + [v])
                return
            if opcode == _GROUND:
                want = payload
            elif opcode == _VAR:
                want = b[payload]
            else:
                expr, fn = payload
                unbound = E.free_vars(expr) - set(b)
                if unbound:
                    raise UnsupportedPattern(E.pretty(expr))
                want = fn(b, None)
            for v in order:
                if pool[v] - taken.count(v) > 0 and V.matches(want, v):
                    yield from match_elems(i + 1, b, taken + [v])
            return

        for b, taken in match_elems(0, binding, []):
            taken = list(taken)
            extra = k - len(taken)
            if extra:
                left = dict(pool)
                for v in taken:
                    left[v] -= 1
                rest = []
                for v in sorted(left, key=V.value_key):
                    rest.extend([v] * left[v])
                if len(rest) < extra:
                    continue
                taken += rest[:extra]
            b2 = self._bind_values_var(arc, b, taken)
            if b2 is not None:
                yield b2, taken

    def _match_bulk(self, arc: _InArc, binding, pool):
        tokens = []
        for v in sorted(pool, key=V.value_key):
            tokens.extend([v] * pool[v])
        b = dict(binding)
        for i, (opcode, payload) in enumerate(arc.ops):
            if i >= len(tokens):
                if opcode not in (_ANON, _VAR):
                    return
                continue          # unmatched bare variables stay unbound
            t = tokens[i]
            if opcode == _ANON:
                continue
            if opcode == _VAR:
                prior = b.get(payload)
                if prior is None:
                    b[payload] = t
                elif not V.matches(prior, t):
                    return
                continue
            if opcode == _GROUND:
                want = payload
            else:
                expr, fn = payload
                if E.free_vars(expr) - set(b):
                    raise UnsupportedPattern(E.pretty(expr))
                want = fn(b, None)
            if not V.matches(want, t):
                return
        b[arc.size] = V.Nat(len(tokens))
        b = self._bind_values_var(arc, b, tokens)
        if b is not None:
            yield b, tokens

    @staticmethod
    def _bind_values_var(arc, b, taken):
        if not arc.values_var:
            return b
        seq = V.Tup(tuple(taken))
        prior = b.get(arc.values_var)
        if prior is None:
            b = dict(b)
            b[arc.values_var] = seq
            return b
        return b if prior == seq else None

    def _close_candidate(self, ct: _Trans, binding, selections, results):
        if ct.pick_sites:
            choice_lists = []
            for _txt, _site, lo_fn, hi_fn in ct.pick_sites:
                lo = lo_fn(binding, None)
                hi = hi_fn(binding, None)
                if not (isinstance(lo, V.Nat) and isinstance(hi, V.Nat)):
                    raise EngineError(
                        f"pick_address bounds must be naturals in {ct.tid}")
                choice_lists.append([V.Nat(a) for a in range(lo.n, hi.n + 1)])
            combos = itertools.product(*choice_lists)
        else:
            combos = [()]

        for combo in combos:
            picks = {site: v
                     for (_txt, site, _lo, _hi), v in zip(ct.pick_sites, combo)}
            ok = True
            for arc_id, cond_fn in ct.in_conditions:
                v = cond_fn(binding, picks)
                if not isinstance(v, V.Bool):
                    raise ConditionNotBoolean(
                        f"input-arc condition on {arc_id}")
                if not v.flag:
                    ok = False
                    break
            if ok:
                results.append(Candidate(
                    ct.tid,
                    tuple(sorted(binding.items())),
                    selections,
                    tuple((txt, site, picks[site])
                          for txt, site, _lo, _hi in ct.pick_sites),
                    0))

    # -- firing ----------------------------------------------------------

    def _compiled_for(self, tid: str) -> _Trans:
        return self._compiled_by_id[tid]

    def fire(self, state: SimState, c: Candidate) -> tuple[SimState, tuple]:
        if c.pre_hash != hash(state):
            raise StaleCandidate()
        ct = self._compiled_for(c.transition)
        entries = list(state.entries)
        mutable: dict[int, object] = {}

        def pool(idx):
            if idx not in mutable:
                if self.queuing[idx]:
                    queue, dep = entries[idx]
                    mutable[idx] = (list(queue), dict(dep))
                else:
                    mutable[idx] = dict(entries[idx])
            return mutable[idx]

        for arc_id, taken, readonly in c.selections:
            if readonly:
                continue
            idx = ct.arc_place[arc_id]
            p = pool(idx)
            dep = p[1] if self.queuing[idx] else p
            for v in taken:
                if dep.get(v, 0) <= 0:
                    raise StaleCandidate()
                dep[v] -= 1

        binding = c.binding_dict()
        picks = c.picks_dict()
        for arc in ct.out_arcs:
            vals = _eval_output(arc, binding, picks)
            if not vals:
                continue
            idx = arc.place_idx
            place = self.places[idx]
            for v in vals:
                if not place.colorset.admits(v):
                    raise ColorMismatch(place.id, v)
            p = pool(idx)
            if self.queuing[idx]:
                p[0].extend(vals)
            else:
                for v in vals:
                    p[v] = p.get(v, 0) + 1

        for idx, p in mutable.items():
            if self.queuing[idx]:
                entries[idx] = (tuple(p[0]), ms_from_dict(p[1]))
            else:
                entries[idx] = ms_from_dict(p)

        events = tuple((label, fn(binding, picks)) for label, fn in ct.events)
        return self._normalize(entries), events

    # -- exploration -----------------------------------------------------

    def explore(self, s0: Optional[SimState] = None, max_states: int = 1_000_000,
                max_depth: Optional[int] = None,
                raise_on_limit: bool = False) -> StateGraph:
        """Breadth-first state graph; deterministic state numbering."""
        if s0 is None:
            s0 = self.initial_state()
        index = {s0: 0}
        states = [s0]
        depth = [0]
        edges = []
        terminals = []
        limit_hit = False
        frontier = 0
        while frontier < len(states):
            i = frontier
            frontier += 1
            if max_depth is not None and depth[i] >= max_depth:
                continue
            candidates = self.enabled(states[i])
            if not candidates:
                terminals.append(i)
                continue
            for c in candidates:
                nxt, events = self.fire(states[i], c)
                j = index.get(nxt)
                if j is None:
                    if len(states) >= max_states:
                        limit_hit = True
                        continue
                    j = len(states)
                    index[nxt] = j
                    states.append(nxt)
                    depth.append(depth[i] + 1)
                edges.append((i, c, j, events))
        graph = StateGraph(states, edges, depth, terminals, limit_hit)
        if limit_hit and raise_on_limit:
            raise LimitExceeded(graph)
        return graph

    # -- runs -------------------------------------------------------------

    def run(self, s0: Optional[SimState] = None,
            chooser: Optional[Callable] = None, max_steps: int = 10_000,
            ) -> tuple[list[TraceStep], SimState]:
        if s0 is None:
            s0 = self.initial_state()
        if chooser is None:
            chooser = seeded_chooser(0)
        state = s0
        trace = []
        for step in range(max_steps):
            candidates = self.enabled(state)
            if not candidates:
                break
            c = candidates[chooser(candidates)]
            nxt, events = self.fire(state, c)
            trace.append(TraceStep(
                step, c.transition, c.binding_json(), c.picks_json(),
                self.state_hash(state), self.state_hash(nxt),
                [{"label": label, "fields": V.to_json(v)}
                 for label, v in events]))
            state = nxt
        return trace, state

    def replay(self, records: list[dict],
               s0: Optional[SimState] = None) -> SimState:
        """Re-fire a recorded trace; raises if any step cannot be matched
        or does not reproduce the recorded post-state hash.
        """
        state = s0 if s0 is not None else self.initial_state()
        for rec in records:
            if self.state_hash(state) != rec["preHash"]:
                raise EngineError(f"replay diverged before step {rec['step']}")
            matched = None
            for c in self.enabled(state):
                if c.transition != rec["transition"]:
                    continue
                if (c.binding_json() != rec["binding"]
                        or c.picks_json() != rec.get("picks", {})):
                    continue
                nxt, _ = self.fire(state, c)
                if self.state_hash(nxt) == rec["postHash"]:
                    matched = nxt
                    break
            if matched is None:
                raise EngineError(f"replay could not match step {rec['step']}")
            state = matched
        return state


def _eval_output(arc: _OutArc, binding, picks) -> tuple:
    """Arc-expression evaluation for one output arc: all conditions are
    inspected, any false one wins over errors, then the pattern is
    evaluated element-wise.
    """
    failure = None
    for cond, cond_fn in arc.conditions:
        try:
            v = cond_fn(binding, picks)
        except EvalError as err:
            if failure is None:
                failure = err
            continue
        if isinstance(v, V.Bool):
            if not v.flag:
                return ()
        elif failure is None:
            failure = ConditionNotBoolean(E.pretty(cond))
    if failure is not None:
        raise failure
    return tuple(fn(binding, picks) for fn in arc.pattern)


def seeded_chooser(seed: int) -> Callable:
    rng = random.Random(seed)
    return lambda candidates: rng.randrange(len(candidates))


# ---------------------------------------------------------------------------
# event projections over state graphs

def event_sequences(graph: StateGraph, project: Callable) -> set[tuple]:
    """Set of projected event sequences over all maximal paths.

    ``project`` maps one event (label, value) to an item or None (drop).
    The graph must be acyclic, which holds for terminating programs;
    suffix sets are folded in reverse topological order.
    """
    n = len(graph.states)
    succs: dict[int, list] = {}
    indeg = [0] * n
    for src, _c, dst, events in graph.edges:
        items = tuple(x for x in (project(ev) for ev in events) if x is not None)
        succs.setdefault(src, []).append((items, dst))
        indeg[dst] += 1

    order = []
    ready = [i for i in range(n) if indeg[i] == 0]
    while ready:
        i = ready.pop()
        order.append(i)
        for _items, dst in succs.get(i, ()):
            indeg[dst] -= 1
            if indeg[dst] == 0:
                ready.append(dst)
    if len(order) != n:
        raise EngineError("state graph has a cycle; event sequences diverge")

    memo: list[Optional[set]] = [None] * n
    for i in reversed(order):
        if i not in succs:
            memo[i] = {()}
            continue
        out = set()
        for items, dst in succs[i]:
            for suffix in memo[dst]:
                out.add(items + suffix)
        memo[i] = out
    return memo[0]


def completion_orderings(graph: StateGraph) -> set[tuple[int, ...]]:
    """Receive-completion source orderings along all maximal paths."""

    def project(ev):
        label, value = ev
        if label != "recv_complete" or not isinstance(value, V.Record):
            return None
        src = value.get("source")
        return src.n if isinstance(src, V.Nat) else None

    return event_sequences(graph, project)
