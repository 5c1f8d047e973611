"""Acceptance suite: the behavioral claims the build must reproduce, one
test per criterion, each printing a PASS/FAIL line.

Tolerances are exact-match unless a criterion states a wall-time bound,
which is then asserted on the recorded exploration time.
"""

import itertools
import json
import random
import subprocess
import sys
import time

import pytest

from mpnet import engine as EN
from mpnet import mpi
from mpnet import netmodel as N
from mpnet import values as V

import pt_reference as PT
from conftest import EXPLORE_SECONDS, built, explored
from interleaving_oracle import orderings as oracle_orderings
from test_engine import cpn_reach_depths, pt_to_flat


def report(name: str, ok: bool, detail: str = ""):
    line = f"[{'PASS' if ok else 'FAIL'}] {name}"
    if detail:
        line += f" ({detail})"
    print(line)
    assert ok, line


def all_perms(n):
    return set(itertools.permutations(range(1, n)))


# 1 -------------------------------------------------------------------------

def test_causal_order_v1():
    """v1: receive completions form exactly one causal chain."""
    ok = True
    details = []
    for n in (3, 4, 5):
        engine, graph = explored("v1", n)
        orders = EN.completion_orderings(graph)
        elapsed = EXPLORE_SECONDS[("v1", n)]
        ok &= orders == {tuple(range(1, n))} and elapsed < 10.0
        details.append(f"n={n}: {len(graph.states)} states {elapsed:.1f}s")
    report("causal-order v1 orderings == {[1..n-1]}, <10s each",
           ok, "; ".join(details))


# 2 -------------------------------------------------------------------------

def test_nondeterministic_but_gradual_v2():
    """v2: every order is possible but receives stay one-at-a-time."""
    ok = True
    details = []
    for n in (3, 4):
        engine, graph = explored("v2", n)
        orders = EN.completion_orderings(graph)
        peak = max(mpi.live_requests(engine, s, mpi.OP_RECV)
                   for s in graph.states)
        elapsed = EXPLORE_SECONDS[("v2", n)]
        ok &= orders == all_perms(n) and peak <= 1 and elapsed < 60.0
        details.append(f"n={n}: {len(orders)} orders, peak recv {peak}, "
                       f"{elapsed:.1f}s")
    report("nondeterministic-but-gradual v2 all (n-1)! orders, <=1 live recv",
           ok, "; ".join(details))


# 3 -------------------------------------------------------------------------

def test_broken_dependency_v3():
    """v3: all orders, and all receive requests can be in flight at once."""
    ok = True
    details = []
    for n in (3, 4):
        engine, graph = explored("v3", n)
        orders = EN.completion_orderings(graph)
        peak = max(mpi.live_requests(engine, s, mpi.OP_RECV)
                   for s in graph.states)
        elapsed = EXPLORE_SECONDS[("v3", n)]
        ok &= orders == all_perms(n) and peak == n - 1 and elapsed < 60.0
        details.append(f"n={n}: {len(orders)} orders, peak recv {peak}, "
                       f"{elapsed:.1f}s")
    report("broken-dependency v3 all (n-1)! orders, n-1 simultaneous recvs",
           ok, "; ".join(details))


# 4 -------------------------------------------------------------------------

def test_independent_oracle_equivalence():
    """The net-free interleaving enumerator agrees with explore."""
    ok = True
    for name in ("v1", "v2", "v3"):
        for n in (3, 4):
            _engine, graph = explored(name, n)
            ok &= EN.completion_orderings(graph) == oracle_orderings(name, n)
    report("independent-oracle equivalence (v1-v3, n in {3,4})", ok)


# 5 -------------------------------------------------------------------------

def test_queue_service_conformance():
    """Queue [2,3], transition demanding 3: blocked single-headed, enabled
    with x |-> 3 double-headed."""
    def build(category):
        net = N.MPNet()
        area = net.new_area(0)
        q = area.net.place("q", N.QUEUING, marking=(V.Nat(2), V.Nat(3)))
        t = area.net.transition("t")
        from mpnet.parsing import parse_input_arc
        area.net.arc(q, t, category, parse_input_arc("[x = 3] (x)"))
        return EN.Engine(N.assemble_flat(net))

    single = build(N.QIN_SINGLE)
    double = build(N.QIN_DOUBLE)
    single_cands = single.enabled(single.initial_state())
    double_cands = double.enabled(double.initial_state())
    ok = (single_cands == []
          and len(double_cands) == 1
          and double_cands[0].binding == (("x", V.Nat(3)),))
    report("queue-service conformance (head-only vs look-further)", ok)


# 6 -------------------------------------------------------------------------

def test_pt_degenerate_equivalence():
    """200 random small P/T nets: depth-6 reachability via the colored
    engine equals the direct firing-rule implementation."""
    rng = random.Random(20240817)
    t0 = time.perf_counter()
    checked = 0
    ok = True
    for _ in range(200):
        pt = PT.random_net(rng)
        engine = EN.Engine(pt_to_flat(pt))
        if cpn_reach_depths(engine, pt, 6) != PT.reach_depths(pt, 6):
            ok = False
            break
        checked += 1
    elapsed = time.perf_counter() - t0
    ok &= elapsed < 30.0
    report("P/T degenerate equivalence on 200 random nets, depth 6, <30s",
           ok, f"{checked} nets in {elapsed:.1f}s")


# 7 -------------------------------------------------------------------------

def _watched_places(engine, tid):
    """Places a wait transition observes: sources of read-only arcs and
    places it both consumes from and refills."""
    ins, outs = set(), set()
    ro = set()
    for arc in engine.flat.arcs:
        if arc.target == tid and arc.category in N.INPUT_CATEGORIES:
            if N.is_readonly(arc.category):
                ro.add(arc.source)
            else:
                ins.add(arc.source)
        elif arc.source == tid and arc.category == N.OUT:
            outs.add(arc.target)
    return ro | (ins & outs)


def test_read_only_wait_semantics():
    """Firing a wait-derived transition never changes the watched place."""
    ok = True
    checked = 0
    for name in ("v1", "v2", "v3"):
        engine, graph = explored(name, 3)
        watched = {ct.tid: _watched_places(engine, ct.tid)
                   for ct in engine.compiled
                   if engine.flat.transitions[ct.tid].name.endswith(".wait")}
        for src, cand, dst, _events in graph.edges:
            places = watched.get(cand.transition)
            if not places:
                continue
            checked += 1
            for pid in places:
                idx = engine.place_index[pid]
                if graph.states[src].entries[idx] != graph.states[dst].entries[idx]:
                    ok = False
    report("read-only wait semantics over all reachable states (n=3)",
           ok and checked > 0, f"{checked} wait firings")


# 8 -------------------------------------------------------------------------

def test_deadlock_freedom():
    """Every maximal path of v1-v3 ends in the terminal marking."""
    ok = True
    details = []
    for name in ("v1", "v2", "v3"):
        for n in (3, 4):
            engine, graph = explored(name, n)
            bad = [i for i in graph.terminals
                   if not mpi.is_terminal_marking(engine, graph.states[i])]
            ok &= not bad
            details.append(f"{name}/n={n}: {len(graph.terminals)} terminals")
    report("deadlock freedom (v1-v3, n in {3,4})", ok, "; ".join(details))


# 9 -------------------------------------------------------------------------

def test_non_overtaking():
    """Per-envelope completion order equals request order on every path."""
    ok = True
    for name in ("v1", "v2", "v3"):
        engine, graph = explored(name, 4)
        ok &= mpi.check_non_overtaking(graph)
    report("non-overtaking per (source, destination, tag) (n=4)", ok)


# 10 ------------------------------------------------------------------------

def _cli(args, tmp_path, tag):
    out = subprocess.run([sys.executable, "-m", "mpnet.cli", *args],
                         capture_output=True, cwd=tmp_path)
    assert out.returncode == 0, out.stderr.decode()
    return out.stdout


def test_byte_determinism_across_runs(tmp_path):
    """DOT export and explore reports are byte-identical across two fresh
    processes (hash randomization differs between them)."""
    net_file = tmp_path / "v1.json"
    code = subprocess.run(
        [sys.executable, "-m", "mpnet.cli", "build", "v1", "-n", "3",
         "-o", str(net_file)], capture_output=True)
    assert code.returncode == 0, code.stderr.decode()

    dots = [_cli(["dot", str(net_file)], tmp_path, i) for i in range(2)]
    graphs = [_cli(["explore", str(net_file), "--report", "graph"],
                   tmp_path, i) for i in range(2)]
    orders = [_cli(["explore", str(net_file), "--report", "orders"],
                   tmp_path, i) for i in range(2)]
    ok = (dots[0] == dots[1] and graphs[0] == graphs[1]
          and orders[0] == orders[1] and len(dots[0]) > 0)
    report("byte determinism of dot/explore across two runs",
           ok, f"dot {len(dots[0])}B, graph {len(graphs[0])}B")
