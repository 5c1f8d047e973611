import pytest

from mpnet import engine as EN
from mpnet import exprs as E
from mpnet import fragments as F
from mpnet import netmodel as N
from mpnet import values as V
from mpnet.errors import DuplicateLabel, InvalidFragment, UnknownPlace
from mpnet.parsing import parse_expr


def lowered(fragment, places=()):
    net = N.MPNet()
    area = net.new_area(0)
    for name, kind in places:
        area.net.place(name, kind)
    info = F.to_program_net(fragment, area.net)
    return net, area, info


def run_to_end(net):
    engine = EN.Engine(N.assemble_flat(net))
    trace, final = engine.run(max_steps=500)
    assert not engine.enabled(final)
    return engine, trace, final


def memory_of(engine, state):
    pid = next(p for p in engine.flat.places if N.base_name(p) == "mem")
    pool = engine.pool_of(state, engine.place_index[pid])
    assert len(pool) == 1 and pool[0][1] == 1
    return pool[0][0]


def test_single_assignment_edge():
    f = F.Fragment()
    f.exit = f.node()
    f.assign(f.entry, f.exit, "x", E.lit(1))
    net, area, info = lowered(f)
    unit_places = [p for p in area.net.places.values()
                   if p.colorset == N.UNIT_COLOR]
    assert len(unit_places) == 2
    assert len(area.net.transitions) == 1
    engine, trace, final = run_to_end(net)
    assert memory_of(engine, final) == V.rec(x=V.Nat(1))
    # memory starts as the record of all variables, unit-valued
    assert memory_of(engine, engine.initial_state()) == V.rec(x=V.UNIT)


def test_branch_edges_become_guarded_transitions():
    f = F.Fragment()
    f.params = {"rank": V.Nat(2)}
    join = f.node()
    t_then, t_else = f.node(), f.node()
    cond = parse_expr("rank != 0")
    f.branch(f.entry, t_then, cond)
    f.branch(f.entry, t_else, E.Not(cond))
    f.noop(t_then, join)
    f.noop(t_else, join)
    f.exit = join
    net, area, info = lowered(f)
    guards = []
    for arc in area.net.arcs:
        if arc.category == N.IN and arc.inscription.conditions:
            guards.extend(c for c in arc.inscription.conditions)
    texts = sorted(E.pretty(g) for g in guards)
    assert texts == ["M.rank != 0", "not (M.rank != 0)"]
    engine, trace, final = run_to_end(net)
    fired = {step.transition for step in trace}
    assert len(fired) == 2      # branch plus one noop; the else path is dead


def loop_fragment(n):
    # for i = 1; i < n; i = i + 1 { body }  with a body marker assignment
    f = F.Fragment()
    f.params = {"n": V.Nat(n), "hits": V.Nat(0)}
    head = f.node()
    f.assign(f.entry, head, "i", E.lit(1))
    body = f.node()
    f.branch(head, body, parse_expr("i < n"))
    done = f.node()
    f.branch(head, done, parse_expr("not (i < n)"))
    back = f.node()
    f.assign(body, back, "hits", parse_expr("hits + 1"))
    f.assign(back, head, "i", parse_expr("i + 1"))
    f.exit = done
    return f


def test_loop_executes_body_exactly_twice_for_n_3():
    net, area, info = lowered(loop_fragment(3))
    engine, trace, final = run_to_end(net)
    mem = memory_of(engine, final)
    assert mem.get("hits") == V.Nat(2)
    assert mem.get("i") == V.Nat(3)


def test_fragment_validation():
    f = F.Fragment()
    f.exit = f.node()
    orphan = f.node()
    f.assign(f.entry, f.exit, "x", E.lit(1))
    f.noop(orphan, f.exit)
    with pytest.raises(InvalidFragment):
        f.check()

    g = F.Fragment()
    g.exit = g.node()
    g.assign(g.entry, g.exit, "M", E.lit(1))
    with pytest.raises(InvalidFragment):
        g.check()


def annotated_fragment(directives):
    f = F.Fragment()
    f.exit = f.node()
    f.noop(f.entry, f.exit, F.Annotation("s1", tuple(directives)))
    return f


def test_directive_chain_counts():
    directives = [F.Put("P", E.lit(1)), F.Wait("Q")]
    f = annotated_fragment(directives)
    net = N.MPNet()
    area = net.new_area(0)
    area.net.place("P")
    area.net.place("Q", marking=(V.Nat(7),))
    before_p = len(area.net.places)
    before_t = len(area.net.transitions)
    F.to_program_net(f, area.net)
    # program net: 2 node places + memory + 1 edge transition, then one
    # place/transition pair per directive
    added_places = len(area.net.places) - before_p
    added_transitions = len(area.net.transitions) - before_t
    assert added_places == 2 + 1 + len(directives)
    assert added_transitions == 1 + len(directives)
    names = {t.name for t in area.net.transitions.values()}
    assert {"s1.put", "s1.wait"} <= names


def test_put_emits_token():
    f = annotated_fragment([F.Put("P", parse_expr("rank + 1"))])
    f.params = {"rank": V.Nat(4)}
    net = N.MPNet()
    area = net.new_area(0)
    area.net.place("P")
    F.to_program_net(f, area.net)
    engine, trace, final = run_to_end(net)
    pool = engine.pool_of(final, engine.place_index["0.P"])
    assert pool == ((V.Nat(5), 1),)


def test_wait_is_non_destructive():
    f = annotated_fragment([F.Wait("Q")])
    net = N.MPNet()
    area = net.new_area(0)
    area.net.place("Q", marking=(V.Nat(7), V.Nat(7)))
    F.to_program_net(f, area.net)
    engine, trace, final = run_to_end(net)
    q_idx = engine.place_index["0.Q"]
    assert final.entries[q_idx] == engine.initial_state().entries[q_idx]
    assert any(step.transition.endswith(".wait") for step in trace)


def test_wait_blocks_on_empty_place():
    f = annotated_fragment([F.Wait("Q")])
    net = N.MPNet()
    area = net.new_area(0)
    area.net.place("Q")
    F.to_program_net(f, area.net)
    engine, trace, final = run_to_end(net)
    exit_pool = engine.pool_of(final, engine.place_index["0.exit"])
    assert exit_pool == ()    # stuck before the wait transition


def test_get_takes_entire_content():
    f = annotated_fragment([F.Get("Q", "got")])
    net = N.MPNet()
    area = net.new_area(0)
    area.net.place("Q", marking=(V.Nat(1), V.Nat(2), V.Nat(2)))
    F.to_program_net(f, area.net)
    engine, trace, final = run_to_end(net)
    assert engine.pool_of(final, engine.place_index["0.Q"]) == ()
    got = memory_of(engine, final).get("got")
    assert isinstance(got, V.Tup)
    assert sorted(got.items, key=V.value_key) == [V.Nat(1), V.Nat(2), V.Nat(2)]
    assert len(got.items) == 3


def test_get_on_empty_place_still_fires():
    f = annotated_fragment([F.Get("Q", "got")])
    net = N.MPNet()
    area = net.new_area(0)
    area.net.place("Q")
    F.to_program_net(f, area.net)
    engine, trace, final = run_to_end(net)
    assert memory_of(engine, final).get("got") == V.Tup(())
    exit_pool = engine.pool_of(final, engine.place_index["0.exit"])
    assert exit_pool == ((V.UNIT, 1),)


def test_get_with_count_condition_blocks_until_reached():
    f = annotated_fragment([F.Get("Q", "got", count=E.lit(2))])
    net = N.MPNet()
    area = net.new_area(0)
    area.net.place("Q", marking=(V.Nat(1),))
    F.to_program_net(f, area.net)
    engine, trace, final = run_to_end(net)
    assert engine.pool_of(final, engine.place_index["0.exit"]) == ()


def test_take_filters_by_condition():
    cond = parse_expr("c.reqId = 1")
    f = annotated_fragment([F.Take("Q", "c", (cond,))])
    net = N.MPNet()
    area = net.new_area(0)
    area.net.place("Q", marking=(V.rec(reqId=V.Nat(0)), V.rec(reqId=V.Nat(1))))
    F.to_program_net(f, area.net)
    engine, trace, final = run_to_end(net)
    left = engine.pool_of(final, engine.place_index["0.Q"])
    assert left == ((V.rec(reqId=V.Nat(0)), 1),)
    assert memory_of(engine, final).get("c") == V.rec(reqId=V.Nat(1))


def test_unknown_place_and_duplicate_label():
    f = annotated_fragment([F.Put("NOPE", E.lit(1))])
    net = N.MPNet()
    area = net.new_area(0)
    with pytest.raises(UnknownPlace):
        F.to_program_net(f, area.net)

    g = F.Fragment()
    mid = g.node()
    g.exit = g.node()
    g.noop(g.entry, mid, F.Annotation("dup", (F.Wait("Q"),)))
    g.noop(mid, g.exit, F.Annotation("dup", (F.Wait("Q"),)))
    with pytest.raises(DuplicateLabel):
        g.check()


def test_parse_fragment_surface_syntax():
    text = """
    place ASR queuing compound ASR;
    place OUTBOX;
    x = 1;
    skip @s1 [put(OUTBOX = x + 1), wait(OUTBOX), get(OUTBOX -> y)];
    if (x = 1) {
      x = 2;
    } else {
      x = 3;
    }
    for (i = 0; i < 2; i = i + 1) {
      x = x + i;
    }
    """
    f, decls = F.parse_fragment(text)
    assert [d.name for d in decls] == ["ASR", "OUTBOX"]
    assert decls[0].queuing and decls[0].compound == "ASR"
    ann = [e.annotation for e in f.edges
           if getattr(e, "annotation", None) is not None]
    assert len(ann) == 1
    assert [type(d).__name__ for d in ann[0].directives] == ["Put", "Wait", "Get"]


def test_build_fragment_area_runs():
    text = """
    x = 10;
    skip @s1 [put(BOX = x), wait(BOX), get(BOX -> y)];
    """
    net = N.MPNet()
    F.build_fragment_area(net, 0, text)
    assert N.validate(net) == []
    engine, trace, final = run_to_end(net)
    mem = memory_of(engine, final)
    assert mem.get("y") == V.Tup((V.Nat(10),))
    assert engine.pool_of(final, engine.place_index["0.exit"]) == ((V.UNIT, 1),)
