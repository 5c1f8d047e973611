import json

import pytest

from mpnet import exprs as E
from mpnet import netmodel as N
from mpnet import values as V
from mpnet.errors import CompoundKindMismatch, ValidationFailed
from mpnet.parsing import parse_input_arc, parse_output_arc


def two_area_net():
    """Two areas sharing a compound place L1, as in the compound-place
    transformation figure: each area has a producer transition feeding its
    own view of the shared place.
    """
    net = N.MPNet()
    for addr in (0, 1):
        area = net.new_area(addr)
        shared = area.net.place("shared", N.QUEUING, compound="L1")
        t = area.net.transition("produce")
        src = area.net.place("src", marking=(V.UNIT,))
        area.net.arc(src, t, N.IN, parse_input_arc("(x)"))
        area.net.arc(t, shared, N.OUT, parse_output_arc("x"))
    return net


def test_validate_ok():
    assert N.validate(two_area_net()) == []


def test_validate_qin_from_multiset():
    net = N.MPNet()
    area = net.new_area(0)
    p = area.net.place("p", N.MULTISET)
    t = area.net.transition("t")
    area.net.arc(p, t, N.QIN_DOUBLE, parse_input_arc("(x)"))
    codes = [d.code for d in N.validate(net)]
    assert "QInputFromMultiset" in codes


def test_validate_plain_input_from_queuing():
    net = N.MPNet()
    area = net.new_area(0)
    p = area.net.place("p", N.QUEUING)
    t = area.net.transition("t")
    area.net.arc(p, t, N.IN, parse_input_arc("(x)"))
    codes = [d.code for d in N.validate(net)]
    assert "PlainInputFromQueuing" in codes


def test_validate_compound_kind_mismatch():
    net = N.MPNet()
    a0 = net.new_area(0)
    a1 = net.new_area(1)
    a0.net.place("p", N.QUEUING, compound="L1")
    a1.net.place("p", N.MULTISET, compound="L1")
    codes = [d.code for d in N.validate(net)]
    assert "CompoundKindMismatch" in codes
    with pytest.raises(CompoundKindMismatch):
        N.merge_compound_places(net)


def test_validate_mixed_head_types():
    net = N.MPNet()
    area = net.new_area(0)
    p = area.net.place("p", N.QUEUING)
    t1 = area.net.transition("t1")
    t2 = area.net.transition("t2")
    area.net.arc(p, t1, N.QIN_SINGLE, parse_input_arc("(x)"))
    area.net.arc(p, t2, N.QIN_DOUBLE, parse_input_arc("(x)"))
    codes = [d.code for d in N.validate(net)]
    assert "MixedHeadTypes" in codes


def test_validate_dangling_endpoint():
    net = N.MPNet()
    area = net.new_area(0)
    t = area.net.transition("t")
    area.net.arcs.append(N.Arc("bad", "0.nowhere", t.id, N.IN,
                               parse_input_arc("(x)")))
    codes = [d.code for d in N.validate(net)]
    assert "DanglingEndpoint" in codes


def test_control_flow_may_connect_anything():
    net = N.MPNet()
    area = net.new_area(0)
    p = area.net.place("p")
    q = area.net.place("q")
    area.net.arc(p, q, N.CF)           # place -> place is fine for cf
    assert N.validate(net) == []


def test_merge_compound_places():
    merged = N.merge_compound_places(two_area_net())
    places = merged.all_places()
    shared = [p for p in places.values() if p.compound_label == "L1"]
    assert len(shared) == 1
    survivor = shared[0]
    assert survivor.id == "0.shared"       # lexicographically smallest view
    assert set(survivor.view_areas) == {0, 1}
    into_shared = [a for a in merged.all_arcs() if a.target == survivor.id]
    assert len(into_shared) == 2           # one producer arc per area


def test_merge_unions_initial_markings():
    net = two_area_net()
    for area, count in ((0, 1), (1, 2)):
        cn = net.area(area).net
        pid = f"{area}.shared"
        cn.places[pid] = N.Place(pid, "shared", N.QUEUING, N.ANY_COLORS, "L1",
                                 area, (V.Nat(area),) * count)
    merged = N.merge_compound_places(net)
    survivor = merged.all_places()["0.shared"]
    assert sorted(survivor.initial_marking, key=V.value_key) == [
        V.Nat(0), V.Nat(1), V.Nat(1)]


def test_merge_without_labels_is_identity():
    net = N.MPNet()
    area = net.new_area(0)
    area.net.place("p")
    merged = N.merge_compound_places(net)
    assert canonical(merged) == canonical(net)


def test_merge_idempotent():
    once = N.merge_compound_places(two_area_net())
    twice = N.merge_compound_places(once)
    assert canonical(once) == canonical(twice)


def location_net():
    """A transition whose output uses an explicit location, with target
    views in both areas."""
    net = N.MPNet()
    for addr in (0, 1):
        area = net.new_area(addr)
        area.net.place("box", N.MULTISET)
    area0 = net.area(0)
    t = area0.net.transition("emit")
    src = area0.net.place("src", marking=(V.UNIT,))
    area0.net.arc(src, t, N.IN, parse_input_arc("(x)"))
    area0.net.arc(t, "0.box", N.OUT, parse_output_arc("5 @ 0"))
    return net


def test_lower_location_arcs():
    lowered = N.lower_location_arcs(location_net())
    arcs = [a for a in lowered.all_arcs()
            if a.category == N.OUT and a.source == "0.emit"
            and "box" in a.target]
    assert len(arcs) == 2
    conditions = sorted(a.inscription.pretty() for a in arcs)
    assert conditions == ["[0 = 0] 5", "[0 = 1] 5"]
    assert all(a.inscription.location is None for a in arcs)


def test_lower_missing_target():
    net = N.MPNet()
    area = net.new_area(0)
    t = area.net.transition("t")
    lonely = area.net.place("only_here")
    area.net.arc(t, lonely, N.OUT, parse_output_arc("1 @ 1"))
    # the target name always resolves to at least its own place
    lowered = N.lower_location_arcs(net)
    assert len([a for a in lowered.all_arcs() if a.category == N.OUT]) == 1


def canonical(net):
    places = {(p.id, p.name, p.kind, p.colorset, p.compound_label,
               tuple(sorted(p.initial_marking, key=V.value_key)))
              for p in net.all_places().values()}
    transitions = {(t.id, t.name) for t in net.all_transitions().values()}
    arcs = sorted((a.source, a.target, a.category,
                   a.inscription.pretty() if a.inscription else "")
                  for a in net.all_arcs())
    return (places, transitions, tuple(arcs))


def test_merge_and_lower_commute():
    """On a net whose location arc targets a compound place, lowering
    before or after merging yields isomorphic results."""
    def build():
        net = two_area_net()
        area0 = net.area(0)
        t = area0.net.transition("route")
        feed = area0.net.place("feed", marking=(V.UNIT,))
        area0.net.arc(feed, t, N.IN, parse_input_arc("(x)"))
        area0.net.arc(t, "0.shared", N.OUT, parse_output_arc("9 @ 1"))
        return net

    a = N.lower_location_arcs(N.merge_compound_places(build()))
    b = N.merge_compound_places(N.lower_location_arcs(build()))
    assert canonical(a) == canonical(b)


def test_strip_control_flow():
    net = two_area_net()
    area = net.area(0)
    area.net.arc("0.src", "0.produce", N.CF)
    area.net.arc("0.produce", "0.shared", N.CF)
    area.net.arc("0.src", "0.src", N.CF)   # self loops allowed for cf
    before = len(net.all_arcs())
    stripped = N.strip_control_flow(net)
    assert len(stripped.all_arcs()) == before - 3
    again = N.strip_control_flow(stripped)
    assert canonical(again) == canonical(stripped)


def test_assemble_flat_clean():
    flat = N.assemble_flat(two_area_net())
    assert all(p.compound_label is None for p in flat.places.values())
    assert all(a.category != N.CF for a in flat.arcs)
    assert all(a.inscription.location is None for a in flat.arcs
               if a.category == N.OUT)
    assert flat.disciplines["0.shared"] == "single"   # no outgoing queue arcs
    assert flat.disciplines["0.src"] is None


def test_assemble_flat_rejects_invalid():
    net = N.MPNet()
    area = net.new_area(0)
    p = area.net.place("p", N.MULTISET)
    t = area.net.transition("t")
    area.net.arc(p, t, N.QIN_SINGLE, parse_input_arc("(x)"))
    with pytest.raises(ValidationFailed):
        N.assemble_flat(net)


def test_empty_net_flattens_to_empty():
    flat = N.assemble_flat(N.MPNet())
    assert not flat.places and not flat.transitions and not flat.arcs


def test_json_round_trip():
    net = two_area_net()
    area = net.area(0)
    area.net.arc("0.produce", "0.shared", N.CF)
    doc = N.to_json(net)
    text = json.dumps(doc, sort_keys=True)
    again = N.from_json(json.loads(text))
    assert canonical(again) == canonical(net)
    assert json.dumps(N.to_json(again), sort_keys=True) == text


def test_colorsets():
    assert N.ColorSet("nat").admits(V.Nat(1))
    assert not N.ColorSet("nat").admits(V.TRUE)
    assert N.UNIT_COLOR.admits(V.UNIT)
    record = N.ColorSet("record", ("op", "tag"))
    assert record.admits(V.rec(op=V.Nat(0), tag=V.Nat(1), extra=V.UNIT))
    assert not record.admits(V.rec(op=V.Nat(0)))
    assert N.ANY_COLORS.admits(V.Opaque(b"x"))


def test_flat_arcs_respect_category_constraints():
    from conftest import built
    for name in ("v1", "v2", "v3"):
        _net, flat, _engine = built(name, 3)
        for arc in flat.arcs:
            assert arc.category in N.CATEGORIES and arc.category != N.CF
            if arc.category in N.QIN_CATEGORIES:
                assert flat.places[arc.source].kind == N.QUEUING
            elif arc.category == N.IN:
                assert flat.places[arc.source].kind == N.MULTISET
            elif arc.category == N.OUT:
                assert arc.target in flat.places
