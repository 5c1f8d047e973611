"""Deterministic DOT export.

Graphical conventions: queuing places are white ellipses, multiset places
gray ellipses, transitions boxes; conditional arcs are dashed; control
flow arcs are thin gray; the four queuing-arc families are told apart by
arrow heads (filled single/double, empty single/double for read-only).
Node ids derive from (area, element name), so re-exporting an unchanged
net yields identical bytes.
"""

from __future__ import annotations

from typing import Optional, Union

from . import exprs as E
from . import netmodel as N

_ARROWHEAD = {
    N.IN: "normal",
    N.OUT: "normal",
    N.QIN_SINGLE: "normal",
    N.QIN_DOUBLE: "normalnormal",
    N.QIN_SINGLE_RO: "empty",
    N.QIN_DOUBLE_RO: "emptyempty",
}


def _quote(text: str) -> str:
    # label text never carries literal backslashes (the inscription
    # grammar has none), so only embedded \n line breaks pass through
    return '"' + text.replace('"', '\\"') + '"'


def _place_label(p: N.Place, state_dump: Optional[dict]) -> str:
    label = p.name
    if p.compound_label:
        label += f"\\n[{p.compound_label}]"
    if state_dump is not None and p.id in state_dump:
        entry = state_dump[p.id]
        if entry["kind"] == "queuing":
            q = ", ".join(_short(v) for v in entry["queue"])
            d = ", ".join(f"{_short(v)}x{c}" for v, c in entry["depository"])
            label += f"\\nq:<{q}>\\nd:[{d}]"
        else:
            toks = ", ".join(f"{_short(v)}x{c}" for v, c in entry["tokens"])
            label += f"\\n[{toks}]"
    return label


def _short(value_json) -> str:
    if isinstance(value_json, dict):
        if "$opaque" in value_json:
            return "opaque"
        return "{" + ",".join(f"{k}={_short(v)}"
                              for k, v in sorted(value_json.items())) + "}"
    if isinstance(value_json, list):
        return "(" + ",".join(_short(v) for v in value_json) + ")"
    if value_json is True:
        return "true"
    if value_json is False:
        return "false"
    return str(value_json)


def _edge_attrs(arc: N.Arc) -> list[str]:
    attrs = []
    insc = arc.inscription
    if arc.category == N.CF:
        return ["color=gray", "penwidth=0.5", "arrowsize=0.5", "arrowhead=vee"]
    attrs.append(f"arrowhead={_ARROWHEAD[arc.category]}")
    if insc is not None:
        if insc.conditions:
            attrs.append("style=dashed")
        attrs.append(f"label={_quote(insc.pretty())}")
    return attrs


def to_dot(net: Union[N.MPNet, N.FlatNet], area: Optional[int] = None,
           state_dump: Optional[dict] = None, title: str = "mpnet") -> str:
    """Render a multi-area net or a flattened net.

    ``state_dump`` is a marking dump as produced by the engine
    (place id -> marking entry) and is drawn into the place labels.
    """
    if isinstance(net, N.MPNet):
        places = net.all_places()
        transitions = net.all_transitions()
        arcs = net.all_arcs()
        names = net.address_names
    else:
        places = net.places
        transitions = net.transitions
        arcs = net.arcs
        names = net.address_names

    if area is not None:
        places = {pid: p for pid, p in places.items() if p.area == area}
        transitions = {tid: t for tid, t in transitions.items() if t.area == area}
        arcs = [a for a in arcs
                if (a.source in places or a.source in transitions)
                and (a.target in places or a.target in transitions)]

    by_area: dict[int, list] = {}
    for p in places.values():
        by_area.setdefault(p.area, []).append(("p", p))
    for t in transitions.values():
        by_area.setdefault(t.area, []).append(("t", t))

    lines = [f"digraph {_quote(title)} {{"]
    lines.append("  rankdir=TB;")
    lines.append("  node [fontsize=10]; edge [fontsize=9];")
    for addr in sorted(by_area):
        area_name = names[addr] if addr < len(names) else str(addr)
        lines.append(f"  subgraph cluster_{addr} {{")
        lines.append(f"    label={_quote(area_name)};")
        for kind, el in sorted(by_area[addr], key=lambda ke: ke[1].id):
            if kind == "p":
                fill = "white" if el.kind == N.QUEUING else "gray83"
                lines.append(
                    f"    {_quote(el.id)} [shape=ellipse, style=filled, "
                    f"fillcolor={fill}, label={_quote(_place_label(el, state_dump))}];")
            else:
                lines.append(
                    f"    {_quote(el.id)} [shape=box, label={_quote(el.name)}];")
        lines.append("  }")
    for arc in sorted(arcs, key=lambda a: (a.source, a.target, a.id)):
        attrs = ", ".join(_edge_attrs(arc))
        lines.append(f"  {_quote(arc.source)} -> {_quote(arc.target)} [{attrs}];")
    lines.append("}")
    return "\n".join(lines) + "\n"
