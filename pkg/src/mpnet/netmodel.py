"""Structural net layers.

An MP net is a set of addressable areas; each area pairs an (already
lowered) program fragment with a communication net.  Areas interconnect
through compound places (shared by label) and through output arcs with an
``@location`` inscription.  Flattening resolves both and yields a single
executable net with a queue discipline per queuing place.

Element ids are global and stable: ``<areaName>.<elementName>``; arc ids
derive from their endpoints.  Every transform returns a new net and keeps
construction order deterministic so exports are byte-stable.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Optional, Union

from . import exprs as E
from . import values as V
from .errors import (CompoundColorMismatch, CompoundKindMismatch,
                     TargetPlaceMissing, ValidationFailed)
from .parsing import parse_expr, parse_input_arc, parse_output_arc

MULTISET = "multiset"
QUEUING = "queuing"

IN = "in"
QIN_SINGLE = "qin-single"
QIN_DOUBLE = "qin-double"
QIN_SINGLE_RO = "qin-single-ro"
QIN_DOUBLE_RO = "qin-double-ro"
OUT = "out"
CF = "cf"

INPUT_CATEGORIES = (IN, QIN_SINGLE, QIN_DOUBLE, QIN_SINGLE_RO, QIN_DOUBLE_RO)
QIN_CATEGORIES = (QIN_SINGLE, QIN_DOUBLE, QIN_SINGLE_RO, QIN_DOUBLE_RO)
CATEGORIES = INPUT_CATEGORIES + (OUT, CF)


def head_of(category: str) -> Optional[str]:
    if category in (QIN_SINGLE, QIN_SINGLE_RO):
        return "single"
    if category in (QIN_DOUBLE, QIN_DOUBLE_RO):
        return "double"
    return None


def is_readonly(category: str) -> bool:
    return category in (QIN_SINGLE_RO, QIN_DOUBLE_RO)


def base_name(name: str) -> str:
    """Element name without its annotation-label prefix."""
    return name.rsplit(".", 1)[-1]


@dataclass(frozen=True, slots=True)
class ColorSet:
    """Descriptor of admissible token values.

    ``record`` requires at least the listed fields, which lets one place
    hold record shapes that differ in optional fields.
    """

    kind: str = "any"
    fields: tuple[str, ...] = ()

    def admits(self, v: V.Value) -> bool:
        if self.kind == "any":
            return True
        if self.kind == "record":
            if not isinstance(v, V.Record):
                return False
            present = {f for f, _ in v.fields}
            return all(f in present for f in self.fields)
        return {"unit": V.Unit, "nat": V.Nat, "bool": V.Bool,
                "tuple": V.Tup, "opaque": V.Opaque}[self.kind] is type(v)


ANY_COLORS = ColorSet("any")
UNIT_COLOR = ColorSet("unit")


@dataclass(frozen=True, slots=True)
class Place:
    id: str
    name: str
    kind: str
    colorset: ColorSet = ANY_COLORS
    compound_label: Optional[str] = None
    area: int = 0
    initial_marking: tuple[V.Value, ...] = ()
    view_areas: tuple[int, ...] = ()

    def areas_present(self) -> tuple[int, ...]:
        return self.view_areas or (self.area,)


@dataclass(frozen=True, slots=True)
class Transition:
    id: str
    name: str
    area: int = 0
    events: tuple[tuple[str, E.Expression], ...] = ()


@dataclass(frozen=True, slots=True)
class Arc:
    id: str
    source: str
    target: str
    category: str
    inscription: Union[E.InputArcExpr, E.OutputArcExpr, None] = None


class CommunicationNet:
    """Mutable builder and container for one area's net elements."""

    def __init__(self, area: int = 0, name: str = "0"):
        self.area = area
        self.name = name
        self.places: dict[str, Place] = {}
        self.transitions: dict[str, Transition] = {}
        self.arcs: list[Arc] = []
        self._arc_count: dict[tuple[str, str], int] = {}

    def place(self, name, kind=MULTISET, colorset=ANY_COLORS, compound=None,
              marking=(), view_areas=()) -> Place:
        p = Place(f"{self.name}.{name}", name, kind, colorset, compound,
                  self.area, tuple(marking), tuple(view_areas))
        if p.id in self.places:
            raise ValueError(f"duplicate place {p.id}")
        self.places[p.id] = p
        return p

    def transition(self, name, events=()) -> Transition:
        t = Transition(f"{self.name}.{name}", name, self.area, tuple(events))
        if t.id in self.transitions:
            raise ValueError(f"duplicate transition {t.id}")
        self.transitions[t.id] = t
        return t

    def arc(self, source, target, category, inscription=None) -> Arc:
        src = source if isinstance(source, str) else source.id
        dst = target if isinstance(target, str) else target.id
        n = self._arc_count.get((src, dst), 0)
        self._arc_count[(src, dst)] = n + 1
        a = Arc(f"{src}->{dst}#{n}", src, dst, category, inscription)
        self.arcs.append(a)
        return a

    def add(self, element):
        if isinstance(element, Place):
            self.places[element.id] = element
        elif isinstance(element, Transition):
            self.transitions[element.id] = element
        elif isinstance(element, Arc):
            self.arcs.append(element)
        else:
            raise TypeError(element)
        return element


@dataclass
class Area:
    address: int
    name: str
    net: CommunicationNet
    fragment_text: Optional[str] = None


@dataclass
class MPNet:
    areas: list[Area] = field(default_factory=list)
    address_names: tuple[str, ...] = ()

    def new_area(self, address: int, name: Optional[str] = None,
                 fragment_text=None) -> Area:
        name = str(address) if name is None else name
        area = Area(address, name, CommunicationNet(address, name), fragment_text)
        self.areas.append(area)
        self.areas.sort(key=lambda a: a.address)
        if len(self.address_names) <= address:
            names = list(self.address_names) + [""] * (address + 1 - len(self.address_names))
            self.address_names = tuple(names)
        names = list(self.address_names)
        names[address] = name
        self.address_names = tuple(names)
        return area

    def area(self, address: int) -> Area:
        for a in self.areas:
            if a.address == address:
                return a
        raise KeyError(address)

    def all_places(self) -> dict[str, Place]:
        out = {}
        for a in self.areas:
            out.update(a.net.places)
        return out

    def all_transitions(self) -> dict[str, Transition]:
        out = {}
        for a in self.areas:
            out.update(a.net.transitions)
        return out

    def all_arcs(self) -> list[Arc]:
        out = []
        for a in self.areas:
            out.extend(a.net.arcs)
        return out


@dataclass
class FlatNet:
    """One merged executable net; ``disciplines`` maps a queuing place id
    to its head type; places without a scheduling strategy map to None.
    """

    places: dict[str, Place]
    transitions: dict[str, Transition]
    arcs: list[Arc]
    disciplines: dict[str, Optional[str]]
    address_names: tuple[str, ...] = ()


@dataclass(frozen=True, slots=True)
class Defect:
    code: str
    element: str
    detail: str = ""

    def __str__(self):
        out = f"{self.code}({self.element})"
        return out + (f": {self.detail}" if self.detail else "")


def validate(net: MPNet) -> list[Defect]:
    """All structural defects; an empty list means the net is well-formed.

    Endpoint resolution is global because merged nets legitimately hold
    cross-area arcs.
    """
    defects = []
    places = net.all_places()
    transitions = net.all_transitions()

    for area in net.areas:
        seen = set()
        for el in list(area.net.places.values()) + list(area.net.transitions.values()):
            if el.name in seen:
                defects.append(Defect("DuplicateName", el.id))
            seen.add(el.name)
        for p in area.net.places.values():
            for v in p.initial_marking:
                if not p.colorset.admits(v):
                    defects.append(Defect("InitialColorMismatch", p.id, repr(v)))

    heads: dict[str, set[str]] = {}
    for arc in net.all_arcs():
        src_p, dst_p = places.get(arc.source), places.get(arc.target)
        src_t, dst_t = transitions.get(arc.source), transitions.get(arc.target)
        if (src_p or src_t) is None or (dst_p or dst_t) is None:
            defects.append(Defect("DanglingEndpoint", arc.id))
            continue
        if arc.category == CF:
            continue  # control flow may connect any two elements
        if arc.category in INPUT_CATEGORIES:
            if not (src_p and dst_t):
                defects.append(Defect("BadEndpointKinds", arc.id, arc.category))
                continue
            if not isinstance(arc.inscription, E.InputArcExpr):
                defects.append(Defect("InscriptionMismatch", arc.id, arc.category))
            if arc.category in QIN_CATEGORIES:
                if src_p.kind != QUEUING:
                    defects.append(Defect("QInputFromMultiset", arc.id, src_p.id))
                else:
                    heads.setdefault(src_p.id, set()).add(head_of(arc.category))
            elif src_p.kind == QUEUING:
                defects.append(Defect("PlainInputFromQueuing", arc.id, src_p.id))
        elif arc.category == OUT:
            if not (src_t and dst_p):
                defects.append(Defect("BadEndpointKinds", arc.id, arc.category))
                continue
            if not isinstance(arc.inscription, E.OutputArcExpr):
                defects.append(Defect("InscriptionMismatch", arc.id, arc.category))
        else:
            defects.append(Defect("InscriptionMismatch", arc.id,
                                  f"unknown category {arc.category}"))

    for pid, hs in sorted(heads.items()):
        if len(hs) > 1:
            defects.append(Defect("MixedHeadTypes", pid))

    groups: dict[str, list[Place]] = {}
    for p in places.values():
        if p.compound_label is not None:
            groups.setdefault(p.compound_label, []).append(p)
    for label, members in sorted(groups.items()):
        if len({p.kind for p in members}) > 1:
            defects.append(Defect("CompoundKindMismatch", label))
        if len({p.colorset for p in members}) > 1:
            defects.append(Defect("CompoundColorMismatch", label))

    return defects


def _rebuild(net: MPNet, keep_place, keep_transition, keep_arc, map_arc) -> MPNet:
    out = MPNet(address_names=net.address_names)
    for area in net.areas:
        new_area = Area(area.address, area.name,
                        CommunicationNet(area.address, area.name),
                        area.fragment_text)
        for p in area.net.places.values():
            if keep_place(p):
                new_area.net.places[p.id] = p
        for t in area.net.transitions.values():
            if keep_transition(t):
                new_area.net.transitions[t.id] = t
        for a in area.net.arcs:
            if keep_arc(a):
                for mapped in map_arc(a, new_area.net):
                    new_area.net.arcs.append(mapped)
        out.areas.append(new_area)
    return out


def merge_compound_places(net: MPNet) -> MPNet:
    """Collapse every compound-label group into one shared place.

    The survivor is the member with the lexicographically smallest
    (area name, place name); it keeps the label, remembers every view's
    area, and unions the initial markings.  Arcs are re-targeted, which
    may leave cross-area endpoints.  Idempotent.
    """
    places = net.all_places()
    area_names = {a.address: a.name for a in net.areas}
    groups: dict[str, list[Place]] = {}
    for p in places.values():
        if p.compound_label is not None:
            groups.setdefault(p.compound_label, []).append(p)

    redirect: dict[str, str] = {}
    survivors: dict[str, Place] = {}
    for label, members in sorted(groups.items()):
        if len({p.kind for p in members}) > 1:
            raise CompoundKindMismatch(label)
        if len({p.colorset for p in members}) > 1:
            raise CompoundColorMismatch(label)
        members.sort(key=lambda p: (area_names[p.area], p.name))
        survivor = members[0]
        marking = []
        views = []
        for m in members:
            marking.extend(m.initial_marking)
            views.extend(m.areas_present())
        marking.sort(key=V.value_key)
        survivors[survivor.id] = replace(
            survivor, initial_marking=tuple(marking),
            view_areas=tuple(sorted(set(views))))
        for m in members[1:]:
            redirect[m.id] = survivor.id

    def keep_place(p):
        return p.id not in redirect

    def map_arc(a, _cn):
        src = redirect.get(a.source, a.source)
        dst = redirect.get(a.target, a.target)
        return [replace(a, source=src, target=dst)]

    out = _rebuild(net, keep_place, lambda t: True, lambda a: True, map_arc)
    for area in out.areas:
        for pid, survivor in survivors.items():
            if pid in area.net.places:
                area.net.places[pid] = survivor
    return out


def lower_location_arcs(net: MPNet) -> MPNet:
    """Replace every ``pattern @ location`` arc by one conditional arc per
    same-base-named place view, the location equation joining the
    conditions.  Works before or after compound merging because merged
    places remember their view areas.
    """
    places = net.all_places()
    by_base: dict[str, list[Place]] = {}
    for p in places.values():
        by_base.setdefault(base_name(p.name), []).append(p)

    def map_arc(a, _cn):
        if a.category != OUT or a.inscription is None or a.inscription.location is None:
            return [a]
        target = places[a.target]
        candidates = by_base.get(base_name(target.name), ())
        if not candidates:
            raise TargetPlaceMissing(base_name(target.name))
        loc = a.inscription.location
        out = []
        for p in sorted(candidates, key=lambda p: p.id):
            for addr in p.areas_present():
                cond = E.BinOp("=", loc, E.lit(addr))
                insc = E.OutputArcExpr(a.inscription.conditions + (cond,),
                                       a.inscription.pattern, None)
                out.append(Arc(f"{a.id}@{p.id}@{addr}", a.source, p.id, OUT, insc))
        return out

    return _rebuild(net, lambda p: True, lambda t: True, lambda a: True, map_arc)


def strip_control_flow(net: MPNet) -> MPNet:
    return _rebuild(net, lambda p: True, lambda t: True,
                    lambda a: a.category != CF, lambda a, _cn: [a])


def assemble_flat(net: MPNet) -> FlatNet:
    """Validate, merge compound places, lower location arcs, drop control
    flow and assign queue disciplines.
    """
    defects = validate(net)
    if defects:
        raise ValidationFailed(defects)
    lowered = strip_control_flow(lower_location_arcs(merge_compound_places(net)))

    places = {pid: replace(p, compound_label=None)
              for pid, p in sorted(lowered.all_places().items())}
    transitions = dict(sorted(lowered.all_transitions().items()))
    arcs = lowered.all_arcs()

    disciplines: dict[str, Optional[str]] = {pid: None for pid in places}
    for arc in arcs:
        if arc.category in QIN_CATEGORIES:
            disciplines[arc.source] = head_of(arc.category)
    for pid, p in places.items():
        if p.kind == QUEUING and disciplines[pid] is None:
            disciplines[pid] = "single"

    return FlatNet(places, transitions, arcs, disciplines, net.address_names)


# ---------------------------------------------------------------------------
# JSON exchange format

FORMAT_VERSION = 1


def _inscription_to_text(arc: Arc) -> Optional[str]:
    if arc.inscription is None:
        return None
    return arc.inscription.pretty()


def to_json(net: MPNet) -> dict:
    return {
        "version": FORMAT_VERSION,
        "addressSpace": [{"address": i, "name": n}
                         for i, n in enumerate(net.address_names)],
        "areas": [{
            "address": area.address,
            "name": area.name,
            "fragment": area.fragment_text,
            "places": [{
                "id": p.id,
                "name": p.name,
                "kind": p.kind,
                "colorSet": {"kind": p.colorset.kind,
                             "fields": list(p.colorset.fields)},
                "compoundLabel": p.compound_label,
                "initialMarking": [V.to_json(v) for v in p.initial_marking],
                "viewAreas": list(p.view_areas),
            } for _, p in sorted(area.net.places.items())],
            "transitions": [{
                "id": t.id,
                "name": t.name,
                "events": [{"label": label, "fields": E.pretty(expr)}
                           for label, expr in t.events],
            } for _, t in sorted(area.net.transitions.items())],
            "arcs": [{
                "id": a.id,
                "source": a.source,
                "target": a.target,
                "category": a.category,
                "inscription": _inscription_to_text(a),
            } for a in area.net.arcs],
        } for area in net.areas],
    }


def from_json(doc: dict) -> MPNet:
    if doc.get("version") != FORMAT_VERSION:
        raise ValueError(f"unsupported net format version {doc.get('version')!r}")
    names = [""] * len(doc["addressSpace"])
    for entry in doc["addressSpace"]:
        names[entry["address"]] = entry["name"]
    net = MPNet(address_names=tuple(names))
    for area_doc in doc["areas"]:
        area = Area(area_doc["address"], area_doc["name"],
                    CommunicationNet(area_doc["address"], area_doc["name"]),
                    area_doc.get("fragment"))
        for p in area_doc["places"]:
            cs = ColorSet(p["colorSet"]["kind"], tuple(p["colorSet"]["fields"]))
            area.net.places[p["id"]] = Place(
                p["id"], p["name"], p["kind"], cs, p.get("compoundLabel"),
                area.address,
                tuple(V.from_json(v) for v in p["initialMarking"]),
                tuple(p.get("viewAreas", ())))
        for t in area_doc["transitions"]:
            events = tuple((ev["label"], parse_expr(ev["fields"]))
                           for ev in t.get("events", ()))
            area.net.transitions[t["id"]] = Transition(
                t["id"], t["name"], area.address, events)
        for a in area_doc["arcs"]:
            text = a.get("inscription")
            if a["category"] in INPUT_CATEGORIES:
                insc = parse_input_arc(text)
            elif a["category"] == OUT:
                insc = parse_output_arc(text)
            else:
                insc = None
            area.net.arcs.append(Arc(a["id"], a["source"], a["target"],
                                     a["category"], insc))
        net.areas.append(area)
    net.areas.sort(key=lambda a: a.address)
    return net
