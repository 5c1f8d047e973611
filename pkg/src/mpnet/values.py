"""Token values.

The value universe is: unit, booleans, naturals, tuples, records (all
transparent, structurally comparable), opaque byte blobs, and the ``ANY``
wildcard used by message envelopes.  Values are immutable; construction
canonicalizes record field order and precomputes the hash, since values
spend their lives inside markings, bindings and state-table keys.
"""

from __future__ import annotations

import base64


class Value:
    __slots__ = ("_hash",)

    def __hash__(self):
        return self._hash

    def __ne__(self, other):
        return not self.__eq__(other)


class Unit(Value):
    __slots__ = ()

    def __init__(self):
        self._hash = hash(("mpnet.unit",))

    __hash__ = Value.__hash__

    def __eq__(self, other):
        return isinstance(other, Unit)

    def __repr__(self):
        return "unit"


class Bool(Value):
    __slots__ = ("flag",)

    def __init__(self, flag: bool):
        self.flag = flag
        self._hash = hash(("mpnet.bool", flag))

    __hash__ = Value.__hash__

    def __eq__(self, other):
        return isinstance(other, Bool) and self.flag == other.flag

    def __repr__(self):
        return "true" if self.flag else "false"


class Nat(Value):
    __slots__ = ("n",)

    def __init__(self, n: int):
        if n < 0:
            raise ValueError("Nat holds only non-negative integers")
        self.n = n
        self._hash = hash(("mpnet.nat", n))

    __hash__ = Value.__hash__

    def __eq__(self, other):
        return isinstance(other, Nat) and self.n == other.n

    def __repr__(self):
        return str(self.n)


class Tup(Value):
    __slots__ = ("items",)

    def __init__(self, items):
        self.items = tuple(items)
        self._hash = hash(("mpnet.tuple", self.items))

    __hash__ = Value.__hash__

    def __eq__(self, other):
        return (isinstance(other, Tup) and self._hash == other._hash
                and self.items == other.items)

    def __repr__(self):
        if len(self.items) == 1:
            return f"({self.items[0]!r},)"
        return "(" + ", ".join(repr(v) for v in self.items) + ")"


class Record(Value):
    """Finite mapping field name -> value, canonicalized to name order."""

    __slots__ = ("fields",)

    def __init__(self, fields):
        ordered = tuple(sorted(fields, key=lambda fv: fv[0]))
        names = [f for f, _ in ordered]
        if len(set(names)) != len(names):
            raise ValueError("duplicate record field")
        self.fields = ordered
        self._hash = hash(("mpnet.record", ordered))

    def get(self, name):
        for f, v in self.fields:
            if f == name:
                return v
        return None

    def updated(self, name, value):
        kept = tuple((f, v) for f, v in self.fields if f != name)
        return Record(kept + ((name, value),))

    __hash__ = Value.__hash__

    def __eq__(self, other):
        return (isinstance(other, Record) and self._hash == other._hash
                and self.fields == other.fields)

    def __repr__(self):
        return "{" + ", ".join(f"{f}={v!r}" for f, v in self.fields) + "}"


class Opaque(Value):
    """Byte blob from a source language; no inner structure.

    Equality is on the byte sequence alone; the origin tag is provenance
    metadata and never distinguishes tokens.
    """

    __slots__ = ("data", "origin")

    def __init__(self, data: bytes, origin: str = ""):
        self.data = data
        self.origin = origin
        self._hash = hash(("mpnet.opaque", data))

    __hash__ = Value.__hash__

    def __eq__(self, other):
        return isinstance(other, Opaque) and self.data == other.data

    def __repr__(self):
        return f'opaque("{self.data.decode("latin1")}")'


class AnyValue(Value):
    __slots__ = ()

    def __init__(self):
        self._hash = hash(("mpnet.any",))

    __hash__ = Value.__hash__

    def __eq__(self, other):
        return isinstance(other, AnyValue)

    def __repr__(self):
        return "ANY"


UNIT = Unit()
TRUE = Bool(True)
FALSE = Bool(False)
ANY = AnyValue()


def bool_(flag):
    return TRUE if flag else FALSE


def rec(**fields):
    return Record(tuple((k, v) for k, v in fields.items()))


def kind_of(v: Value) -> str:
    return {
        Unit: "unit", Bool: "bool", Nat: "nat", Tup: "tuple",
        Record: "record", Opaque: "opaque", AnyValue: "any",
    }[type(v)]


_KIND_RANK = {Unit: 0, Bool: 1, Nat: 2, Tup: 3, Record: 4, Opaque: 5, AnyValue: 6}

# identity-keyed memo; holds a reference so ids stay valid
_KEY_CACHE: dict[int, tuple] = {}


def value_key(v: Value):
    """Total order over values; payloads are only compared within one
    kind, so heterogeneous payload shapes never meet.
    """
    cached = _KEY_CACHE.get(id(v))
    if cached is not None:
        return cached[1]
    r = _KIND_RANK[type(v)]
    if isinstance(v, (Unit, AnyValue)):
        key = (r, ())
    elif isinstance(v, Bool):
        key = (r, (int(v.flag),))
    elif isinstance(v, Nat):
        key = (r, (v.n,))
    elif isinstance(v, Tup):
        key = (r, tuple(value_key(x) for x in v.items))
    elif isinstance(v, Record):
        key = (r, tuple((f, value_key(x)) for f, x in v.fields))
    else:
        key = (r, (v.data,))
    if len(_KEY_CACHE) > 1_000_000:
        _KEY_CACHE.clear()
    _KEY_CACHE[id(v)] = (v, key)
    return key


def matches(a: Value, b: Value) -> bool:
    """Structural equality with the ANY wildcard matching every value.

    Used by the `=` operator of the inscription language and by binding
    search; multiset/queue bookkeeping uses plain structural equality.
    """
    if isinstance(a, AnyValue) or isinstance(b, AnyValue):
        return True
    if type(a) is not type(b):
        return False
    if isinstance(a, Tup):
        return len(a.items) == len(b.items) and all(
            matches(x, y) for x, y in zip(a.items, b.items))
    if isinstance(a, Record):
        return len(a.fields) == len(b.fields) and all(
            fa == fb and matches(va, vb)
            for (fa, va), (fb, vb) in zip(a.fields, b.fields))
    return a == b


def to_json(v: Value):
    """JSON form: numbers only for naturals, booleans native, "unit"/"ANY"
    strings for the singletons, arrays for tuples, objects for records and
    a $-tagged object for opaque blobs ($ is outside the field lexicon).
    """
    if isinstance(v, Nat):
        return v.n
    if isinstance(v, Bool):
        return v.flag
    if isinstance(v, Unit):
        return "unit"
    if isinstance(v, AnyValue):
        return "ANY"
    if isinstance(v, Tup):
        return [to_json(x) for x in v.items]
    if isinstance(v, Record):
        return {f: to_json(x) for f, x in v.fields}
    if isinstance(v, Opaque):
        return {"$opaque": base64.b64encode(v.data).decode("ascii"),
                "$origin": v.origin}
    raise TypeError(f"not a Value: {v!r}")


def from_json(j) -> Value:
    if isinstance(j, bool):
        return bool_(j)
    if isinstance(j, int):
        return Nat(j)
    if j == "unit":
        return UNIT
    if j == "ANY":
        return ANY
    if isinstance(j, list):
        return Tup(tuple(from_json(x) for x in j))
    if isinstance(j, dict):
        if "$opaque" in j:
            return Opaque(base64.b64decode(j["$opaque"]), j.get("$origin", ""))
        return Record(tuple((f, from_json(x)) for f, x in j.items()))
    raise ValueError(f"not a JSON-encoded value: {j!r}")
