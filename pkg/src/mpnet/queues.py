"""Queue discipline for queuing places.

A queuing place is a FIFO queue plus a depository; transitions only see
the depository.  Moving a token queue -> depository is "service":

* single-headed arcs serve only the queue head, and only while the
  depository is completely empty;
* double-headed arcs serve the first occurrence of a value, provided the
  depository holds no token of that value yet.

All functions are pure; queues are tuples, depositories are mappings
value -> count and are never mutated in place.
"""

from __future__ import annotations

from typing import Mapping

from .errors import ColorMismatch, NotServiceable
from .values import Value

Queue = tuple[Value, ...]
Depository = Mapping[Value, int]

SINGLE = "single"
DOUBLE = "double"

# demand sentinel: every queued value is requested
DEMAND_ALL = object()


def enqueue(q: Queue, v: Value, admits=None) -> Queue:
    if admits is not None and not admits(v):
        raise ColorMismatch("queue", v)
    return q + (v,)


def token_count(q: Queue, v: Value) -> int:
    return sum(1 for x in q if x == v)


def can_serve_single(q: Queue, d: Depository, v: Value) -> bool:
    return not any(d.values()) and bool(q) and q[0] == v


def can_serve_double(q: Queue, d: Depository, v: Value) -> bool:
    return d.get(v, 0) == 0 and v in q


def serve(q: Queue, d: Depository, v: Value, head: str) -> tuple[Queue, dict]:
    if head == SINGLE:
        if not can_serve_single(q, d, v):
            raise NotServiceable(f"{v!r} not serviceable (single-headed)")
        rest = q[1:]
    elif head == DOUBLE:
        if not can_serve_double(q, d, v):
            raise NotServiceable(f"{v!r} not serviceable (double-headed)")
        i = q.index(v)
        rest = q[:i] + q[i + 1:]
    else:
        raise ValueError(f"unknown head type {head!r}")
    new_d = dict(d)
    new_d[v] = new_d.get(v, 0) + 1
    return rest, new_d


def schedule(state: tuple[Queue, Depository], demanded, head: str) -> tuple[Queue, dict]:
    """Serve every demanded, serviceable token; returns the fixpoint.

    ``demanded`` is a collection of values or DEMAND_ALL.  Single-headed
    discipline can serve at most one token from an empty depository
    before the emptiness clause blocks; double-headed serves at most one
    token per distinct value.  The result does not depend on service
    order.
    """
    q, d = state
    d = dict(d)
    if head == SINGLE:
        if q and not any(d.values()) and _demands(demanded, q[0]):
            q, d = serve(q, d, q[0], SINGLE)
        return q, d
    seen = set()
    for v in tuple(q):
        if v in seen:
            continue
        seen.add(v)
        if _demands(demanded, v) and d.get(v, 0) == 0:
            q, d = serve(q, d, v, DOUBLE)
    return q, d


def _demands(demanded, v) -> bool:
    return demanded is DEMAND_ALL or v in demanded
