import pytest
from hypothesis import given, strategies as st

from mpnet import queues as Q
from mpnet import values as V
from mpnet.errors import ColorMismatch, NotServiceable

n2, n3, n4, n5, n7 = V.Nat(2), V.Nat(3), V.Nat(4), V.Nat(5), V.Nat(7)


def test_enqueue_appends_at_tail():
    assert Q.enqueue((), n5) == (n5,)
    assert Q.enqueue((n2, n3), n3) == (n2, n3, n3)


def test_enqueue_color_check():
    with pytest.raises(ColorMismatch):
        Q.enqueue((), n5, admits=lambda v: False)


def test_token_count():
    assert Q.token_count((), n7) == 0
    assert Q.token_count((n3, n3, n5), n3) == 2
    assert Q.token_count((n3, n3, n5), n4) == 0


def test_enqueue_increases_count_by_one():
    q = (n2, n3)
    assert Q.token_count(Q.enqueue(q, n3), n3) == Q.token_count(q, n3) + 1


def test_can_serve_single_head_only():
    assert Q.can_serve_single((n2, n3), {}, n2)
    assert not Q.can_serve_single((n2, n3), {}, n3)
    assert not Q.can_serve_single((n2, n3), {n2: 1}, n2)  # depository not empty
    assert not Q.can_serve_single((), {}, n2)


def test_can_serve_double_first_occurrence():
    assert Q.can_serve_double((n2, n3), {}, n3)
    assert Q.can_serve_double((n2, n3, n3), {}, n3)
    assert not Q.can_serve_double((n2, n3), {n3: 1}, n3)
    assert not Q.can_serve_double((n2,), {}, n3)


def test_serve():
    assert Q.serve((n2, n3), {}, n2, Q.SINGLE) == ((n3,), {n2: 1})
    assert Q.serve((n2, n3), {}, n3, Q.DOUBLE) == ((n2,), {n3: 1})
    assert Q.serve((n3, n2, n3), {}, n3, Q.DOUBLE) == ((n2, n3), {n3: 1})
    with pytest.raises(NotServiceable):
        Q.serve((n2, n3), {}, n3, Q.SINGLE)


def test_schedule_single_serves_at_most_one():
    q, d = Q.schedule(((n2, n3), {}), {n2, n3}, Q.SINGLE)
    assert (q, d) == ((n3,), {n2: 1})
    # depository now occupied, nothing further can be served
    assert Q.schedule((q, d), {n2, n3}, Q.SINGLE) == (q, d)


def test_schedule_double_examples():
    assert Q.schedule(((n2, n3), {}), {n3}, Q.DOUBLE) == ((n2,), {n3: 1})
    q, d = Q.schedule(((n2, n3, n3), {}), {n2, n3}, Q.DOUBLE)
    assert q == (n3,)
    assert d == {n2: 1, n3: 1}


def test_schedule_respects_demand():
    # undemanded values stay in the queue
    assert Q.schedule(((n2, n3), {}), {n3}, Q.SINGLE) == ((n2, n3), {})
    assert Q.schedule(((n2, n3), {}), set(), Q.DOUBLE) == ((n2, n3), {})
    q, d = Q.schedule(((n2, n3), {}), Q.DEMAND_ALL, Q.DOUBLE)
    assert q == () and d == {n2: 1, n3: 1}


nat_values = st.integers(min_value=0, max_value=4).map(V.Nat)
queues = st.lists(nat_values, max_size=7).map(tuple)


@given(queues, nat_values)
def test_token_count_matches_naive_scan(q, v):
    assert Q.token_count(q, v) == [x for x in q].count(v)


@given(queues, nat_values, st.sampled_from((Q.SINGLE, Q.DOUBLE)))
def test_serve_conserves_tokens(q, v, head):
    can = (Q.can_serve_single if head == Q.SINGLE else Q.can_serve_double)
    if not can(q, {}, v):
        return
    q2, d2 = Q.serve(q, {}, v, head)
    before = sorted(q, key=V.value_key)
    after = sorted(list(q2) + [x for x, c in d2.items() for _ in range(c)],
                   key=V.value_key)
    assert before == after


@given(queues, st.sets(nat_values, max_size=5),
       st.sampled_from((Q.SINGLE, Q.DOUBLE)))
def test_schedule_is_a_fixpoint(q, demanded, head):
    once = Q.schedule((q, {}), demanded, head)
    assert Q.schedule(once, demanded, head) == once


@given(queues, st.sets(nat_values, max_size=5))
def test_single_schedule_leaves_at_most_one_in_depository(q, demanded):
    _, d = Q.schedule((q, {}), demanded, Q.SINGLE)
    assert sum(d.values()) <= 1


@given(queues, st.sets(nat_values, max_size=5))
def test_double_schedule_never_duplicates_a_value(q, demanded):
    _, d = Q.schedule((q, {}), demanded, Q.DOUBLE)
    assert all(c == 1 for c in d.values())


@given(queues, st.lists(nat_values, min_size=1, max_size=4, unique=True))
def test_double_schedule_order_independent(q, demand_list):
    """Serving demanded values one at a time, in any order, reaches the
    same fixpoint as the batch schedule."""
    batch = Q.schedule((q, {}), set(demand_list), Q.DOUBLE)
    for order in ([demand_list, list(reversed(demand_list))]):
        state = (q, {})
        changed = True
        while changed:
            changed = False
            for v in order:
                qq, dd = state
                if Q.can_serve_double(qq, dd, v):
                    state = Q.serve(qq, dd, v, Q.DOUBLE)
                    changed = True
        assert state == batch


@given(queues, nat_values, nat_values,
       st.sampled_from((Q.SINGLE, Q.DOUBLE)))
def test_enqueue_does_not_disturb_serviceability(q, v, newcomer, head):
    """Appending at the tail never changes which already-present token is
    serviceable."""
    can = (Q.can_serve_single if head == Q.SINGLE else Q.can_serve_double)
    before = can(q, {}, v)
    assert can(Q.enqueue(q, newcomer), {}, v) or not before
