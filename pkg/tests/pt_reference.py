"""Direct place/transition net semantics, used as the oracle for the
degenerate-case equivalence check.

A P/T net is (places, transitions, weighted input/output arcs, initial
marking); a transition is enabled when every input place holds at least
the arc weight, and firing subtracts input weights and adds output
weights.  No colors, no queues: markings are plain count vectors.
"""

from __future__ import annotations

import random
from collections import deque
from dataclasses import dataclass, field


@dataclass
class PTNet:
    n_places: int
    # per transition: (pre weights, post weights) as place -> weight dicts
    transitions: list = field(default_factory=list)
    m0: tuple = ()


def enabled(net: PTNet, marking: tuple) -> list[int]:
    out = []
    for t, (pre, _post) in enumerate(net.transitions):
        if all(marking[p] >= w for p, w in pre.items()):
            out.append(t)
    return out


def fire(net: PTNet, marking: tuple, t: int) -> tuple:
    pre, post = net.transitions[t]
    m = list(marking)
    for p, w in pre.items():
        m[p] -= w
    for p, w in post.items():
        m[p] += w
    return tuple(m)


def reach_depths(net: PTNet, max_depth: int) -> dict[tuple, int]:
    """Minimal firing distance for every marking reachable within
    ``max_depth`` steps.
    """
    depths = {net.m0: 0}
    frontier = deque([net.m0])
    while frontier:
        m = frontier.popleft()
        d = depths[m]
        if d >= max_depth:
            continue
        for t in enabled(net, m):
            nxt = fire(net, m, t)
            if nxt not in depths:
                depths[nxt] = d + 1
                frontier.append(nxt)
    return depths


def random_net(rng: random.Random, max_places=5, max_transitions=5,
               max_weight=3, max_tokens=3) -> PTNet:
    n_places = rng.randint(1, max_places)
    n_transitions = rng.randint(1, max_transitions)
    transitions = []
    for _ in range(n_transitions):
        pre = {}
        post = {}
        for p in range(n_places):
            if rng.random() < 0.4:
                pre[p] = rng.randint(1, max_weight)
            if rng.random() < 0.4:
                post[p] = rng.randint(1, max_weight)
        transitions.append((pre, post))
    m0 = tuple(rng.randint(0, max_tokens) for _ in range(n_places))
    return PTNet(n_places, transitions, m0)
