import functools
import time

import pytest

from mpnet import engine as EN
from mpnet import mpi
from mpnet import netmodel as N

# wall time of each full exploration, for the acceptance-time criteria
EXPLORE_SECONDS: dict[tuple[str, int], float] = {}


@functools.lru_cache(maxsize=None)
def built(name: str, n: int):
    """(net, flat, engine) for a bundled program, shared by all tests."""
    net = mpi.build_example(name, n)
    flat = N.assemble_flat(net)
    return net, flat, EN.Engine(flat)


@functools.lru_cache(maxsize=None)
def explored(name: str, n: int):
    """(engine, fully explored state graph), shared by all tests."""
    _net, _flat, engine = built(name, n)
    t0 = time.perf_counter()
    graph = engine.explore(max_states=2_000_000)
    EXPLORE_SECONDS[(name, n)] = time.perf_counter() - t0
    assert not graph.limit_hit
    return engine, graph


@pytest.fixture(scope="session")
def v1_n3():
    return explored("v1", 3)


@pytest.fixture(scope="session")
def v2_n3():
    return explored("v2", 3)


@pytest.fixture(scope="session")
def v3_n3():
    return explored("v3", 3)
