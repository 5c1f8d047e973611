"""mpnet: executable message-passing nets.

Build nets from an MPI-like mini-language or annotated fragments, lower
them to a single queuing net, simulate, explore the full state space,
export DOT, and drive the token game interactively over HTTP.
"""

__version__ = "0.1.0"

from . import engine, exprs, fragments, mpi, netmodel, parsing, queues, values  # noqa: F401
