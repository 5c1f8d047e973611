"""Command-line entry point.

Exit codes: 0 success, 1 usage error, 2 parse or validation failure,
3 exploration limit exceeded (partial results are still written).
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from . import dot as dot_mod
from . import engine as EN
from . import fragments as F
from . import mpi
from . import netmodel as N
from .errors import MpnetError, ParseError, ValidationFailed

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_INVALID = 2
EXIT_LIMIT = 3

DEFAULT_MAX_STATES = 1_000_000


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(message)


def _max_states_default() -> int:
    raw = os.environ.get("MPNET_MAX_STATES")
    if raw is None:
        return DEFAULT_MAX_STATES
    try:
        return int(raw)
    except ValueError:
        raise _UsageError(f"MPNET_MAX_STATES is not an integer: {raw!r}")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="mpnet", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    b = sub.add_parser("build", help="parse and expand a program into a net")
    b.add_argument("source", nargs="?",
                   help=".mpl file, or a bundled example name (v1/v2/v3)")
    b.add_argument("--fragment", action="append", default=[],
                   metavar="FILE", help="annotated fragment file; one area each")
    b.add_argument("-n", "--ranks", type=int, help="number of ranks")
    b.add_argument("-o", "--output", help="output net JSON (default stdout)")

    d = sub.add_parser("dot", help="export a net to DOT")
    d.add_argument("net", help="net JSON file")
    d.add_argument("--area", type=int, help="restrict to one area address")
    d.add_argument("--flat", action="store_true",
                   help="export the flattened executable net")
    d.add_argument("--state", type=int, metavar="STEP",
                   help="overlay the marking after STEP steps of --trace "
                        "(0 = initial marking)")
    d.add_argument("--trace", help="trace JSONL used with --state")
    d.add_argument("-o", "--output", help="output DOT file (default stdout)")

    e = sub.add_parser("explore", help="exhaustive state-space exploration")
    e.add_argument("net", help="net JSON file")
    e.add_argument("--max-states", type=int, default=None)
    e.add_argument("--max-depth", type=int, default=None)
    e.add_argument("--report", choices=("orders", "deadlocks", "graph"),
                   default="orders")
    e.add_argument("--figures", metavar="DIR",
                   help="also render report figures into DIR")
    e.add_argument("-o", "--output", help="report file (default stdout)")

    r = sub.add_parser("run", help="simulate one run")
    r.add_argument("net", help="net JSON file")
    r.add_argument("--seed", type=int, default=0)
    r.add_argument("--max-steps", type=int, default=10_000)
    r.add_argument("--trace", help="write the trace as JSON lines")
    r.add_argument("--replay", help="replay a recorded trace instead of running")

    s = sub.add_parser("serve", help="serve the interactive simulation API")
    s.add_argument("net", nargs="?", help="net JSON preloaded as a session")
    s.add_argument("--port", type=int, default=8000)
    s.add_argument("--host", default="127.0.0.1")

    g = sub.add_parser("programs", help="bundled example programs")
    g.add_argument("action", choices=("list", "show", "export"))
    g.add_argument("name", nargs="?", help="program name (for show)")
    g.add_argument("--dir", default=".", help="target directory (for export)")
    return p


def _write(text: str, output) -> None:
    if output:
        Path(output).write_text(text)
    else:
        sys.stdout.write(text)


def _load_net(path: str) -> N.MPNet:
    with open(path) as fh:
        doc = json.load(fh)
    return N.from_json(doc)


def _flatten(net: N.MPNet) -> N.FlatNet:
    return N.assemble_flat(net)


def _cmd_build(args) -> int:
    if bool(args.source) == bool(args.fragment):
        raise _UsageError("give either a program source or --fragment files")
    if args.source:
        if args.ranks is None:
            raise _UsageError("-n/--ranks is required when building a program")
        if args.source in ("v1", "v2", "v3") or args.source in mpi.EXAMPLES:
            text = mpi.example_source(args.source)
        else:
            text = Path(args.source).read_text()
        net = mpi.expand(mpi.parse_program(text), args.ranks)
    else:
        net = N.MPNet()
        for address, path in enumerate(args.fragment):
            F.build_fragment_area(net, address, Path(path).read_text())
    defects = N.validate(net)
    if defects:
        for d in defects:
            print(f"defect: {d}", file=sys.stderr)
        return EXIT_INVALID
    _write(json.dumps(N.to_json(net), indent=2, sort_keys=True) + "\n",
           args.output)
    return EXIT_OK


def _cmd_dot(args) -> int:
    net = _load_net(args.net)
    state_dump = None
    target = _flatten(net) if args.flat or args.state is not None else net
    if args.state is not None:
        if not args.trace:
            raise _UsageError("--state requires --trace")
        engine = EN.Engine(target)
        records = _read_trace(args.trace)[:args.state]
        state = engine.replay(records)
        state_dump = engine.state_json(state)
    text = dot_mod.to_dot(target, area=args.area, state_dump=state_dump)
    _write(text, args.output)
    return EXIT_OK


def _read_trace(path: str) -> list[dict]:
    records = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if line:
                records.append(json.loads(line))
    return records


def _cmd_explore(args) -> int:
    net = _load_net(args.net)
    engine = EN.Engine(_flatten(net))
    max_states = args.max_states
    if max_states is None:
        max_states = _max_states_default()
    graph = engine.explore(max_states=max_states, max_depth=args.max_depth)

    lines = []
    if args.report == "orders":
        orders = sorted(EN.completion_orderings(graph))
        for order in orders:
            lines.append("-".join(str(x) for x in order) if order else "(none)")
    elif args.report == "deadlocks":
        has_exits = bool(mpi.exit_place_ids(engine.flat))
        for i in graph.terminals:
            ok = mpi.is_terminal_marking(engine, graph.states[i]) if has_exits else True
            kind = "terminal" if ok else "deadlock"
            lines.append(f"{kind} s{i} {engine.state_hash(graph.states[i])}")
    else:
        lines.append(f"states {len(graph.states)} edges {len(graph.edges)} "
                     f"terminals {len(graph.terminals)} "
                     f"limit {'hit' if graph.limit_hit else 'ok'}")
        for i, state in enumerate(graph.states):
            lines.append(f"s{i} depth {graph.depth[i]} {engine.state_hash(state)}")
        for src, cand, dst, events in graph.edges:
            ev = ""
            if events:
                ev = " events " + ";".join(
                    label + "=" + json.dumps(EN.V.to_json(value), sort_keys=True,
                                             separators=(",", ":"))
                    for label, value in events)
            lines.append(f"e s{src} -> s{dst} via {cand.key()}{ev}")

    _write("\n".join(lines) + "\n", args.output)

    if args.figures:
        from .figures import explore_figures
        out_degree: dict[int, int] = {}
        for src, _c, _dst, _ev in graph.edges:
            out_degree[src] = out_degree.get(src, 0) + 1
        degrees = [out_degree.get(i, 0) for i in range(len(graph.states))]
        for path in explore_figures(graph.depth, degrees, args.figures):
            print(f"figure: {path}", file=sys.stderr)

    return EXIT_LIMIT if graph.limit_hit else EXIT_OK


def _cmd_run(args) -> int:
    net = _load_net(args.net)
    engine = EN.Engine(_flatten(net))
    if args.replay:
        records = _read_trace(args.replay)
        final = engine.replay(records)
        print(f"replayed {len(records)} steps, final {engine.state_hash(final)}")
        return EXIT_OK
    trace, final = engine.run(chooser=EN.seeded_chooser(args.seed),
                              max_steps=args.max_steps)
    if args.trace:
        with open(args.trace, "w") as fh:
            for step in trace:
                fh.write(json.dumps(step.to_json(), sort_keys=True) + "\n")
    print(f"fired {len(trace)} steps, final {engine.state_hash(final)}")
    return EXIT_OK


def _cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    app = create_app()
    if args.net:
        app.state.sessions.create(_load_net(args.net))
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return EXIT_OK


def _cmd_programs(args) -> int:
    if args.action == "list":
        for name in mpi.EXAMPLES:
            print(name)
        return EXIT_OK
    if args.action == "show":
        if not args.name:
            raise _UsageError("programs show needs a name")
        sys.stdout.write(mpi.example_source(args.name))
        return EXIT_OK
    outdir = Path(args.dir)
    outdir.mkdir(parents=True, exist_ok=True)
    for name in mpi.EXAMPLES:
        (outdir / f"{name}.mpl").write_text(mpi.example_source(name))
        print(outdir / f"{name}.mpl")
    return EXIT_OK


_COMMANDS = {
    "build": _cmd_build,
    "dot": _cmd_dot,
    "explore": _cmd_explore,
    "run": _cmd_run,
    "serve": _cmd_serve,
    "programs": _cmd_programs,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return _COMMANDS[args.command](args)
    except _UsageError as err:
        print(f"usage error: {err}", file=sys.stderr)
        return EXIT_USAGE
    except (ParseError, ValidationFailed) as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_INVALID
    except FileNotFoundError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_INVALID
    except KeyError as err:
        print(f"error: unknown name {err}", file=sys.stderr)
        return EXIT_INVALID
    except MpnetError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
