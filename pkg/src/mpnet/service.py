"""Session-oriented simulation API.

Load a net into a session, inspect the marking, list enabled candidates,
fire one by index (guarded by the state hash the client saw), undo,
reset, export traces.  Sessions are in-memory and evicted after idling.
"""

from __future__ import annotations

import os
import threading
import time
import uuid
from pathlib import Path
from typing import Optional

from fastapi import Body, FastAPI, HTTPException, Query
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import PlainTextResponse
from fastapi.staticfiles import StaticFiles

from . import dot as dot_mod
from . import engine as EN
from . import netmodel as N
from . import values as V
from .errors import MpnetError

IDLE_TTL_SECONDS = 30 * 60


class Session:
    def __init__(self, sid: str, net: N.MPNet):
        self.id = sid
        self.net = net
        self.flat = N.assemble_flat(net)
        self.engine = EN.Engine(self.flat)
        self.states = [self.engine.initial_state()]
        self.trace: list[EN.TraceStep] = []
        self.lock = threading.RLock()
        self.last_access = time.monotonic()

    @property
    def state(self) -> EN.SimState:
        return self.states[-1]

    def touch(self):
        self.last_access = time.monotonic()


class SessionStore:
    def __init__(self, ttl: float = IDLE_TTL_SECONDS):
        self.ttl = ttl
        self._sessions: dict[str, Session] = {}
        self._lock = threading.Lock()

    def create(self, net: N.MPNet) -> Session:
        session = Session(uuid.uuid4().hex[:12], net)
        with self._lock:
            self._evict()
            self._sessions[session.id] = session
        return session

    def get(self, sid: str) -> Session:
        with self._lock:
            self._evict()
            session = self._sessions.get(sid)
        if session is None:
            raise HTTPException(404, f"unknown session '{sid}'")
        session.touch()
        return session

    def ids(self) -> list[str]:
        with self._lock:
            self._evict()
            return sorted(self._sessions)

    def _evict(self):
        now = time.monotonic()
        for sid in [s for s, sess in self._sessions.items()
                    if now - sess.last_access > self.ttl]:
            del self._sessions[sid]


def _state_body(session: Session) -> dict:
    engine = session.engine
    state = session.state
    memories = {}
    for pid, place in engine.flat.places.items():
        if N.base_name(place.name) != "mem":
            continue
        pool = engine.pool_of(state, engine.place_index[pid])
        if pool:
            memories[pid] = V.to_json(pool[0][0])
    return {
        "hash": engine.state_hash(state),
        "step": len(session.trace),
        "places": engine.state_json(state),
        "memories": memories,
    }


def _candidates_body(session: Session) -> list[dict]:
    out = []
    for i, c in enumerate(session.engine.enabled(session.state)):
        transition = session.flat.transitions[c.transition]
        out.append({
            "index": i,
            "transition": c.transition,
            "transitionName": transition.name,
            "area": transition.area,
            "binding": c.binding_json(),
            "picks": c.picks_json(),
            "selections": [{"arc": arc_id,
                            "tokens": [V.to_json(v) for v in taken],
                            "readonly": readonly}
                           for arc_id, taken, readonly in c.selections],
            "key": c.key(),
        })
    return out


def create_app(ui_dir: Optional[str] = None) -> FastAPI:
    app = FastAPI(title="mpnet simulation service")
    app.add_middleware(CORSMiddleware, allow_origins=["*"],
                       allow_methods=["*"], allow_headers=["*"])
    store = SessionStore()
    app.state.sessions = store

    @app.get("/api/examples")
    def examples():
        from . import mpi
        return {"examples": list(mpi.EXAMPLES) + ["v1", "v2", "v3"]}

    @app.post("/api/examples/{name}/sessions")
    def create_example_session(name: str, n: int = Query(3, ge=2)):
        from . import mpi
        try:
            net = mpi.build_example(name, n)
        except KeyError:
            raise HTTPException(404, f"unknown example '{name}'")
        session = store.create(net)
        return {"sessionId": session.id, "state": _state_body(session)}

    @app.get("/sessions")
    def list_sessions():
        return {"sessions": store.ids()}

    @app.post("/sessions", status_code=201)
    def create_session(net_json: dict = Body(...)):
        try:
            net = N.from_json(net_json)
            session = store.create(net)
        except (MpnetError, KeyError, TypeError, ValueError) as err:
            raise HTTPException(422, f"invalid net: {err}")
        return {"sessionId": session.id, "state": _state_body(session)}

    @app.get("/sessions/{sid}/state")
    def get_state(sid: str):
        session = store.get(sid)
        with session.lock:
            return _state_body(session)

    @app.get("/sessions/{sid}/enabled")
    def get_enabled(sid: str):
        session = store.get(sid)
        with session.lock:
            return {"stateHash": session.engine.state_hash(session.state),
                    "candidates": _candidates_body(session)}

    @app.post("/sessions/{sid}/fire")
    def fire(sid: str, body: dict = Body(...)):
        session = store.get(sid)
        index = body.get("candidateIndex")
        if not isinstance(index, int):
            raise HTTPException(422, "candidateIndex must be an integer")
        with session.lock:
            engine = session.engine
            current_hash = engine.state_hash(session.state)
            guard = body.get("stateHash")
            if guard is not None and guard != current_hash:
                raise HTTPException(409, "stale candidate: state changed")
            candidates = engine.enabled(session.state)
            if not 0 <= index < len(candidates):
                raise HTTPException(409, f"no candidate {index} in this state")
            c = candidates[index]
            nxt, events = engine.fire(session.state, c)
            step = EN.TraceStep(
                len(session.trace), c.transition, c.binding_json(),
                c.picks_json(), current_hash, engine.state_hash(nxt),
                [{"label": label, "fields": V.to_json(v)}
                 for label, v in events])
            session.states.append(nxt)
            session.trace.append(step)
            return {"state": _state_body(session),
                    "fired": step.to_json()}

    @app.post("/sessions/{sid}/undo")
    def undo(sid: str):
        session = store.get(sid)
        with session.lock:
            if len(session.states) > 1:
                session.states.pop()
                session.trace.pop()
            return _state_body(session)

    @app.post("/sessions/{sid}/reset")
    def reset(sid: str):
        session = store.get(sid)
        with session.lock:
            session.states = session.states[:1]
            session.trace = []
            return _state_body(session)

    @app.get("/sessions/{sid}/net")
    def get_net(sid: str, area: Optional[int] = None,
                format: str = Query("json", pattern="^(json|dot)$"),
                flat: bool = False):
        session = store.get(sid)
        with session.lock:
            if format == "dot":
                target = session.flat if flat else session.net
                dump = session.engine.state_json(session.state) if flat else None
                return PlainTextResponse(
                    dot_mod.to_dot(target, area=area, state_dump=dump))
            doc = N.to_json(session.net)
            if area is not None:
                doc["areas"] = [a for a in doc["areas"] if a["address"] == area]
            return doc

    @app.get("/sessions/{sid}/flat")
    def get_flat(sid: str):
        """Flattened structure the engine executes: the UI renders this."""
        session = store.get(sid)
        flat = session.flat
        return {
            "addressSpace": [{"address": i, "name": n}
                             for i, n in enumerate(flat.address_names)],
            "places": [{"id": p.id, "name": p.name, "kind": p.kind,
                        "area": p.area,
                        "compoundLabel": p.compound_label,
                        "discipline": flat.disciplines[pid]}
                       for pid, p in sorted(flat.places.items())],
            "transitions": [{"id": t.id, "name": t.name, "area": t.area}
                            for tid, t in sorted(flat.transitions.items())],
            "arcs": [{"id": a.id, "source": a.source, "target": a.target,
                      "category": a.category,
                      "inscription": a.inscription.pretty()
                      if a.inscription else None}
                     for a in flat.arcs],
        }

    @app.get("/sessions/{sid}/trace")
    def get_trace(sid: str):
        session = store.get(sid)
        with session.lock:
            return {"initialHash": session.engine.state_hash(session.states[0]),
                    "steps": [s.to_json() for s in session.trace]}

    ui = ui_dir or os.environ.get("MPNET_UI_DIR")
    if ui is None:
        bundled = Path(__file__).resolve().parent.parent.parent / "frontend" / "dist"
        ui = str(bundled) if bundled.is_dir() else None
    if ui and Path(ui).is_dir():
        app.mount("/", StaticFiles(directory=ui, html=True), name="ui")

    return app
