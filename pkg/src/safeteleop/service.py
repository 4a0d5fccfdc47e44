"""Live teleoperation service: the filtered simulation at wall-clock rate.

One asyncio task owns the simulation clock (500 ticks/s, dt = 2e-3,
wall-synchronized); connection handlers run concurrently on the same event
loop and communicate with the control task only through (a) the latest-value
u_h cell of the live input and (b) a command mailbox drained atomically
between ticks.  Every 10th tick a StateFrame is broadcast (50 frames/s);
broadcast never blocks the control task — each client has a bounded send
queue that drops its oldest frame on overflow.

Wire format: one JSON object per message, canonical encoding (fixed key
order, ``,``/``:`` separators, shortest round-trip floats, non-finite
numbers rejected in both directions).  Server messages carry a ``kind``
discriminator: ``hello`` (greeting with the active scenario), ``frame``
(StateFrame), ``error`` (per-message reply; the connection stays open).
Client commands: ``set_human_input``, ``set_mode``, ``set_gains``,
``reset``, ``pause``, ``resume``.

An infeasible filter tick under the halt policy is broadcast explicitly and
pauses the simulation (a ``reset`` or ``resume`` re-arms it).
"""

import asyncio
import json
import math
import time
from dataclasses import dataclass, replace
from typing import Dict, List, Optional, Tuple

import numpy as np

from .filtering import FilterMode, parse_mode
from .scenario import Scenario
from .sim import Stepper
from .tracking import LiveInput

SCHEMA_VERSION = 1
SERVICE_DT = 2e-3
BROADCAST_EVERY = 10  # 500 ticks/s -> 50 frames/s
SEND_QUEUE_FRAMES = 64

GAIN_KEYS = ("k_P", "k_D", "beta", "kappa1", "kappa2", "gamma_x", "gamma_u")


# --- codec -------------------------------------------------------------------

@dataclass(frozen=True)
class StateFrame:
    """One broadcast sample of the running closed loop (wire type)."""

    seq: int
    t: float
    x1: Tuple[float, float]
    x2: Tuple[float, float]
    u: Tuple[float, float]
    uhat: Tuple[float, float]
    v_star: Tuple[float, float]
    h_x: float
    h_u: float
    mode: str
    qp_status: str
    active: Tuple[str, ...]
    wall_ms: float


def _reject_constant(name: str):
    raise ValueError(f"non-finite number {name!r} rejected")


def _loads_strict(data) -> dict:
    obj = json.loads(data, parse_constant=_reject_constant)
    if not isinstance(obj, dict):
        raise ValueError("message must be a JSON object")
    return obj


def _finite_pair(obj, key: str) -> Tuple[float, float]:
    v = obj[key]
    if (not isinstance(v, list) or len(v) != 2
            or not all(isinstance(c, (int, float)) and not isinstance(c, bool) for c in v)
            or not all(math.isfinite(float(c)) for c in v)):
        raise ValueError(f"field {key!r} must be a finite 2-vector")
    return float(v[0]), float(v[1])


def _finite_scalar(obj, key: str) -> float:
    v = obj[key]
    if not isinstance(v, (int, float)) or isinstance(v, bool) or not math.isfinite(float(v)):
        raise ValueError(f"field {key!r} must be a finite number")
    return float(v)


def encode_frame(f: StateFrame) -> bytes:
    """Canonical frame bytes: fixed key order, compact separators."""
    obj = {
        "kind": "frame",
        "seq": f.seq,
        "t": f.t,
        "x1": list(f.x1),
        "x2": list(f.x2),
        "u": list(f.u),
        "uhat": list(f.uhat),
        "v_star": list(f.v_star),
        "h_x": f.h_x,
        "h_u": f.h_u,
        "mode": f.mode,
        "qp_status": f.qp_status,
        "active": list(f.active),
        "wall_ms": f.wall_ms,
    }
    return json.dumps(obj, separators=(",", ":"), allow_nan=False).encode()


_FRAME_KEYS = frozenset({"kind", "seq", "t", "x1", "x2", "u", "uhat", "v_star",
                         "h_x", "h_u", "mode", "qp_status", "active", "wall_ms"})


def decode_frame(data) -> StateFrame:
    """Strict frame decode: exact key set, finite floats, typed fields."""
    obj = _loads_strict(data)
    if set(obj) != _FRAME_KEYS:
        extra = set(obj) - _FRAME_KEYS
        missing = _FRAME_KEYS - set(obj)
        raise ValueError(f"frame keys mismatch: extra={sorted(extra)} missing={sorted(missing)}")
    if obj["kind"] != "frame":
        raise ValueError(f"not a frame: kind={obj['kind']!r}")
    seq = obj["seq"]
    if not isinstance(seq, int) or isinstance(seq, bool) or seq < 0:
        raise ValueError("field 'seq' must be a nonnegative integer")
    active = obj["active"]
    if not isinstance(active, list) or not all(isinstance(s, str) for s in active):
        raise ValueError("field 'active' must be a list of strings")
    for key in ("mode", "qp_status"):
        if not isinstance(obj[key], str):
            raise ValueError(f"field {key!r} must be a string")
    return StateFrame(
        seq=seq,
        t=_finite_scalar(obj, "t"),
        x1=_finite_pair(obj, "x1"),
        x2=_finite_pair(obj, "x2"),
        u=_finite_pair(obj, "u"),
        uhat=_finite_pair(obj, "uhat"),
        v_star=_finite_pair(obj, "v_star"),
        h_x=_finite_scalar(obj, "h_x"),
        h_u=_finite_scalar(obj, "h_u"),
        mode=obj["mode"],
        qp_status=obj["qp_status"],
        active=tuple(active),
        wall_ms=_finite_scalar(obj, "wall_ms"),
    )


def scenario_payload(sc: Scenario) -> Dict:
    """Scenario as a canonical JSON-ready dict (hello greeting body)."""
    return {
        "sigma": sc.sigma, "k_P": sc.k_P, "k_D": sc.k_D, "beta": sc.beta,
        "kappa1": sc.kappa1, "kappa2": sc.kappa2,
        "gamma_x": sc.gamma_x, "gamma_u": sc.gamma_u,
        "d": sc.d, "dt": sc.dt, "T": sc.T,
        "x0": list(sc.x0),
        "u0": "init-to-uhat" if sc.u0 is None else list(sc.u0),
        "u_h": {"kind": sc.u_h.kind,
                "segments": [[t, list(v)] for t, v in sc.u_h.segments]},
        "mode": sc.mode.value,
        "policy": sc.policy,
        "u_h_clamp": sc.u_h_clamp,
    }


def encode_hello(sc: Scenario) -> bytes:
    obj = {"kind": "hello", "schema_version": SCHEMA_VERSION,
           "scenario": scenario_payload(sc)}
    return json.dumps(obj, separators=(",", ":"), allow_nan=False).encode()


def encode_error(message: str) -> bytes:
    return json.dumps({"kind": "error", "message": message},
                      separators=(",", ":")).encode()


_COMMAND_KEYS = {
    "set_human_input": {"kind", "u_h"},
    "set_mode": {"kind", "mode"},
    "set_gains": {"kind"} | set(GAIN_KEYS),  # kind plus any subset of gains
    "reset": {"kind", "x0"},                 # x0 optional
    "pause": {"kind"},
    "resume": {"kind"},
}


def decode_command(data) -> Dict:
    """Strict client-command decode; returns a normalized command dict.

    Schema and finiteness errors raise ValueError with a message suitable for
    an error reply (clamping is not an error and happens on apply).
    """
    obj = _loads_strict(data)
    kind = obj.get("kind")
    if kind not in _COMMAND_KEYS:
        raise ValueError(f"unknown command kind {kind!r}")
    allowed = _COMMAND_KEYS[kind]
    extra = set(obj) - allowed
    if extra:
        raise ValueError(f"unknown field(s) for {kind}: {sorted(extra)}")
    cmd: Dict = {"kind": kind}
    if kind == "set_human_input":
        if "u_h" not in obj:
            raise ValueError("set_human_input requires 'u_h'")
        try:
            cmd["u_h"] = _finite_pair(obj, "u_h")
        except ValueError:
            raise ValueError("non-finite input") from None
    elif kind == "set_mode":
        if "mode" not in obj:
            raise ValueError("set_mode requires 'mode'")
        try:
            cmd["mode"] = parse_mode(str(obj["mode"]))
        except ValueError as e:
            raise ValueError(str(e)) from None
    elif kind == "set_gains":
        gains = {}
        for key in GAIN_KEYS:
            if key in obj:
                val = _finite_scalar(obj, key)
                if val <= 0:
                    raise ValueError(f"field {key!r} must be positive")
                gains[key] = val
        if not gains:
            raise ValueError("set_gains requires at least one gain field")
        cmd["gains"] = gains
    elif kind == "reset":
        if "x0" in obj:
            x0 = obj["x0"]
            if (not isinstance(x0, list) or len(x0) != 4
                    or not all(isinstance(c, (int, float)) and not isinstance(c, bool) for c in x0)
                    or not all(math.isfinite(float(c)) for c in x0)):
                raise ValueError("field 'x0' must be a finite 4-vector")
            cmd["x0"] = tuple(float(c) for c in x0)
    return cmd


# --- tick-driven core --------------------------------------------------------

class ServiceCore:
    """Deterministic tick core: all simulation state, no I/O and no clock.

    tick(wall_ms) advances one control tick and returns a StateFrame on
    broadcast ticks (every BROADCAST_EVERY-th tick, and always on an
    infeasible tick), else None.  Replaying a recorded command script against
    a paused-clock core with scripted wall_ms values reproduces the frame
    sequence bitwise.
    """

    def __init__(self, base: Scenario):
        self.scenario = replace(base, dt=SERVICE_DT)
        self.live = LiveInput(np.array(self.scenario.u_h.value_at_start()))
        self.stepper = Stepper(self.scenario, hi=self.live)
        self.z = self.stepper.initial_state()
        self.t = 0.0
        self.tick_index = 0
        self.seq = 0
        self.paused = False
        self.halted = False

    @property
    def clamp(self) -> float:
        return self.scenario.u_h_clamp

    def hello_bytes(self) -> bytes:
        return encode_hello(self.scenario)

    def apply_command(self, cmd: Dict) -> None:
        """Apply one normalized command; called only between ticks."""
        kind = cmd["kind"]
        if kind == "set_human_input":
            c = self.clamp
            u = np.clip(np.array(cmd["u_h"]), -c, c)
            self.live.set(u)
        elif kind == "set_mode":
            self.stepper.mode = cmd["mode"]
            self.scenario = replace(self.scenario, mode=cmd["mode"])
        elif kind == "set_gains":
            self.scenario = replace(self.scenario, **cmd["gains"])
            self.stepper = Stepper(self.scenario, hi=self.live)
        elif kind == "reset":
            if "x0" in cmd:
                self.scenario = replace(self.scenario, x0=cmd["x0"])
                self.stepper = Stepper(self.scenario, hi=self.live)
            self.z = self.stepper.initial_state()
            self.t = 0.0
            self.tick_index = 0
            self.paused = False
            self.halted = False
        elif kind == "pause":
            self.paused = True
        elif kind == "resume":
            self.paused = False
            self.halted = False

    def tick(self, wall_ms: float) -> Optional[StateFrame]:
        """One control tick; returns the frame to broadcast, if any."""
        if self.paused:
            return None
        t = self.t
        dec = self.stepper.evaluate(self.z, t)
        infeasible = dec.status == "infeasible"
        emit = infeasible or (self.tick_index % BROADCAST_EVERY == 0)
        frame = None
        if emit:
            z = self.z
            frame = StateFrame(
                seq=self.seq, t=t,
                x1=(float(z[0]), float(z[1])), x2=(float(z[2]), float(z[3])),
                u=(float(z[4]), float(z[5])),
                uhat=(float(dec.uhat[0]), float(dec.uhat[1])),
                v_star=(float(dec.v[0]), float(dec.v[1])),
                h_x=dec.h_x, h_u=dec.h_u,
                mode=self.stepper.mode.value, qp_status=dec.status,
                active=dec.active, wall_ms=wall_ms)
            self.seq += 1
        if infeasible:
            # Halt policy: freeze and wait for reset/resume; the frame above
            # is the explicit infeasibility broadcast.
            self.paused = True
            self.halted = True
            return frame
        self.z = self.stepper.advance(self.z, t, dec.v)
        self.tick_index += 1
        self.t = self.tick_index * self.scenario.dt
        return frame


# --- asyncio server ----------------------------------------------------------

class _Client:
    """Per-connection bounded send queue; overflow drops the oldest frame."""

    def __init__(self, ws):
        self.ws = ws
        self.queue: asyncio.Queue = asyncio.Queue(maxsize=SEND_QUEUE_FRAMES)

    def offer(self, payload: str) -> None:
        while True:
            try:
                self.queue.put_nowait(payload)
                return
            except asyncio.QueueFull:
                try:
                    self.queue.get_nowait()
                except asyncio.QueueEmpty:
                    pass

    async def sender(self) -> None:
        while True:
            payload = await self.queue.get()
            await self.ws.send(payload)


async def serve_forever(host: str, port: int, base_scenario: Scenario) -> None:
    """Bind and run the service until cancelled."""
    import websockets

    core = ServiceCore(base_scenario)
    clients: set = set()
    mailbox: List[Tuple[Dict, _Client]] = []

    async def handler(ws):
        # Payloads go out decoded to str so they ride as WebSocket text
        # frames: browser clients receive string data, not Blobs.
        client = _Client(ws)
        await ws.send(core.hello_bytes().decode())
        clients.add(client)
        send_task = asyncio.ensure_future(client.sender())
        try:
            async for raw in ws:
                try:
                    cmd = decode_command(raw)
                except ValueError as e:
                    await ws.send(encode_error(str(e)).decode())
                    continue
                mailbox.append((cmd, client))
        finally:
            clients.discard(client)
            send_task.cancel()

    async def control_loop():
        loop = asyncio.get_running_loop()
        next_time = loop.time()
        while True:
            if mailbox:
                pending, mailbox[:] = mailbox[:], []
                for cmd, _origin in pending:
                    core.apply_command(cmd)
            frame = core.tick(time.time() * 1000.0)
            if frame is not None:
                payload = encode_frame(frame).decode()
                for client in clients:
                    client.offer(payload)
            next_time += SERVICE_DT
            delay = next_time - loop.time()
            if delay > 0:
                await asyncio.sleep(delay)
            else:
                next_time = loop.time()  # fell behind; resynchronize

    server = await websockets.serve(handler, host, port)
    print(f"RESULT command=serve status=listening bind={host}:{port} "
          f"dt={SERVICE_DT} frames_per_s={1.0 / SERVICE_DT / BROADCAST_EVERY:.0f}")
    try:
        await control_loop()
    finally:
        server.close()
        await server.wait_closed()
