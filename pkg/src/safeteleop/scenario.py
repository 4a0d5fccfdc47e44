"""Scenario description: plant gains, filter slopes, inputs, horizon, policy.

Scenarios are flat ``key = value`` text files; ``#`` starts a comment.

    sigma = 1.0
    k_P = 1.0
    k_D = 2.0
    beta = 10.0
    kappa1 = 3.0
    kappa2 = 3.0
    gamma_x = 1.0
    gamma_u = 20.0
    d = 1.0
    dt = 0.001
    T = 20.0
    x0 = -1.5, 0, 0, 0
    u0 = init-to-uhat            # or an explicit "a, b"
    u_h = piecewise 0: -0.3, 0 | 0.3: -1.8, 1.5 | 0.9: -0.3, 0
    mode = both                  # none | passivity | safety | both
    policy = halt                # halt | slack

``u_h`` also accepts ``constant a, b``, a bare vector (same as constant),
and ``live`` (optionally ``live a, b`` for the initial held value).
``u0 = init-to-uhat`` starts the extension on the nominal input
u_fb(x0) + u_h(0), so the filter sees no tracking transient at t = 0.

The defaults above are the package defaults: a plant at rest at
x1 = (-1.5, 0) outside the unit keep-out disk, driven by a settle / yank /
settle operator schedule whose final value (-0.3, 0) pulls toward a point
inside the disk.  Unknown keys are errors and name the offending key.
"""

from dataclasses import dataclass, field
from typing import Optional, Tuple

import numpy as np

from .filtering import FilterMode, parse_mode
from .tracking import ConstantInput, HumanInput, LiveInput, PiecewiseInput

Vec2 = Tuple[float, float]


class ScenarioError(ValueError):
    """Malformed scenario text or inconsistent field values."""


@dataclass(frozen=True)
class HumanInputSpec:
    """Declarative operator input: constant, piecewise schedule, or live.

    segments is ((t_0, value_0), ...); constant and live store one segment
    holding the (initial) value.
    """

    kind: str
    segments: Tuple[Tuple[float, Vec2], ...]

    def __post_init__(self):
        if self.kind not in ("constant", "piecewise", "live"):
            raise ScenarioError(f"scenario key 'u_h': unknown input kind {self.kind!r}")
        if not self.segments:
            raise ScenarioError("scenario key 'u_h': needs at least one segment")
        times = [t for t, _ in self.segments]
        if self.kind == "piecewise":
            if times[0] != 0.0:
                raise ScenarioError("scenario key 'u_h': piecewise schedule must start at t = 0")
            if any(b <= a for a, b in zip(times, times[1:])):
                raise ScenarioError("scenario key 'u_h': piecewise times must increase strictly")
        for _, v in self.segments:
            if len(v) != 2 or not all(np.isfinite(c) for c in v):
                raise ScenarioError("scenario key 'u_h': values must be finite 2-vectors")

    def value_at_start(self) -> Vec2:
        return self.segments[0][1]

    def make(self) -> HumanInput:
        if self.kind == "constant":
            return ConstantInput(np.array(self.segments[0][1]))
        if self.kind == "piecewise":
            return PiecewiseInput([(t, np.array(v)) for t, v in self.segments])
        return LiveInput(np.array(self.segments[0][1]))


DEFAULT_SCHEDULE = HumanInputSpec(
    "piecewise",
    ((0.0, (-0.3, 0.0)), (0.3, (-1.8, 1.5)), (0.9, (-0.3, 0.0))),
)


@dataclass(frozen=True)
class Scenario:
    sigma: float = 1.0
    k_P: float = 1.0
    k_D: float = 2.0
    beta: float = 10.0
    kappa1: float = 3.0
    kappa2: float = 3.0
    gamma_x: float = 1.0
    gamma_u: float = 20.0
    d: float = 1.0
    x0: Tuple[float, float, float, float] = (-1.5, 0.0, 0.0, 0.0)
    u0: Optional[Vec2] = None  # None = init-to-uhat
    u_h: HumanInputSpec = field(default_factory=lambda: DEFAULT_SCHEDULE)
    mode: FilterMode = FilterMode.BOTH
    dt: float = 1e-3
    T: float = 20.0
    policy: str = "halt"
    u_h_clamp: float = 2.0

    def __post_init__(self):
        if isinstance(self.mode, str):
            try:
                object.__setattr__(self, "mode", parse_mode(self.mode))
            except ValueError as e:
                raise ScenarioError(f"scenario key 'mode': {e}") from None
        for key in ("sigma", "k_P", "k_D", "beta", "kappa1", "kappa2",
                    "gamma_x", "gamma_u", "d", "dt", "T", "u_h_clamp"):
            val = getattr(self, key)
            if not (np.isfinite(val) and val > 0):
                raise ScenarioError(f"scenario key {key!r}: must be a positive finite number, got {val!r}")
        if self.T < self.dt:
            raise ScenarioError("scenario key 'T': horizon shorter than one tick")
        if len(self.x0) != 4 or not all(np.isfinite(c) for c in self.x0):
            raise ScenarioError("scenario key 'x0': must be a finite 4-vector")
        if self.u0 is not None and (len(self.u0) != 2 or not all(np.isfinite(c) for c in self.u0)):
            raise ScenarioError("scenario key 'u0': must be a finite 2-vector or init-to-uhat")
        if self.policy not in ("halt", "slack"):
            raise ScenarioError(f"scenario key 'policy': expected halt or slack, got {self.policy!r}")

    def resolve_u0(self) -> np.ndarray:
        """Initial extension state; init-to-uhat puts u(0) on the nominal input."""
        if self.u0 is not None:
            return np.array(self.u0, dtype=float)
        x0 = np.array(self.x0, dtype=float)
        uh0 = np.array(self.u_h.value_at_start(), dtype=float)
        return -self.k_P * x0[0:2] - self.k_D * x0[2:4] + uh0


def default_scenario(**overrides) -> Scenario:
    return Scenario(**overrides)


def preset_scenario(name: str) -> Scenario:
    """Named presets: the default scenario with the mode each figure uses."""
    modes = {"fig3": FilterMode.NONE, "fig4": FilterMode.PASSIVITY, "fig5": FilterMode.BOTH}
    try:
        return Scenario(mode=modes[name])
    except KeyError:
        raise ScenarioError(f"unknown preset {name!r}; expected fig3, fig4, or fig5") from None


# --- text format -----------------------------------------------------------

_FLOAT_KEYS = ("sigma", "k_P", "k_D", "beta", "kappa1", "kappa2",
               "gamma_x", "gamma_u", "d", "dt", "T", "u_h_clamp")


def _parse_floats(key: str, text: str, n: int) -> Tuple[float, ...]:
    parts = [p for p in text.replace(",", " ").split() if p]
    if len(parts) != n:
        raise ScenarioError(f"scenario key {key!r}: expected {n} numbers, got {text.strip()!r}")
    try:
        vals = tuple(float(p) for p in parts)
    except ValueError:
        raise ScenarioError(f"scenario key {key!r}: not a number in {text.strip()!r}") from None
    return vals


def _parse_uh(text: str) -> HumanInputSpec:
    s = text.strip()
    if s.startswith("piecewise"):
        body = s[len("piecewise"):].strip()
        if not body:
            raise ScenarioError("scenario key 'u_h': empty piecewise schedule")
        segments = []
        for part in body.split("|"):
            head, sep, rest = part.partition(":")
            if not sep:
                raise ScenarioError(f"scenario key 'u_h': segment {part.strip()!r} needs 't: a, b'")
            (t,) = _parse_floats("u_h", head, 1)
            segments.append((t, _parse_floats("u_h", rest, 2)))
        return HumanInputSpec("piecewise", tuple(segments))
    if s.startswith("constant"):
        return HumanInputSpec("constant", ((0.0, _parse_floats("u_h", s[len("constant"):], 2)),))
    if s == "live":
        return HumanInputSpec("live", ((0.0, (0.0, 0.0)),))
    if s.startswith("live"):
        return HumanInputSpec("live", ((0.0, _parse_floats("u_h", s[len("live"):], 2)),))
    return HumanInputSpec("constant", ((0.0, _parse_floats("u_h", s, 2)),))


def parse_scenario(text: str) -> Scenario:
    """Parse scenario text; raises ScenarioError naming the offending key."""
    fields = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, val = line.partition("=")
        key, val = key.strip(), val.strip()
        if not sep or not key:
            raise ScenarioError(f"scenario line {lineno}: expected 'key = value', got {raw.strip()!r}")
        if key in fields:
            raise ScenarioError(f"scenario key {key!r}: given twice")
        if key in _FLOAT_KEYS:
            fields[key] = _parse_floats(key, val, 1)[0]
        elif key == "x0":
            fields[key] = _parse_floats(key, val, 4)
        elif key == "u0":
            fields[key] = None if val.replace("û", "uhat") == "init-to-uhat" else _parse_floats(key, val, 2)
        elif key == "u_h":
            fields[key] = _parse_uh(val)
        elif key == "mode":
            try:
                fields[key] = parse_mode(val)
            except ValueError as e:
                raise ScenarioError(f"scenario key 'mode': {e}") from None
        elif key == "policy":
            fields[key] = val.strip().lower()
        else:
            raise ScenarioError(f"unknown scenario key {key!r}")
    return Scenario(**fields)


def load_scenario(path: str) -> Scenario:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_scenario(fh.read())


def _fmt_vec(v) -> str:
    return ", ".join(repr(float(c)) for c in v)


def serialize_scenario(sc: Scenario) -> str:
    """Canonical text for a scenario; parse(serialize(sc)) == sc."""
    lines = [f"{key} = {getattr(sc, key)!r}" for key in _FLOAT_KEYS]
    lines.append(f"x0 = {_fmt_vec(sc.x0)}")
    lines.append("u0 = init-to-uhat" if sc.u0 is None else f"u0 = {_fmt_vec(sc.u0)}")
    if sc.u_h.kind == "piecewise":
        body = " | ".join(f"{t!r}: {_fmt_vec(v)}" for t, v in sc.u_h.segments)
        lines.append(f"u_h = piecewise {body}")
    elif sc.u_h.kind == "constant":
        lines.append(f"u_h = constant {_fmt_vec(sc.u_h.segments[0][1])}")
    else:
        lines.append(f"u_h = live {_fmt_vec(sc.u_h.segments[0][1])}")
    lines.append(f"mode = {sc.mode.value}")
    lines.append(f"policy = {sc.policy}")
    return "\n".join(lines) + "\n"


def dump_scenario(sc: Scenario, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(serialize_scenario(sc))
