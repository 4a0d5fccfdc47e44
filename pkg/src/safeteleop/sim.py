"""Fixed-step closed-loop simulation of the filtered teleoperation system.

State z = (x1, x2, u) in R^6 advances with classical RK4 at a fixed tick dt.
Within one tick the plant field f and the nominal extension input phi are
re-evaluated at every RK4 stage, while the tick's inputs — the held operator
value u_h(t_k), its (zero) derivative, and the filter correction v*_k — are
frozen at the tick start: the correction is a zero-order hold.  Holding phi
itself across stages would degrade u to first order and break the tracking
envelope; sampling u_h at stage times would straddle schedule jumps
differently at different dt.  Freezing only the tick inputs keeps full
fourth-order stage arithmetic, so halving dt moves the final state by
machine-epsilon-level amounts when schedule switches land on tick boundaries.

The trace records n+1 rows for n ticks: row k holds the state at t_k = k*dt
together with the filter evaluation at t_k; the terminal row carries a final
evaluation that is never applied.  A tick whose QP is infeasible (and not
repaired by the slack policy) is recorded and the run halts with a partial
trace.
"""

import csv
from dataclasses import dataclass
from functools import cached_property
from typing import Callable, List, Optional, Sequence, Tuple, Union

import numpy as np

from .barrier import ClassK, DiskBarrier
from .dynamics import Array, DoubleIntegratorDrag
from .filtering import FilterDecision, decide
from .passivity import PassivityBarrier, QuadraticStorage
from .scenario import Scenario
from .tracking import HumanInput, PDLaw, TrackingGain


def rk4_step(deriv: Callable[[Array, float], Array], z: Array, t: float, dt: float) -> Array:
    """One classical Runge-Kutta step of z' = deriv(z, t)."""
    k1 = deriv(z, t)
    k2 = deriv(z + 0.5 * dt * k1, t + 0.5 * dt)
    k3 = deriv(z + 0.5 * dt * k2, t + 0.5 * dt)
    k4 = deriv(z + dt * k3, t + dt)
    return z + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


class Stepper:
    """Per-scenario closed forms: evaluate the filter at a state, advance one tick.

    The evaluation computes phi and the barrier levels with the same closed
    forms the calculus modules define (unit tests pin the agreement) and
    delegates rows/QP/slack to filtering.decide, so the constrained step has
    a single implementation.
    """

    def __init__(self, sc: Scenario, hi: Optional[HumanInput] = None):
        self.scenario = sc
        self.model = DoubleIntegratorDrag(sigma=sc.sigma)
        self.bar = DiskBarrier(model=self.model, d=sc.d, kappa1=sc.kappa1,
                               kappa2=sc.kappa2, gamma_x=ClassK(sc.gamma_x))
        self.pb = PassivityBarrier(storage=QuadraticStorage(), gamma_u=ClassK(sc.gamma_u))
        self.law = PDLaw(k_P=sc.k_P, k_D=sc.k_D, model=self.model)
        self.gain = TrackingGain(beta=sc.beta)
        self.hi = hi if hi is not None else sc.u_h.make()
        self.mode = sc.mode
        self.policy = sc.policy
        self.dt = sc.dt
        # Scalars bound once; the tick loop runs tens of thousands of times.
        self._sigma = sc.sigma
        self._kP = sc.k_P
        self._kD = sc.k_D
        self._beta = sc.beta
        self._k1 = sc.kappa1
        self._k2 = sc.kappa2
        self._d2 = sc.d * sc.d

    def initial_state(self) -> Array:
        x0 = np.array(self.scenario.x0, dtype=float)
        if self.scenario.u0 is not None:
            u0 = np.array(self.scenario.u0, dtype=float)
        else:
            u0 = self.law.u_fb(x0) + self.hi.u_h(0.0)
        return np.concatenate([x0, u0])

    def evaluate(self, z: Array, t: float) -> FilterDecision:
        """Filter decision at state z and time t (nothing is advanced)."""
        sigma, kP, kD, beta = self._sigma, self._kP, self._kD, self._beta
        x1, x2, u = z[0:2], z[2:4], z[4:6]
        uh = self.hi.u_h(t)
        uhd = self.hi.u_h_dot(t)

        fx2 = u - sigma * x2
        ufb = -kP * x1 - kD * x2
        lf = -kP * x2 - kD * fx2
        ph = lf + uhd + beta * (ufb + uh - u)
        uhat = ufb + uh

        s11 = float(x1 @ x1)
        s12 = float(x1 @ x2)
        s22 = float(x2 @ x2)
        h = s11 - self._d2
        hp = 2.0 * s12 + self._k1 * h
        hpdot = 2.0 * s22 + 2.0 * float(x1 @ fx2) + self._k1 * (2.0 * s12)
        hpp = hpdot + self._k2 * hp
        hu = 2.0 * sigma * s22 - 2.0 * s12 - float(x2 @ u)

        return decide(self.model, self.bar, self.pb, self.mode,
                      z[0:4], u, ph, uhat, h, hp, hpp, hu, self.policy)

    def advance(self, z: Array, t: float, v: Array) -> Array:
        """RK4 step from t with the tick's inputs u_h(t), u_h_dot(t), v frozen."""
        sigma, kP, kD, beta = self._sigma, self._kP, self._kD, self._beta
        uh = self.hi.u_h(t)
        uhd = self.hi.u_h_dot(t)

        def deriv(zz: Array, _s: float) -> Array:
            x2 = zz[2:4]
            u = zz[4:6]
            fx2 = u - sigma * x2
            ph = -kP * x2 - kD * fx2 + uhd + beta * (-kP * zz[0:2] - kD * x2 + uh - u)
            out = np.empty(6)
            out[0:2] = x2
            out[2:4] = fx2
            out[4:6] = ph + v
            return out

        return rk4_step(deriv, z, t, self.dt)


@dataclass(frozen=True)
class TraceRecord:
    """One trace row: state at t plus the filter evaluation made there."""

    t: float
    x1: Array
    x2: Array
    u: Array
    uhat: Array
    v: Array
    h_x: float
    h_x_p: float
    h_x_pp: float
    h_u: float
    status: str
    active: Tuple[str, ...]
    slack: float
    phi: Optional[Array] = None  # in-memory only; not a CSV column


def _record(t: float, z: Array, dec: FilterDecision) -> TraceRecord:
    return TraceRecord(t=t, x1=z[0:2], x2=z[2:4], u=z[4:6],
                       uhat=dec.uhat, v=dec.v,
                       h_x=dec.h_x, h_x_p=dec.h_x_p, h_x_pp=dec.h_x_pp, h_u=dec.h_u,
                       status=dec.status, active=dec.active, slack=dec.slack,
                       phi=dec.phi)


@dataclass
class SimResult:
    scenario: Scenario
    records: List[TraceRecord]
    halted: bool = False

    @cached_property
    def t(self) -> np.ndarray:
        return np.array([r.t for r in self.records])

    @cached_property
    def x1(self) -> np.ndarray:
        return np.array([r.x1 for r in self.records])

    @cached_property
    def x2(self) -> np.ndarray:
        return np.array([r.x2 for r in self.records])

    @cached_property
    def u(self) -> np.ndarray:
        return np.array([r.u for r in self.records])

    @cached_property
    def v(self) -> np.ndarray:
        return np.array([r.v for r in self.records])

    @cached_property
    def h_x(self) -> np.ndarray:
        return np.array([r.h_x for r in self.records])

    @cached_property
    def h_x_pp(self) -> np.ndarray:
        return np.array([r.h_x_pp for r in self.records])

    @cached_property
    def h_u(self) -> np.ndarray:
        return np.array([r.h_u for r in self.records])

    @property
    def final_state(self) -> Array:
        r = self.records[-1]
        return np.concatenate([r.x1, r.x2, r.u])


def run_scenario(sc: Scenario, hi: Optional[HumanInput] = None) -> SimResult:
    """Simulate the scenario over [0, T] and return the full trace.

    Tick times are t_k = k*dt (never accumulated), so runs at dt and dt/2
    share their grid points exactly.  An unrepaired infeasible tick is
    recorded and the run halts there with a partial trace.
    """
    stepper = Stepper(sc, hi)
    z = stepper.initial_state()
    n = int(round(sc.T / sc.dt))
    records: List[TraceRecord] = []
    halted = False
    for k in range(n):
        t = k * sc.dt
        dec = stepper.evaluate(z, t)
        records.append(_record(t, z, dec))
        if dec.status == "infeasible":
            halted = True
            break
        z = stepper.advance(z, t, dec.v)
    else:
        t = n * sc.dt
        records.append(_record(t, z, stepper.evaluate(z, t)))
    return SimResult(scenario=sc, records=records, halted=halted)


# --- trace CSV ---------------------------------------------------------------

TRACE_COLUMNS = ["t", "x1_1", "x1_2", "x2_1", "x2_2", "u_1", "u_2",
                 "uhat_1", "uhat_2", "v_1", "v_2",
                 "h_x", "h_x_p", "h_x_pp", "h_u", "status", "active", "slack"]


def _g(x: float) -> str:
    return format(float(x), ".17g")


def write_trace(result: Union[SimResult, Sequence[TraceRecord]], path: str) -> None:
    """Write trace CSV; floats as %.17g so the file round-trips bitwise."""
    records = result.records if isinstance(result, SimResult) else result
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(TRACE_COLUMNS)
        for r in records:
            w.writerow([_g(r.t),
                        _g(r.x1[0]), _g(r.x1[1]), _g(r.x2[0]), _g(r.x2[1]),
                        _g(r.u[0]), _g(r.u[1]), _g(r.uhat[0]), _g(r.uhat[1]),
                        _g(r.v[0]), _g(r.v[1]),
                        _g(r.h_x), _g(r.h_x_p), _g(r.h_x_pp), _g(r.h_u),
                        r.status, "+".join(r.active), _g(r.slack)])


def read_trace(path: str) -> List[TraceRecord]:
    with open(path, "r", newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != TRACE_COLUMNS:
            raise ValueError(f"not a trace file: header {header!r}")
        out = []
        for row in reader:
            vals = [float(s) for s in row[0:15]]
            active = tuple(row[16].split("+")) if row[16] else ()
            out.append(TraceRecord(
                t=vals[0],
                x1=np.array(vals[1:3]), x2=np.array(vals[3:5]), u=np.array(vals[5:7]),
                uhat=np.array(vals[7:9]), v=np.array(vals[9:11]),
                h_x=vals[11], h_x_p=vals[12], h_x_pp=vals[13], h_u=vals[14],
                status=row[15], active=active, slack=float(row[17])))
        return out
