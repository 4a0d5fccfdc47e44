"""Per-tick safety/passivity filter: rows, QP, and the slack fallback.

Each control tick evaluates the nominal extension input phi, assembles the
constraint rows selected by the mode (safety first, then passivity), and
solves min ||v||^2 s.t. a_i . v <= b_i.  The applied extension input is
u_dot = phi + v*, so v* is the minimal correction to the nominal controller.

Infeasible ticks follow the scenario policy:

  halt   v* = 0, status "infeasible"; the driver stops the run.
  slack  relax only the passivity row by the smallest s >= 0 restoring
         feasibility (the safety row is never relaxed), re-solve, and record
         s.  For at most two rows s has a closed form: a degenerate passivity
         row needs s = -b_u; an antiparallel conflict a_u = -lam*a_x with
         lam = ||a_u||/||a_x|| needs s = -lam*b_x - b_u.
"""

import enum
from dataclasses import dataclass, replace
from typing import List, Tuple

import numpy as np

from .barrier import TAG_PASSIVITY, TAG_SAFETY, Array, ConstraintRow, DiskBarrier, eval_h_chain, safety_row
from .dynamics import SystemModel
from .passivity import PassivityBarrier, eval_hu, passivity_row
from .qpsolver import DEGENERATE_TOL, QpSolution, solve_min_norm
from .tracking import FeedbackLaw, HumanInput, TrackingGain, phi as phi_nominal, uhat


class FilterMode(enum.Enum):
    NONE = "none"
    PASSIVITY = "passivity"
    SAFETY = "safety"
    BOTH = "both"

    @property
    def wants_safety(self) -> bool:
        return self in (FilterMode.SAFETY, FilterMode.BOTH)

    @property
    def wants_passivity(self) -> bool:
        return self in (FilterMode.PASSIVITY, FilterMode.BOTH)


_MODE_SYNONYMS = {
    "none": FilterMode.NONE,
    "passivity": FilterMode.PASSIVITY,
    "passivityonly": FilterMode.PASSIVITY,
    "safety": FilterMode.SAFETY,
    "safetyonly": FilterMode.SAFETY,
    "both": FilterMode.BOTH,
}


def parse_mode(text: str) -> FilterMode:
    key = text.strip().lower().replace("_", "").replace("-", "")
    try:
        return _MODE_SYNONYMS[key]
    except KeyError:
        raise ValueError(f"unknown filter mode {text!r}; expected none, passivity, safety, or both") from None


@dataclass(frozen=True)
class FilterDecision:
    """Everything one tick of the filter produced, for integration and the trace."""

    v: Array
    phi: Array
    uhat: Array
    h_x: float
    h_x_p: float
    h_x_pp: float
    h_u: float
    status: str  # "optimal" | "infeasible"
    active: Tuple[str, ...]
    slack: float


def assemble_rows(model: SystemModel, bar: DiskBarrier, pb: PassivityBarrier,
                  mode: FilterMode, x: Array, u: Array, phi_val: Array) -> List[ConstraintRow]:
    rows: List[ConstraintRow] = []
    if mode.wants_safety:
        rows.append(safety_row(bar, model, x, u, phi_val))
    if mode.wants_passivity:
        rows.append(passivity_row(pb, model, x, u, phi_val))
    return rows


def _minimal_passivity_slack(rows: List[ConstraintRow]) -> float:
    """Smallest s >= 0 such that relaxing b_u by s makes the rows feasible."""
    pas = next(r for r in rows if r.tag == TAG_PASSIVITY)
    if np.linalg.norm(pas.a) < DEGENERATE_TOL:
        return max(-pas.b, 0.0)
    saf = next((r for r in rows if r.tag == TAG_SAFETY), None)
    if saf is not None and np.linalg.norm(saf.a) >= DEGENERATE_TOL:
        lam = np.linalg.norm(pas.a) / np.linalg.norm(saf.a)
        return max(-lam * saf.b - pas.b, 0.0)
    return 0.0


def decide(model: SystemModel, bar: DiskBarrier, pb: PassivityBarrier,
           mode: FilterMode, x: Array, u: Array, phi_val: Array, uh: Array,
           h: float, hp: float, hpp: float, hu: float,
           policy: str = "halt") -> FilterDecision:
    """Row assembly, QP, and slack policy, with diagnostics already in hand.

    The simulation loop evaluates phi and the barrier levels itself (they are
    cheap closed forms it needs anyway) and delegates the decision here;
    filter_step computes them from the module calculus and delegates too, so
    both paths share one implementation of the constrained step.
    """
    rows = assemble_rows(model, bar, pb, mode, x, u, phi_val)
    if not rows:
        return FilterDecision(v=np.zeros(model.m), phi=phi_val, uhat=uh,
                              h_x=h, h_x_p=hp, h_x_pp=hpp, h_u=hu,
                              status="optimal", active=(), slack=0.0)

    sol = solve_min_norm(rows)
    slack = 0.0
    if sol.status == "infeasible" and policy == "slack" and mode.wants_passivity:
        slack = _minimal_passivity_slack(rows)
        if slack > 0.0:
            rows = [replace(r, b=r.b + slack) if r.tag == TAG_PASSIVITY else r for r in rows]
            sol = solve_min_norm(rows)

    active = tuple(rows[i].tag for i in sol.active)
    return FilterDecision(v=sol.v, phi=phi_val, uhat=uh,
                          h_x=h, h_x_p=hp, h_x_pp=hpp, h_u=hu,
                          status=sol.status, active=active, slack=slack)


def filter_step(model: SystemModel, bar: DiskBarrier, pb: PassivityBarrier,
                law: FeedbackLaw, hi: HumanInput, gain: TrackingGain,
                mode: FilterMode, x: Array, u: Array, t: float,
                policy: str = "halt") -> FilterDecision:
    """Evaluate one filter tick at state (x, u), time t.

    Always reports the barrier levels (h_x chain and h_u) for the trace, even
    with the filter off.  Mode NONE assembles no rows and returns v* = 0
    exactly.
    """
    phi_val = phi_nominal(law, hi, gain, x, u, t)
    uh = uhat(law, hi, x, t)
    h, hp, hpp = eval_h_chain(bar, x, u)
    hu = eval_hu(pb, model, x, u)
    return decide(model, bar, pb, mode, x, u, phi_val, uh, h, hp, hpp, hu, policy)
