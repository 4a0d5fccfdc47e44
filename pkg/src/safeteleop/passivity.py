"""Passivity as safety: the integral barrier on the supply/storage imbalance.

A system with storage V is passive when V_dot <= u.y along trajectories.
On the dynamically extended system the imbalance

    h_u(x, u) = y(x).u - grad V(x) . f(x, u)  =  u.y - V_dot

is a barrier defined jointly on state and input; keeping h_u >= 0 keeps the
system passive pointwise.  Because u is itself a state of the extension,
enforcing  h_u_dot + gamma_u*h_u >= 0  is again one affine row in v:

    a = -dh_u/du,   b = dh_u/dx . f + dh_u/du . phi + gamma_u*h_u.

dh_u/dx needs the storage Hessian; storage functions ship grad and Hessian in
closed form (the quadratic storage has a constant Hessian).
"""

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .barrier import TAG_PASSIVITY, ConstraintRow, ClassK
from .dynamics import Array, SystemModel


class StorageFunction:
    """Positive definite storage V with closed-form gradient and Hessian."""

    def V(self, x: Array) -> float:
        raise NotImplementedError

    def grad_V(self, x: Array) -> Array:
        raise NotImplementedError

    def hess_V(self, x: Array) -> Array:
        raise NotImplementedError


@dataclass(frozen=True)
class QuadraticStorage(StorageFunction):
    """V(x) = ||x||^2 over the full plant state."""

    n: int = 4

    def V(self, x: Array) -> float:
        return float(x @ x)

    def grad_V(self, x: Array) -> Array:
        return 2.0 * x

    def hess_V(self, x: Array) -> Array:
        return 2.0 * np.eye(self.n)


@dataclass(frozen=True)
class PassivityBarrier:
    """Integral barrier h_u = y.u - grad V . f with outer class-K gamma_u."""

    storage: StorageFunction
    gamma_u: ClassK = ClassK(1.0)

    def __post_init__(self):
        if not isinstance(self.gamma_u, ClassK):
            object.__setattr__(self, "gamma_u", ClassK(float(self.gamma_u)))


def eval_hu(pb: PassivityBarrier, model: SystemModel, x: Array, u: Array) -> float:
    """h_u(x, u) = output(x).u - grad V(x) . f(x, u)."""
    return float(model.output(x) @ u - pb.storage.grad_V(x) @ model.f(x, u))


def passivity_row(pb: PassivityBarrier, model: SystemModel, x: Array, u: Array, phi_val: Array) -> ConstraintRow:
    """Affine row a.v <= b enforcing h_u_dot + gamma_u*h_u >= 0.

        dh_u/dx = (dy/dx)^T u - Hess(V) f - (df/dx)^T grad V
        dh_u/du = y - B(x)^T grad V
        a = -dh_u/du,  b = dh_u/dx . f + dh_u/du . phi + gamma_u(h_u).
    """
    f = model.f(x, u)
    gV = pb.storage.grad_V(x)
    y = model.output(x)
    hu = float(y @ u - gV @ f)
    du = y - model.input_map(x).T @ gV
    dx = model.jac_output(x).T @ u - pb.storage.hess_V(x) @ f - model.jac_f_x(x, u).T @ gV
    b = float(dx @ f) + float(du @ phi_val) + pb.gamma_u(hu)
    return ConstraintRow(a=-du, b=b, tag=TAG_PASSIVITY)


def passivity_budget(trace: Sequence, model: SystemModel, storage: StorageFunction) -> float:
    """Net supplied-minus-stored energy over a trace window.

    Returns trapezoidal integral of u.y dt minus (V(x_end) - V(x_start)).
    A nonnegative value certifies passivity over the window.  The trace is a
    sequence of records carrying t, x1, x2, u.
    """
    if len(trace) < 2:
        raise ValueError("passivity_budget needs a trace with at least 2 samples")
    integ = 0.0
    prev_t = None
    prev_supply = None
    for r in trace:
        x = np.concatenate([r.x1, r.x2])
        supply = float(np.asarray(r.u) @ model.output(x))
        if prev_t is not None:
            integ += 0.5 * (r.t - prev_t) * (supply + prev_supply)
        prev_t, prev_supply = r.t, supply
    x0 = np.concatenate([trace[0].x1, trace[0].x2])
    xT = np.concatenate([trace[-1].x1, trace[-1].x2])
    return integ - (storage.V(xT) - storage.V(x0))


def prefix_budget_min(trace: Sequence, model: SystemModel, storage: StorageFunction) -> float:
    """Minimum of passivity_budget over every prefix window of the trace.

    Single pass: the running integral is shared across prefixes.
    """
    if len(trace) < 2:
        raise ValueError("prefix_budget_min needs a trace with at least 2 samples")
    x0 = np.concatenate([trace[0].x1, trace[0].x2])
    V0 = storage.V(x0)
    integ = 0.0
    best = np.inf
    prev_t = None
    prev_supply = None
    for r in trace:
        x = np.concatenate([r.x1, r.x2])
        supply = float(np.asarray(r.u) @ model.output(x))
        if prev_t is not None:
            integ += 0.5 * (r.t - prev_t) * (supply + prev_supply)
            best = min(best, integ - (storage.V(x) - V0))
        prev_t, prev_supply = r.t, supply
    return float(best)
