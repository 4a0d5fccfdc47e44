"""Safety constraint synthesis for a relative-degree-2 barrier.

The keep-out set is the open disk ||x1|| < d, kept out of via
h(x) = ||x1||^2 - d^2 >= 0.  Because h has relative degree 2 in u, it is
chained through linear class-K functions:

    h'(x)     = hdot + kappa1*h           (still independent of u)
    h''(x, u) = h'dot + kappa2*h'         (relative degree 1 in the extension input v)

Enforcing  h''dot + gamma_x*h'' >= 0  along the extended dynamics is then a
single affine row in v:

    a = -dh''/du,   b = dh''/dx . f + dh''/du . phi + gamma_x*h'',   a.v <= b.

All gradients are closed form: the barrier ships grad h, grad h', and the
(constant) Hessian of h'; the model supplies f, the input map, and df/dx.
"""

from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from .dynamics import Array, SystemModel

TAG_SAFETY = "safety"
TAG_PASSIVITY = "passivity"


@dataclass(frozen=True)
class ClassK:
    """Linear extended class-K function gamma(s) = slope * s, slope > 0."""

    slope: float

    def __post_init__(self):
        if not self.slope > 0:
            raise ValueError(f"class-K slope must be positive, got {self.slope}")

    def __call__(self, s: float) -> float:
        return self.slope * s


@dataclass(frozen=True)
class ConstraintRow:
    """One affine inequality a . v <= b in filter-input space."""

    a: Array
    b: float
    tag: str

    def __post_init__(self):
        if not (np.all(np.isfinite(self.a)) and np.isfinite(self.b)):
            raise ValueError("constraint row entries must be finite")


def row_residual(row: ConstraintRow, v: Array) -> float:
    """b - a.v; nonnegative iff the row is satisfied at v."""
    return float(row.b - row.a @ np.asarray(v, dtype=float))


@dataclass(frozen=True)
class DiskBarrier:
    """Keep-out disk barrier h(x) = ||x1||^2 - d^2 bound to a planar model.

    kappa1, kappa2 are the slopes of the linear class-K functions used at the
    two recursion levels; gamma_x softens the final constraint row.
    """

    model: SystemModel
    d: float = 1.0
    kappa1: float = 1.0
    kappa2: float = 1.0
    gamma_x: ClassK = ClassK(1.0)

    def __post_init__(self):
        if not self.d > 0:
            raise ValueError(f"keep-out radius must be positive, got {self.d}")
        if not (self.kappa1 > 0 and self.kappa2 > 0):
            raise ValueError("recursion slopes kappa1, kappa2 must be positive")
        if not isinstance(self.gamma_x, ClassK):
            object.__setattr__(self, "gamma_x", ClassK(float(self.gamma_x)))

    def h(self, x: Array) -> float:
        x1 = x[0:2]
        return float(x1 @ x1 - self.d * self.d)

    def grad_h(self, x: Array) -> Array:
        g = np.zeros(4)
        g[0:2] = 2.0 * x[0:2]
        return g

    def grad_hp(self, x: Array) -> Array:
        """Gradient of h'(x) = 2 x1.x2 + kappa1*h(x)."""
        g = np.empty(4)
        g[0:2] = 2.0 * x[2:4] + 2.0 * self.kappa1 * x[0:2]
        g[2:4] = 2.0 * x[0:2]
        return g

    def hess_hp(self) -> Array:
        """Constant Hessian of h': blocks [[2*kappa1*I, 2I], [2I, 0]]."""
        H = np.zeros((4, 4))
        H[0, 0] = H[1, 1] = 2.0 * self.kappa1
        H[0, 2] = H[1, 3] = 2.0
        H[2, 0] = H[3, 1] = 2.0
        return H


def eval_h_chain(bar: DiskBarrier, x: Array, u: Array) -> Tuple[float, float, float]:
    """Evaluate (h, h', h'') at (x, u) along the bound model's vector field.

    h' = grad h . f + kappa1*h and h'' = grad h' . f + kappa2*h'; h has
    relative degree 2, so grad h annihilates the input map and h' is u-free.
    """
    f = bar.model.f(x, u)
    h = bar.h(x)
    hp = float(bar.grad_h(x) @ f) + bar.kappa1 * h
    hpp = float(bar.grad_hp(x) @ f) + bar.kappa2 * hp
    return h, hp, hpp


def safety_row(bar: DiskBarrier, model: SystemModel, x: Array, u: Array, phi_val: Array) -> ConstraintRow:
    """Affine row a.v <= b enforcing h''dot + gamma_x*h'' >= 0.

    With h''(x, u) = grad h'(x) . f(x, u) + kappa2*h'(x):

        dh''/du = B(x)^T grad h'
        dh''/dx = Hess(h') f + (df/dx)^T grad h' + kappa2 * grad h'
        a = -dh''/du,  b = dh''/dx . f + dh''/du . phi + gamma_x(h'').
    """
    f = model.f(x, u)
    gp = bar.grad_hp(x)
    h = bar.h(x)
    hp = float(bar.grad_h(x) @ f) + bar.kappa1 * h
    hpp = float(gp @ f) + bar.kappa2 * hp
    du = model.input_map(x).T @ gp
    dx = bar.hess_hp() @ f + model.jac_f_x(x, u).T @ gp + bar.kappa2 * gp
    b = float(dx @ f) + float(du @ phi_val) + bar.gamma_x(hpp)
    return ConstraintRow(a=-du, b=b, tag=TAG_SAFETY)
