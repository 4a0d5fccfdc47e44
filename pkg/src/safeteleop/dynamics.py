"""Control-affine plant models and the dynamic input extension.

A plant is x_dot = f(x, u) = drift(x) + input_map(x) @ u with output
y = output(x).  The filter never acts on u directly: the system is extended
with an integrator u_dot = phi(x, u, t) + v, and v becomes the new input.
Restricting f to control-affine form keeps every partial derivative the
constraint rows need available in closed form.
"""

from dataclasses import dataclass

import numpy as np

Array = np.ndarray


class SystemModel:
    """Control-affine plant: x_dot = drift(x) + input_map(x) @ u, y = output(x).

    Subclasses provide the maps and their Jacobians in closed form.  All maps
    must be deterministic: the same input yields the bitwise-same output.
    """

    n: int  # state dimension
    m: int  # input/output dimension

    def drift(self, x: Array) -> Array:
        raise NotImplementedError

    def input_map(self, x: Array) -> Array:
        """n x m matrix B(x) so that f(x, u) = drift(x) + B(x) @ u."""
        raise NotImplementedError

    def output(self, x: Array) -> Array:
        raise NotImplementedError

    def jac_drift(self, x: Array) -> Array:
        """n x n Jacobian of drift."""
        raise NotImplementedError

    def jac_output(self, x: Array) -> Array:
        """m x n Jacobian of output."""
        raise NotImplementedError

    def jac_input_map_col(self, x: Array, j: int) -> Array:
        """n x n Jacobian of the j-th column of input_map."""
        raise NotImplementedError

    def f(self, x: Array, u: Array) -> Array:
        """Full vector field drift(x) + input_map(x) @ u."""
        return self.drift(x) + self.input_map(x) @ u

    def jac_f_x(self, x: Array, u: Array) -> Array:
        """n x n Jacobian of f with respect to x at fixed u."""
        J = self.jac_drift(x).copy()
        for j in range(self.m):
            J += u[j] * self.jac_input_map_col(x, j)
        return J


@dataclass(frozen=True)
class DoubleIntegratorDrag(SystemModel):
    """Planar double integrator with viscous drag.

    x = (x1, x2) with x1, x2 in R^2:  x1_dot = x2,  x2_dot = -sigma*x2 + u,
    y = x2.  The input map is constant, so all input-map Jacobians vanish.
    """

    sigma: float = 1.0
    n: int = 4
    m: int = 2

    def __post_init__(self):
        if not self.sigma > 0:
            raise ValueError(f"sigma must be positive, got {self.sigma}")

    def drift(self, x: Array) -> Array:
        x2 = x[2:4]
        out = np.empty(4)
        out[0:2] = x2
        out[2:4] = -self.sigma * x2
        return out

    def input_map(self, x: Array) -> Array:
        B = np.zeros((4, 2))
        B[2, 0] = 1.0
        B[3, 1] = 1.0
        return B

    def output(self, x: Array) -> Array:
        return x[2:4].copy()

    def jac_drift(self, x: Array) -> Array:
        J = np.zeros((4, 4))
        J[0, 2] = 1.0
        J[1, 3] = 1.0
        J[2, 2] = -self.sigma
        J[3, 3] = -self.sigma
        return J

    def jac_output(self, x: Array) -> Array:
        J = np.zeros((2, 4))
        J[0, 2] = 1.0
        J[1, 3] = 1.0
        return J

    def jac_input_map_col(self, x: Array, j: int) -> Array:
        return np.zeros((4, 4))

    def f(self, x: Array, u: Array) -> Array:
        x2 = x[2:4]
        out = np.empty(4)
        out[0:2] = x2
        out[2:4] = u - self.sigma * x2
        return out


@dataclass(frozen=True)
class ExtendedState:
    """State of the extended system: plant state x, integrated input u, time t.

    All entries must be finite; the extension u_dot = phi + v is only
    meaningful on finite states.
    """

    x: Array
    u: Array
    t: float = 0.0

    def __post_init__(self):
        if not (np.all(np.isfinite(self.x)) and np.all(np.isfinite(self.u)) and np.isfinite(self.t)):
            raise ValueError("ExtendedState entries must be finite")


def eval_f(model: SystemModel, x: Array, u: Array) -> Array:
    """Evaluate the plant vector field f(x, u) = drift(x) + input_map(x) @ u."""
    x = np.asarray(x, dtype=float)
    u = np.asarray(u, dtype=float)
    if x.shape != (model.n,) or u.shape != (model.m,):
        raise ValueError(f"dimension mismatch: x{x.shape}, u{u.shape} for n={model.n}, m={model.m}")
    return model.f(x, u)


def eval_extended(model: SystemModel, s: ExtendedState, phi_val: Array, v: Array) -> Array:
    """Vector field of the extended system: (f(x, u), phi + v) stacked."""
    phi_val = np.asarray(phi_val, dtype=float)
    v = np.asarray(v, dtype=float)
    if phi_val.shape != (model.m,) or v.shape != (model.m,):
        raise ValueError(f"dimension mismatch: phi{phi_val.shape}, v{v.shape} for m={model.m}")
    return np.concatenate([eval_f(model, s.x, s.u), phi_val + v])
