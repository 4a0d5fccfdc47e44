"""Nominal controller for the extension: track u_fb(x) + u_h(t).

The extension integrates u_dot = phi + v.  Choosing

    phi = L_f u_fb(x, u) + u_h_dot(t) + beta*(u_fb(x) + u_h(t) - u)

makes the tracking error e = u - u_fb - u_h obey e_dot = -beta*e whenever the
filter is inactive (v = 0), so W = ||e||^2/2 decays as W(0)*exp(-2*beta*t)
and u converges to the nominal teleoperation law.  beta is the literal
coefficient multiplying (u_fb + u_h - u); the decay rate is 2*beta.

Human inputs are piecewise-constant holds (live input updates between control
ticks), so u_h_dot is zero for every implementation shipped here.
"""

import bisect
from dataclasses import dataclass
from typing import Sequence, Tuple

import numpy as np

from .dynamics import Array, SystemModel


class FeedbackLaw:
    """State feedback u_fb(x) with its time derivative along f in closed form."""

    def u_fb(self, x: Array) -> Array:
        raise NotImplementedError

    def L_f_u_fb(self, x: Array, u: Array) -> Array:
        raise NotImplementedError


@dataclass(frozen=True)
class PDLaw(FeedbackLaw):
    """u_fb(x) = -k_P*x1 - k_D*x2 on a planar two-block model.

    Its Jacobian is the constant [-k_P*I, -k_D*I], so the derivative along f
    is -k_P*(x1_dot) - k_D*(x2_dot) evaluated from the model's vector field.
    """

    k_P: float
    k_D: float
    model: SystemModel

    def __post_init__(self):
        if not (self.k_P > 0 and self.k_D > 0):
            raise ValueError("PD gains must be positive")

    def u_fb(self, x: Array) -> Array:
        return -self.k_P * x[0:2] - self.k_D * x[2:4]

    def L_f_u_fb(self, x: Array, u: Array) -> Array:
        f = self.model.f(x, u)
        return -self.k_P * f[0:2] - self.k_D * f[2:4]


class HumanInput:
    """Operator input signal u_h(t) with derivative u_h_dot(t)."""

    def u_h(self, t: float) -> Array:
        raise NotImplementedError

    def u_h_dot(self, t: float) -> Array:
        raise NotImplementedError


@dataclass(frozen=True)
class ConstantInput(HumanInput):
    value: Array

    def u_h(self, t: float) -> Array:
        return self.value

    def u_h_dot(self, t: float) -> Array:
        return np.zeros_like(self.value)


class PiecewiseInput(HumanInput):
    """Piecewise-constant schedule: value[i] holds on [times[i], times[i+1]).

    times must start at 0 and increase strictly; the last value holds forever.
    The derivative is zero (jumps are sample-held by the simulator's tick).
    """

    def __init__(self, segments: Sequence[Tuple[float, Array]]):
        if not segments:
            raise ValueError("piecewise input needs at least one segment")
        times = [float(t) for t, _ in segments]
        if times[0] != 0.0:
            raise ValueError("piecewise input must start at t = 0")
        if any(b <= a for a, b in zip(times, times[1:])):
            raise ValueError("piecewise segment times must increase strictly")
        self.times = times
        self.values = [np.asarray(v, dtype=float) for _, v in segments]
        self._zero = np.zeros_like(self.values[0])

    def u_h(self, t: float) -> Array:
        i = bisect.bisect_right(self.times, t) - 1
        return self.values[max(i, 0)]

    def u_h_dot(self, t: float) -> Array:
        return self._zero


class LiveInput(HumanInput):
    """Latest-value cell for live teleoperation.

    Single writer (network layer) and single reader (control loop): set()
    replaces the stored reference atomically, u_h returns it; the stored
    array is never mutated in place.
    """

    def __init__(self, initial: Array):
        self._value = np.asarray(initial, dtype=float).copy()
        self._zero = np.zeros_like(self._value)

    def set(self, value: Array) -> None:
        value = np.asarray(value, dtype=float)
        if not np.all(np.isfinite(value)):
            raise ValueError("live input must be finite")
        self._value = value.copy()

    def u_h(self, t: float) -> Array:
        return self._value

    def u_h_dot(self, t: float) -> Array:
        return self._zero


@dataclass(frozen=True)
class TrackingGain:
    """Coefficient beta > 0 multiplying (u_fb + u_h - u) in u_dot."""

    beta: float

    def __post_init__(self):
        if not self.beta > 0:
            raise ValueError(f"beta must be positive, got {self.beta}")


def uhat(law: FeedbackLaw, hi: HumanInput, x: Array, t: float) -> Array:
    """Nominal input the extension tracks: u_fb(x) + u_h(t)."""
    return law.u_fb(x) + hi.u_h(t)


def phi(law: FeedbackLaw, hi: HumanInput, gain: TrackingGain, x: Array, u: Array, t: float) -> Array:
    """Nominal extension controller L_f u_fb + u_h_dot + beta*(uhat - u)."""
    return law.L_f_u_fb(x, u) + hi.u_h_dot(t) + gain.beta * (law.u_fb(x) + hi.u_h(t) - u)


def tracking_error(law: FeedbackLaw, hi: HumanInput, x: Array, u: Array, t: float) -> float:
    """W = ||u - u_fb(x) - u_h(t)||^2 / 2."""
    e = u - law.u_fb(x) - hi.u_h(t)
    return 0.5 * float(e @ e)
