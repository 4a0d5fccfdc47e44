"""Passivity barrier: exact values, symbolic oracle, budget bookkeeping."""

import numpy as np
import pytest
import sympy as sp

from safeteleop.barrier import ClassK
from safeteleop.dynamics import DoubleIntegratorDrag
from safeteleop.passivity import (
    PassivityBarrier,
    QuadraticStorage,
    eval_hu,
    passivity_budget,
    passivity_row,
    prefix_budget_min,
)
from safeteleop.scenario import default_scenario
from safeteleop.sim import run_scenario


def _pb(sigma=1.0, gu=1.0):
    model = DoubleIntegratorDrag(sigma=sigma)
    return model, PassivityBarrier(storage=QuadraticStorage(), gamma_u=ClassK(gu))


def test_hu_vanishes_with_zero_velocity():
    model, pb = _pb()
    rng = np.random.default_rng(3)
    for _ in range(20):
        x = np.concatenate([rng.uniform(-3, 3, 2), [0.0, 0.0]])
        u = rng.uniform(-3, 3, 2)
        assert eval_hu(pb, model, x, u) == pytest.approx(0.0, abs=1e-12)


def test_hu_hand_values():
    model, pb = _pb()
    # h_u = 2 sigma ||x2||^2 - 2 x1.x2 - x2.u
    assert eval_hu(pb, model, np.array([0, 0, 1.0, 0]), np.zeros(2)) == pytest.approx(2.0)
    assert eval_hu(pb, model, np.array([1.0, 0, 1.0, 0]), np.array([1.0, 0])) == pytest.approx(-1.0)


def test_hu_is_supply_minus_storage_rate():
    # Pointwise identity: h_u = u.y - dV/dt along f, by construction.
    model, pb = _pb(sigma=1.7)
    rng = np.random.default_rng(4)
    for _ in range(200):
        x = rng.uniform(-3, 3, 4)
        u = rng.uniform(-3, 3, 2)
        vdot = float(pb.storage.grad_V(x) @ model.f(x, u))
        supply = float(u @ model.output(x))
        assert eval_hu(pb, model, x, u) == pytest.approx(supply - vdot, abs=1e-12)


def test_passivity_row_degenerate_cases():
    model, pb = _pb()
    # x2 = 0 makes the row direction vanish: 0.v <= b
    row = passivity_row(pb, model, np.array([1.0, 0, 0, 0]), np.zeros(2), np.zeros(2))
    np.testing.assert_allclose(row.a, [0.0, 0.0])
    assert row.b == pytest.approx(0.0, abs=1e-12)
    assert row.tag == "passivity"

    # same state with u = (1,0): still degenerate, now infeasible.  By hand:
    # f = (0,0,1,0), dh_u/dx = (0,0,-3,0), h_u = 0, so b = dx.f = -3 < 0.
    row = passivity_row(pb, model, np.array([1.0, 0, 0, 0]), np.array([1.0, 0.0]), np.zeros(2))
    np.testing.assert_allclose(row.a, [0.0, 0.0])
    assert row.b == pytest.approx(-3.0, abs=1e-12)


def test_passivity_row_hand_value():
    model, pb = _pb()
    # x1 = 0, x2 = (1,0), u = 0, phi = 0 with sigma = 1, gamma_u slope 1.
    # a = -dh_u/du = x2 = (1,0).  By hand: f = (1,0,-1,0), h_u = 2,
    # dh_u/dx = (-2,0,4,0), so b = dx.f + gamma_u(h_u) = -6 + 2 = -4.
    row = passivity_row(pb, model, np.array([0, 0, 1.0, 0]), np.zeros(2), np.zeros(2))
    np.testing.assert_allclose(row.a, [1.0, 0.0])
    assert row.b == pytest.approx(-4.0, abs=1e-12)


def _symbolic_pass_row(sigma, gu):
    """Independent symbolic derivation of the passivity row via sympy."""
    x11, x12, x21, x22, u1, u2, p1, p2 = sp.symbols("x11 x12 x21 x22 u1 u2 p1 p2")
    state = sp.Matrix([x11, x12, x21, x22])
    u = sp.Matrix([u1, u2])
    ph = sp.Matrix([p1, p2])
    f = sp.Matrix([x21, x22, -sigma * x21 + u1, -sigma * x22 + u2])
    y = sp.Matrix([x21, x22])
    V = x11**2 + x12**2 + x21**2 + x22**2

    hu = y.dot(u) - (sp.Matrix([V]).jacobian(state) * f)[0]
    lie_x = (sp.Matrix([hu]).jacobian(state) * f)[0]
    du = sp.Matrix([hu]).jacobian(u)
    b = lie_x + (du * ph)[0] + gu * hu
    a = -du
    return (x11, x12, x21, x22, u1, u2, p1, p2), a, sp.expand(b), sp.expand(hu)


def test_symbolic_oracle_random_states():
    for sigma in (0.5, 1.0, 2.0):
        gu = 1.3
        model, pb = _pb(sigma=sigma, gu=gu)
        syms, a_sym, b_sym, hu_sym = _symbolic_pass_row(sigma, gu)
        a_fn = sp.lambdify(syms, a_sym, "numpy")
        b_fn = sp.lambdify(syms, b_sym, "numpy")
        hu_fn = sp.lambdify(syms, hu_sym, "numpy")
        rng = np.random.default_rng(5)
        for _ in range(100):
            x = rng.uniform(-3, 3, 4)
            u = rng.uniform(-3, 3, 2)
            p = rng.uniform(-5, 5, 2)
            args = (*x, *u, *p)
            assert eval_hu(pb, model, x, u) == pytest.approx(float(hu_fn(*args)), abs=1e-9)
            row = passivity_row(pb, model, x, u, p)
            np.testing.assert_allclose(row.a, np.asarray(a_fn(*args)).ravel(), atol=1e-9)
            assert row.b == pytest.approx(float(b_fn(*args)), abs=1e-9)


def test_storage_validation():
    st = QuadraticStorage()
    assert st.V(np.zeros(4)) == 0.0
    rng = np.random.default_rng(6)
    eps = 1e-6
    for _ in range(100):
        x = rng.uniform(-3, 3, 4)
        assert st.V(x) >= 0.0
        g = st.grad_V(x)
        for i in range(4):
            dx = np.zeros(4)
            dx[i] = eps
            fd = (st.V(x + dx) - st.V(x - dx)) / (2 * eps)
            assert g[i] == pytest.approx(fd, rel=1e-5, abs=1e-6)


def test_budget_zero_on_rest_trace():
    from safeteleop.sim import TraceRecord

    model, pb = _pb()
    recs = [TraceRecord(t=k * 0.1, x1=(0.0, 0.0), x2=(0.0, 0.0), u=(0.0, 0.0),
                        uhat=(0.0, 0.0), v=(0.0, 0.0), h_x=0, h_x_p=0, h_x_pp=0,
                        h_u=0, status="optimal", active=(), slack=0.0)
            for k in range(5)]
    assert passivity_budget(recs, model, pb.storage) == 0.0
    with pytest.raises(ValueError):
        passivity_budget(recs[:1], model, pb.storage)


def test_budget_nonnegative_on_filtered_run():
    model, pb = _pb()
    res = run_scenario(default_scenario(mode="passivity", T=5.0))
    assert not res.halted
    assert prefix_budget_min(res.records, model, pb.storage) >= -1e-4


def test_budget_negative_on_unfiltered_run():
    # With the filter off, an aggressive command against a moving robot drives
    # the supply-minus-storage balance negative right away (h_u(0) = -2 here),
    # so the running budget dips below zero -- exactly what the passivity
    # constraint exists to prevent.  Note the default yank alone is not enough:
    # its early surplus keeps every prefix integral nonnegative even though
    # h_u itself goes pointwise negative.
    model, pb = _pb()
    sc = default_scenario(mode="none", T=5.0,
                          x0=(0.0, 0.0, 1.0, 0.0), u0=(4.0, 0.0))
    res = run_scenario(sc)
    assert res.h_u.min() < 0
    assert prefix_budget_min(res.records, model, pb.storage) < 0
