"""Filter pipeline: modes, minimal intervention, slack policy, commutation."""

import numpy as np
import pytest

from safeteleop.barrier import ClassK, DiskBarrier, row_residual
from safeteleop.dynamics import DoubleIntegratorDrag
from safeteleop.filtering import FilterMode, assemble_rows, filter_step, parse_mode
from safeteleop.passivity import PassivityBarrier, QuadraticStorage
from safeteleop.qpsolver import brute_force_oracle
from safeteleop.scenario import default_scenario
from safeteleop.sim import run_scenario
from safeteleop.tracking import ConstantInput, PDLaw, TrackingGain, phi, uhat


def _pipeline(sigma=1.0, d=1.0, k1=3.0, k2=3.0, gx=1.0, gu=20.0,
              kp=1.0, kd=2.0, beta=10.0, uh=(-0.3, 0.0)):
    model = DoubleIntegratorDrag(sigma=sigma)
    bar = DiskBarrier(model=model, d=d, kappa1=k1, kappa2=k2, gamma_x=ClassK(gx))
    pb = PassivityBarrier(storage=QuadraticStorage(), gamma_u=ClassK(gu))
    law = PDLaw(k_P=kp, k_D=kd, model=model)
    gain = TrackingGain(beta=beta)
    hi = ConstantInput(np.array(uh))
    return model, bar, pb, law, hi, gain


def test_parse_mode_synonyms():
    assert parse_mode("none") is FilterMode.NONE
    assert parse_mode("Passivity-Only") is FilterMode.PASSIVITY
    assert parse_mode("SAFETY_ONLY") is FilterMode.SAFETY
    assert parse_mode(" both ") is FilterMode.BOTH
    with pytest.raises(ValueError):
        parse_mode("everything")


def test_mode_none_is_passthrough():
    model, bar, pb, law, hi, gain = _pipeline()
    x = np.array([1.7, -0.4, 0.2, 0.3])
    u = np.array([0.5, -0.1])
    dec = filter_step(model, bar, pb, law, hi, gain, FilterMode.NONE, x, u, 0.0)
    np.testing.assert_array_equal(dec.v, [0.0, 0.0])
    assert dec.status == "optimal"
    assert dec.active == ()
    np.testing.assert_allclose(dec.phi, phi(law, hi, gain, x, u, 0.0))


def test_rows_slack_at_rest_give_zero_correction():
    # equilibrium of the nominal loop with its target outside the keep-out
    # disk: x1 = u_h / k_P, x2 = 0, u = uhat = 0.  Both rows are slack there.
    model, bar, pb, law, hi, gain = _pipeline(uh=(-2.0, 0.0))
    x = np.array([-2.0, 0.0, 0.0, 0.0])
    u = uhat(law, hi, x, 0.0)
    np.testing.assert_allclose(u, [0.0, 0.0], atol=1e-15)
    dec = filter_step(model, bar, pb, law, hi, gain, FilterMode.BOTH, x, u, 0.0)
    np.testing.assert_array_equal(dec.v, [0.0, 0.0])
    assert dec.active == ()


def test_rows_match_assembled_order():
    model, bar, pb, law, hi, gain = _pipeline()
    x = np.array([1.5, 0.3, -0.2, 0.1])
    u = np.array([0.4, 0.2])
    p = phi(law, hi, gain, x, u, 0.0)
    rows = assemble_rows(model, bar, pb, FilterMode.BOTH, x, u, p)
    assert [r.tag for r in rows] == ["safety", "passivity"]
    assert [r.tag for r in assemble_rows(model, bar, pb, FilterMode.SAFETY, x, u, p)] == ["safety"]
    assert [r.tag for r in assemble_rows(model, bar, pb, FilterMode.PASSIVITY, x, u, p)] == ["passivity"]
    assert assemble_rows(model, bar, pb, FilterMode.NONE, x, u, p) == []


def test_active_filter_agrees_with_grid_oracle():
    model, bar, pb, law, hi, gain = _pipeline()
    # heading toward the disk: safety must push back
    x = np.array([1.05, 0.0, -0.5, 0.0])
    u = uhat(law, hi, x, 0.0)
    p = phi(law, hi, gain, x, u, 0.0)
    dec = filter_step(model, bar, pb, law, hi, gain, FilterMode.BOTH, x, u, 0.0)
    assert dec.status == "optimal"
    assert np.linalg.norm(dec.v) > 0
    rows = assemble_rows(model, bar, pb, FilterMode.BOTH, x, u, p)
    for r in rows:
        assert row_residual(r, dec.v) >= -1e-9
    grid, on_edge = brute_force_oracle(rows)
    assert grid is not None and not on_edge
    assert np.linalg.norm(grid) >= np.linalg.norm(dec.v) - 1e-9
    assert abs(np.linalg.norm(grid) - np.linalg.norm(dec.v)) <= 2 * 2.5e-2


def test_monotone_restriction():
    # K_both = K_safety intersect K_passivity, so the both-mode correction
    # can never be smaller than either single-row correction.
    model, bar, pb, law, hi, gain = _pipeline()
    rng = np.random.default_rng(15)
    for _ in range(200):
        x = rng.uniform(-2, 2, 4)
        if np.linalg.norm(x[0:2]) < 0.2:
            continue
        u = rng.uniform(-2, 2, 2)
        decs = {}
        for mode in (FilterMode.SAFETY, FilterMode.PASSIVITY, FilterMode.BOTH):
            decs[mode] = filter_step(model, bar, pb, law, hi, gain, mode, x, u, 0.0)
        if any(d.status != "optimal" for d in decs.values()):
            continue
        nb = np.linalg.norm(decs[FilterMode.BOTH].v)
        assert nb >= np.linalg.norm(decs[FilterMode.SAFETY].v) - 1e-9
        assert nb >= np.linalg.norm(decs[FilterMode.PASSIVITY].v) - 1e-9


def test_minimal_intervention():
    model, bar, pb, law, hi, gain = _pipeline()
    rng = np.random.default_rng(16)
    seen = 0
    for _ in range(500):
        x = rng.uniform(-2, 2, 4)
        u = rng.uniform(-2, 2, 2)
        p = phi(law, hi, gain, x, u, 0.0)
        rows = assemble_rows(model, bar, pb, FilterMode.BOTH, x, u, p)
        if all(r.b >= 0 for r in rows):
            dec = filter_step(model, bar, pb, law, hi, gain, FilterMode.BOTH, x, u, 0.0)
            np.testing.assert_array_equal(dec.v, [0.0, 0.0])
            seen += 1
    assert seen > 10  # the property was actually exercised


def test_slack_policy_degenerate_row():
    model, bar, pb, law, hi, gain = _pipeline()
    # x2 = 0 with 2 x1.u > 0: degenerate passivity row with b < 0
    x = np.array([1.5, 0.0, 0.0, 0.0])
    u = np.array([1.0, 0.0])
    halt = filter_step(model, bar, pb, law, hi, gain, FilterMode.PASSIVITY, x, u, 0.0, policy="halt")
    assert halt.status == "infeasible"
    assert halt.slack == 0.0
    relaxed = filter_step(model, bar, pb, law, hi, gain, FilterMode.PASSIVITY, x, u, 0.0, policy="slack")
    assert relaxed.status == "optimal"
    assert relaxed.slack > 0
    np.testing.assert_array_equal(relaxed.v, [0.0, 0.0])  # relaxed row binds nothing


def test_slack_never_relaxes_safety():
    model, bar, pb, law, hi, gain = _pipeline()
    x = np.array([1.5, 0.0, 0.0, 0.0])
    u = np.array([1.0, 0.0])
    dec = filter_step(model, bar, pb, law, hi, gain, FilterMode.SAFETY, x, u, 0.0, policy="slack")
    # safety alone is feasible here; slack only ever touches the passivity row
    assert dec.status == "optimal"
    assert dec.slack == 0.0


def test_mode_none_commutes_with_unextended_loop():
    """With v = 0, continuous u_h, and u(0) = uhat(x0, 0), integrating the
    extension reproduces the unextended closed loop x_dot = f(x, uhat(x, t)):
    the tracking error starts at zero and its dynamics keep it there.  (A
    jump in u_h breaks the premise: uhat jumps, the integrator state u
    cannot, and the extension smooths the step over ~1/beta seconds.)"""
    from safeteleop.scenario import HumanInputSpec
    from safeteleop.sim import rk4_step

    sc = default_scenario(mode="none", T=1.0,
                          u_h=HumanInputSpec("constant", ((0.0, (-0.3, 0.0)),)))
    res = run_scenario(sc)

    # unextended loop: u = uhat algebraically, same integrator and ticks
    model = DoubleIntegratorDrag(sigma=sc.sigma)
    law = PDLaw(k_P=sc.k_P, k_D=sc.k_D, model=model)
    hi = sc.u_h.make()
    x = np.array(sc.x0, dtype=float)
    n = int(round(sc.T / sc.dt))
    worst = 0.0
    for k in range(n):
        t = k * sc.dt
        rec = res.records[k]
        worst = max(worst, float(np.max(np.abs(np.concatenate([rec.x1, rec.x2]) - x))))
        uh_now = hi.u_h(t)

        def deriv(z, s):
            return model.f(z, law.u_fb(z) + uh_now)

        x = rk4_step(deriv, x, t, sc.dt)
    assert worst <= 1e-9


def test_diagnostics_report_barrier_levels_in_every_mode():
    model, bar, pb, law, hi, gain = _pipeline()
    x = np.array([0.8, 0.2, -0.1, 0.4])
    u = np.array([0.3, -0.2])
    vals = [filter_step(model, bar, pb, law, hi, gain, mode, x, u, 0.0)
            for mode in FilterMode]
    # barrier diagnostics are mode-independent functions of the state
    for dec in vals[1:]:
        assert dec.h_x == vals[0].h_x
        assert dec.h_u == vals[0].h_u
        assert dec.h_x_pp == vals[0].h_x_pp
