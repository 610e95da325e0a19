"""Norms, fits, estimate checks, and the probe drivers."""

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from viscid.analysis import (NASH_CORPUS_CONSTANT, DecayContext, EstimateCheck,
                             check_decay_bounds, check_nash, check_spacetime,
                             check_structural, default_window, eps_sweep,
                             fit_decay, hj_residual, inviscid_limit,
                             mollification_time, nash_corpus, nash_ratio, norm,
                             primitive, uniqueness_probe, SweepConfig,
                             UniquenessConfig)
from viscid.errors import ConfigurationError, PreconditionError
from viscid.flux import FluxSpec
from viscid.initial_data import GridFunction, dirac, mollify
from viscid.solver import (SolverConfig, Trajectory, oracle_burgers_viscous,
                           oracle_heat, run_fv, run_fv_many)

P2 = FluxSpec.power(2)
ZERO = FluxSpec.zero()


def _gf(lo, hi, n, fn, time=None):
    dx = (hi - lo) / n
    x = lo + (np.arange(n) + 0.5) * dx
    return GridFunction(lo, hi, n, fn(x), time=time)


def _fake_traj(gridfns, eps=1.0, flux=ZERO, h=None, mass=None, sup=None):
    prov = {"scheme": "fv", "config": {"eps": eps, "grid": (gridfns[0].x_lo,
                                                            gridfns[0].x_hi,
                                                            gridfns[0].n)},
            "flux": flux.label(), "flux_p": flux.max_exponent,
            "flux_min_p": math.inf if flux.is_zero else flux.min_exponent,
            "init": {}}
    if h is not None:
        prov["init"]["mollify_h"] = h
    prov["init"]["mass"] = mass if mass is not None else gridfns[0].mass
    prov["init"]["sup"] = sup if sup is not None else float(np.max(gridfns[0].values))
    return Trajectory(snapshots=list(gridfns), provenance=prov, diagnostics={})


# ------------------------------------------------------------------ norms

def test_norm_examples():
    g = GridFunction(0.0, 1.0, 100, np.ones(100))
    assert norm(g, 1) == pytest.approx(1.0)
    assert norm(g, np.inf) == 1.0
    with pytest.raises(ValueError):
        norm(g, 0.5)


@settings(max_examples=40, deadline=None)
@given(c=st.one_of(st.just(0.0), st.floats(1e-3, 50.0)),
       p=st.sampled_from([1.0, 2.0, 3.5, np.inf]))
def test_norm_homogeneity(c, p):
    rng = np.random.default_rng(42)
    vals = rng.random(64)
    g = GridFunction(0.0, 2.0, 64, vals)
    scaled = GridFunction(0.0, 2.0, 64, c * vals)
    assert norm(scaled, p) == pytest.approx(c * norm(g, p), rel=1e-12, abs=0.0)


def test_norm_interpolation_inequality():
    # ||g||_{p/2} <= ||g||_p^{(p-2)/(p-1)} ||g||_1^{1/(p-1)} on random data
    rng = np.random.default_rng(3)
    for _ in range(20):
        g = GridFunction(0.0, 3.0, 128, rng.random(128))
        for p in (3.0, 4.0, 6.0):
            lhs = norm(g, p / 2)
            rhs = norm(g, p) ** ((p - 2) / (p - 1)) * norm(g, 1) ** (1 / (p - 1))
            assert lhs <= rhs * (1 + 1e-12)


def test_primitive_properties():
    g = GridFunction(0.0, 1.0, 50, np.zeros(50))
    assert np.all(primitive(g).values == 0.0)
    u0 = mollify(dirac(2.0, 0.0), 0.2, (-2.0, 2.0, 400))
    U = primitive(u0)
    assert np.all(np.diff(U.values) >= 0)
    assert U.values[-1] == pytest.approx(u0.mass, abs=1e-14)
    # discrete fundamental theorem: backward difference returns the data
    rec = np.diff(np.concatenate([[0.0], U.values])) / u0.dx
    assert np.allclose(rec, u0.values, atol=1e-12)
    assert np.max(np.abs(np.diff(U.values) / u0.dx)) == pytest.approx(
        norm(u0, np.inf), abs=1e-12)


# ------------------------------------------------------------------- fits

def test_fit_decay_recovers_exact_power_law():
    ts = np.geomspace(0.1, 10.0, 20)
    snaps = [_gf(-1, 1, 64, lambda x, t=t: np.full(64, 2.7 * t ** -0.62), time=t)
             for t in ts]
    traj = _fake_traj(snaps)
    fit = fit_decay(traj, np.inf, window=(0.1, 10.0))
    assert fit.exponent == pytest.approx(-0.62, abs=1e-10)
    assert fit.r2 == pytest.approx(1.0, abs=1e-12)
    assert fit.constant == pytest.approx(2.7, rel=1e-10)


def test_fit_decay_window_needs_points():
    ts = np.geomspace(0.1, 10.0, 20)
    snaps = [_gf(-1, 1, 64, lambda x, t=t: np.full(64, t ** -0.5), time=t)
             for t in ts]
    traj = _fake_traj(snaps)
    with pytest.raises(PreconditionError):
        fit_decay(traj, np.inf, window=(9.0, 10.0))


def test_mollification_time_and_window():
    u0 = mollify(dirac(1.0, 0.0), 0.05, (-4.0, 5.0, 512))
    cfg = SolverConfig(eps=0.05, grid=(-4.0, 5.0, 512), t_end=1.0,
                       snapshot_times=tuple(np.geomspace(0.01, 1.0, 12)))
    traj = run_fv(cfg, P2, u0, init_meta={"mollify_h": 0.05})
    tm = mollification_time(traj)
    assert tm is not None
    assert tm <= 0.05 ** 2 / 0.05 + 1e-12
    lo, hi = default_window(traj)
    assert lo == pytest.approx(min(10 * tm, 0.5), rel=1e-12)
    assert hi == 1.0


# ---------------------------------------------------------------- verdict

def test_estimate_check_pass_is_derived():
    c = EstimateCheck(name="x", lhs_max_ratio=1.04, tol=0.05)
    assert c.passed and c.verdict == "pass"
    c = EstimateCheck(name="x", lhs_max_ratio=1.06, tol=0.05)
    assert not c.passed and c.verdict == "FAIL"
    c = EstimateCheck(name="x", lhs_max_ratio=math.nan, tol=0.05, applicable=False)
    assert c.passed and c.verdict == "inapplicable"
    with pytest.raises(AttributeError):
        c.passed = True


# ------------------------------------------------------------- structural

def _quick_pair(flux=P2, eps=0.03, n=512):
    lo, hi = -4.0, 5.0
    u0 = mollify(dirac(1.0, -0.2), 0.06, (lo, hi, n))
    v0 = u0.with_values(np.interp(u0.x - 0.4, u0.x, u0.values, left=0, right=0))
    w0 = u0.with_values(u0.values + mollify(dirac(0.4, 0.6), 0.06, (lo, hi, n)).values)
    cfg = SolverConfig(eps=eps, grid=(lo, hi, n), t_end=0.6,
                       snapshot_times=tuple(np.geomspace(0.01, 0.6, 36)))
    return run_fv_many(cfg, flux, [u0, v0, w0], init_meta={"mollify_h": 0.06})


def test_check_structural_single_and_pair():
    tu, tv, tw = _quick_pair()
    singles = {c.name: c for c in check_structural(tu)}
    assert singles["mass_conservation"].passed
    assert singles["mass_conservation"].lhs_max_ratio <= 1 + 1e-10
    assert singles["max_min_principle"].passed
    assert singles["l2_monotone"].passed and singles["l4_monotone"].passed

    paired = {c.name: c for c in check_structural(tu, partner=tv)}
    assert paired["l1_contraction"].passed
    ordered = {c.name: c for c in check_structural(tu, partner=tw)}
    assert ordered["order_preservation"].passed
    shifted = {c.name: c for c in check_structural(tw, partner=tv)}
    assert shifted["order_preservation"].verdict == "inapplicable"


def test_check_structural_rejects_mismatched_pairs():
    tu, _, _ = _quick_pair()
    other = _quick_pair(flux=FluxSpec.power(3))[0]
    with pytest.raises(PreconditionError):
        check_structural(tu, partner=other)


# -------------------------------------------------------------- spacetime

def test_spacetime_on_exact_heat_has_known_defect():
    # for M G_eps the estimate is an identity up to the tail beyond t_end:
    # ratio = 1 - sqrt(t_first / t_last)
    eps, M = 0.7, 1.3
    ts = np.geomspace(0.05, 5.0, 160)  # dense: trapezoid bias is O(dlog t)^2
    snaps = [_gf(-25, 25, 4000, lambda x, t=t: oracle_heat(M, eps, x, t), time=t)
             for t in ts]
    traj = _fake_traj(snaps, eps=eps)
    chk = check_spacetime(traj, eps)
    predicted = 1.0 - math.sqrt(ts[0] / ts[-1])
    assert chk.passed
    assert chk.lhs_max_ratio == pytest.approx(predicted, abs=1e-3)


def test_spacetime_trivial_and_sparse():
    snaps = [_gf(-1, 1, 64, lambda x, t=t: np.zeros(64), time=t)
             for t in np.linspace(0.1, 1.0, 40)]
    traj = _fake_traj(snaps)
    assert check_spacetime(traj, 1.0).lhs_max_ratio == 0.0
    with pytest.raises(PreconditionError):
        check_spacetime(_fake_traj(snaps[:10]), 1.0)


# ------------------------------------------------------------------- nash

def test_nash_gaussian_scale_invariance():
    ratios = []
    for sigma in (0.25, 1.0, 4.0):
        g = _gf(-12 * sigma, 12 * sigma, 4001,
                lambda x: np.exp(-x ** 2 / (2 * sigma ** 2)))
        ratios.append(nash_ratio(g))
    assert np.allclose(ratios, ratios[0], rtol=1e-10)
    assert ratios[0] == pytest.approx(1 / (2 * math.pi), rel=1e-4)


def test_nash_corpus_constant_frozen():
    rep = check_nash([g for _, _, g in nash_corpus()])
    assert rep.c_hat == pytest.approx(NASH_CORPUS_CONSTANT, abs=1e-12)


def test_nash_skips_zero_samples():
    zero = _gf(-1, 1, 64, lambda x: np.zeros(64))
    bump = mollify(dirac(1.0, 0.0), 0.5, (-2, 2, 800))
    rep = check_nash([zero, bump])
    assert rep.n_skipped == 1
    with pytest.raises(PreconditionError):
        check_nash([zero])


def test_nash_snapshot_ratios_in_sanity_band():
    tu, _, _ = _quick_pair()
    rep = check_nash(tu.snapshots[4:])
    assert rep.c_hat <= 10 * NASH_CORPUS_CONSTANT


# ----------------------------------------------------------- decay bounds

def test_carlen_loss_saturated_by_heat_kernel():
    eps = 0.4
    ts = np.geomspace(0.05, 2.0, 16)
    snaps = [_gf(-15, 15, 4000, lambda x, t=t: oracle_heat(1.0, eps, x, t), time=t)
             for t in ts]
    traj = _fake_traj(snaps, eps=eps)    # zero flux: ratio identically ~1
    chk = check_decay_bounds(traj, "carlen_loss", DecayContext(M=1.0, eps=eps))
    assert chk.applicable and chk.passed
    assert chk.lhs_max_ratio == pytest.approx(1.0, abs=1e-3)


def test_carlen_loss_inapplicable_below_p2():
    tu, _, _ = _quick_pair(flux=FluxSpec.power(1.5))
    chk = check_decay_bounds(tu, "carlen_loss", DecayContext(M=1.0, eps=0.03))
    assert chk.verdict == "inapplicable"


def test_pcond_and_l2_bounds_on_run():
    tu, _, _ = _quick_pair()
    ctx = DecayContext(M=1.0, eps=0.03, p=2.0, a=0.5)
    for kind in ("pcond_linf", "l2_powerlaw"):
        chk = check_decay_bounds(tu, kind, ctx)
        assert chk.passed, (kind, chk.lhs_max_ratio)
    with pytest.raises(PreconditionError):
        check_decay_bounds(tu, "pcond_linf", DecayContext(M=1.0, eps=0.03))


def test_nash_lp_and_feireisl():
    tu, _, _ = _quick_pair()
    ctx = DecayContext(M=1.0, eps=0.03)
    chk = check_decay_bounds(tu, "nash_lp", ctx)
    assert chk.passed
    assert set(chk.details["max_ratio_by_p"]) == {"p2", "p4"}
    rec = check_decay_bounds(tu, "feireisl", ctx)
    assert rec.passed
    assert rec.details["c_eps"] > 0


def test_decay_bound_scaling_invariance():
    # x -> lam x with matched eps, t rescaling leaves the ratios unchanged
    lam = 2.0
    tu, _, _ = _quick_pair()
    p = 2.0
    tau = lam  # c = 1: t -> lam t, eps -> lam eps, M -> lam M
    scaled_snaps = []
    for g in tu.snapshots:
        sg = GridFunction(g.x_lo * lam, g.x_hi * lam, g.n, g.values,
                          time=g.time * tau)
        scaled_snaps.append(sg)
    base = check_decay_bounds(tu, "pcond_linf",
                              DecayContext(M=1.0, eps=0.03, p=p, a=0.5))
    prov = dict(tu.provenance)
    prov["config"] = dict(prov["config"], eps=0.03 * lam)
    scaled = Trajectory(snapshots=scaled_snaps, provenance=prov, diagnostics={})
    other = check_decay_bounds(scaled, "pcond_linf",
                               DecayContext(M=lam * 1.0, eps=0.03 * lam, p=p, a=0.5))
    assert other.lhs_max_ratio == pytest.approx(base.lhs_max_ratio, rel=1e-12)


def test_unknown_kind_rejected():
    tu, _, _ = _quick_pair()
    with pytest.raises(ValueError):
        check_decay_bounds(tu, "bogus", DecayContext(M=1.0, eps=0.03))


# --------------------------------------------------------------- residual

def test_hj_residual_on_exact_solutions():
    eps = 0.1
    ts = np.geomspace(0.3, 1.0, 9)
    snaps = [_gf(-4, 5, 2000, lambda x, t=t: oracle_burgers_viscous(1.0, eps, x, t),
                 time=t) for t in ts]
    traj = _fake_traj(snaps, eps=eps, flux=P2)
    rep = hj_residual(traj, P2, eps)
    assert not rep.flagged, (rep.max_residual, rep.truncation_scale)

    heat_snaps = [_gf(-12, 12, 2000, lambda x, t=t: oracle_heat(1.0, 1.0, x, t),
                      time=t) for t in np.geomspace(0.3, 1.0, 9)]
    rep = hj_residual(_fake_traj(heat_snaps), ZERO, 1.0)
    assert not rep.flagged


def test_hj_residual_flags_corruption():
    eps = 0.1
    ts = np.geomspace(0.3, 1.0, 9)
    snaps = [_gf(-4, 5, 2000, lambda x, t=t: oracle_burgers_viscous(1.0, eps, x, t),
                 time=t) for t in ts]
    snaps[4].values[1000] *= 1.10
    rep = hj_residual(_fake_traj(snaps, eps=eps, flux=P2), P2, eps)
    assert rep.flagged
    assert rep.max_residual > 2 * rep.truncation_scale


def test_hj_residual_needs_three_snapshots():
    snaps = [_gf(-1, 1, 64, lambda x, t=t: np.ones(64), time=t) for t in (0.1, 0.2)]
    with pytest.raises(PreconditionError):
        hj_residual(_fake_traj(snaps), ZERO, 1.0)


# ------------------------------------------------------- sweeps and probes

def test_eps_sweep_guards():
    base = SweepConfig(flux_p=2.0)
    with pytest.raises(ConfigurationError):
        eps_sweep(base, [1e-1, 5e-2])      # too narrow
    with pytest.raises(ConfigurationError):
        SweepConfig(flux_p=2.0, refine=2.0)
    tiny = SweepConfig(flux_p=2.0, n_max=100)
    with pytest.raises(ConfigurationError):
        eps_sweep(tiny, [1e-1, 1e-2, 1e-3], jobs=1)


def test_inviscid_richardson_self_limit():
    rep = inviscid_limit(1.0, 3.0, [1e-1, 3e-2, 1e-2], 0.5,
                         base=SweepConfig(flux_p=3.0, t_end=0.5, mollify_h=0.01,
                                          dx_cap=6e-3),
                         jobs=1)
    assert rep.monotone
    assert rep.passed
    assert len(rep.rows) == 2


def test_uniqueness_probe_needs_widths():
    with pytest.raises(PreconditionError):
        uniqueness_probe(dirac(1.0, 0.0), [0.2, 0.1], UniquenessConfig())
