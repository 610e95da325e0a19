"""Configuration-driven command surface.

Subcommands: solve | hj | decay | pcond | sweep | inviscid | unique |
oracle | claims.  Each run writes CSV snapshots, a canonical-JSON manifest,
and rendered figures under ``out/<config_hash>/``; identical configurations
reproduce byte-identical CSV/JSON outputs.

Exit codes: 0 all requested checks pass, 1 usage or configuration error,
2 at least one check failed, 3 runtime invariant violation (a diagnostic
dump is written).
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # python < 3.11
    import tomli as tomllib

from . import analysis, reports
from .analysis import (DecayContext, SweepConfig, UniquenessConfig,
                       check_decay_bounds, check_spacetime, check_structural,
                       eps_sweep, fit_decay, inviscid_limit, norm,
                       uniqueness_probe)
from .errors import (BlockSizeError, ConfigurationError, DomainTooSmallError,
                     InstabilityError, PreconditionError)
from .flux import (FluxSpec, certify_p_condition, flux_from_config,
                   parse_flux_flag)
from .initial_data import (MeasureData, dirac, measure_from_config, mollify,
                           parse_init_flag)
from .solver import (SolverConfig, auto_domain, hj_gradient, hj_initial,
                     oracle_burgers_inviscid, oracle_burgers_viscous,
                     oracle_heat, run, run_fv_many, run_hj)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_CHECK_FAILED = 2
EXIT_INVARIANT = 3


class _Parser(argparse.ArgumentParser):
    """argparse with usage errors mapped to exit code 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _load_config_file(path) -> dict:
    with open(path, "rb") as fh:
        return tomllib.load(fh)


def _resolve(args) -> dict:
    """Merge config file and CLI flags into one fully-resolved dict."""
    cfg = {"flux": {}, "init": {}, "solver": {}, "output": {}}
    if getattr(args, "config", None):
        file_cfg = _load_config_file(args.config)
        for k in cfg:
            cfg[k].update(file_cfg.get(k, {}))
    if getattr(args, "flux", None):
        cfg["flux"]["flag"] = args.flux
    if getattr(args, "init", None):
        cfg["init"]["flag"] = args.init
    for name, key in (("eps", "eps"), ("scheme", "scheme"), ("grid", "n"),
                      ("tend", "t_end"), ("snap", "snapshots"),
                      ("cfl", "cfl"), ("domain", "domain"),
                      ("mollify_h", "mollify_h"), ("strict", "strict"),
                      ("t_start", "t_start"), ("dt_growth", "dt_growth")):
        v = getattr(args, name, None)
        if v is not None:
            if name == "mollify_h":
                cfg["init"]["mollify_h"] = v
            else:
                cfg["solver"][key] = v
    if getattr(args, "spike", False):
        cfg["init"]["spike"] = True
    return cfg


def _build_flux(cfg) -> FluxSpec:
    fx = cfg["flux"]
    if "flag" in fx:
        return parse_flux_flag(fx["flag"])
    if fx:
        return flux_from_config(fx)
    raise ConfigurationError("no flux specified (use --flux or a config file)")


def _build_measure(cfg) -> MeasureData:
    init = cfg["init"]
    if "flag" in init:
        return parse_init_flag(init["flag"])
    if "atoms" in init or "density" in init:
        return measure_from_config(init)
    raise ConfigurationError("no initial data specified (use --init or a config file)")


def _build_run_setup(cfg):
    """Resolve flux, measure, grid, and solver config from a merged dict."""
    flux = _build_flux(cfg)
    measure = _build_measure(cfg)
    sol = cfg["solver"]
    eps = float(sol.get("eps", 0.01))
    t_end = float(sol.get("t_end", 1.0))
    h = float(cfg["init"].get("mollify_h", 0.05))
    n = int(sol.get("n", 1024))
    if "domain" in sol:
        dom = sol["domain"]
        if isinstance(dom, str):
            lo, _, hi = dom.partition(":")
            dom = (float(lo), float(hi))
        dom = (float(dom[0]), float(dom[1]))
    else:
        dom = auto_domain(measure.support, flux, eps, t_end, measure.mass, h=h)
    snaps = sol.get("snapshots", ())
    if isinstance(snaps, str):
        snaps = tuple(float(s) for s in snaps.split(","))
    else:
        snaps = tuple(float(s) for s in snaps)
    solver_cfg = SolverConfig(
        eps=eps, grid=(dom[0], dom[1], n), t_end=t_end,
        snapshot_times=snaps or (t_end,),
        scheme=sol.get("scheme", "fv"),
        cfl=float(sol.get("cfl", 0.45)),
        t_start=float(sol.get("t_start", 0.0)),
        dt_growth=float(sol.get("dt_growth", 0.004)),
        strict=bool(sol.get("strict", False)),
    )
    u0 = mollify(measure, h, (dom[0], dom[1], n),
                 shape=cfg["init"].get("shape", "bump"),
                 spike=bool(cfg["init"].get("spike", False)))
    meta = {"mollify_h": h, "measure": measure.label()}
    return flux, measure, solver_cfg, u0, meta


def _outdir(cfg, args) -> tuple[Path, str]:
    h = reports.config_hash(cfg)
    base = Path(getattr(args, "out", None) or cfg["output"].get("dir", "out"))
    d = base / h
    d.mkdir(parents=True, exist_ok=True)
    return d, h


def _write_snapshots(outdir, traj, prefix="snapshot"):
    paths = []
    for i, g in enumerate(traj.snapshots):
        p = outdir / f"{prefix}_{i:03d}.csv"
        reports.write_snapshot_csv(p, g)
        paths.append(str(p))
    return paths


def _finish(outdir, cfg, h, command, outputs, verdicts, diagnostics=None):
    man = reports.RunManifest(
        config_hash=h, command=command, inputs=cfg,
        outputs=[str(Path(p).name) for p in outputs],
        verdicts=verdicts, diagnostics=diagnostics or {})
    man.write(outdir / "manifest.json")
    failed = [v for v in verdicts if v.get("verdict") == "FAIL"]
    return EXIT_CHECK_FAILED if failed else EXIT_OK


# ----------------------------------------------------------------------
# Subcommands
# ----------------------------------------------------------------------

def _cmd_solve(args) -> int:
    cfg = _resolve(args)
    flux, measure, scfg, u0, meta = _build_run_setup(cfg)
    outdir, h = _outdir(cfg, args)
    traj = run(scfg, flux, u0, init_meta=meta)
    outputs = _write_snapshots(outdir, traj)
    checks = check_structural(traj)
    verdicts = [c.as_dict() for c in checks]
    fig = outdir / "snapshots.png"
    reports.save_snapshot_figure(fig, traj.snapshots,
                                 title=f"{flux.label()}, eps={scfg.eps:g}")
    outputs.append(str(fig))
    diag = {k: v for k, v in traj.diagnostics.items() if not isinstance(v, np.ndarray)}
    diag["snapshot_times"] = [float(t) for t in traj.times]
    diag["flux"] = flux.label()
    diag["eps"] = scfg.eps
    if scfg.scheme == "duhamel":
        from .kernel import KERNEL_NORM_CONSTANTS
        diag["kernel_norm_constants"] = {k: list(v)
                                         for k, v in KERNEL_NORM_CONSTANTS.items()}
    code = _finish(outdir, cfg, h, "solve", outputs, verdicts, diag)
    print(f"wrote {len(traj.snapshots)} snapshots to {outdir}")
    for c in checks:
        print(f"  {c.name}: {c.verdict}")
    return code


def _cmd_hj(args) -> int:
    cfg = _resolve(args)
    flux, measure, scfg, u0, meta = _build_run_setup(cfg)
    outdir, h = _outdir(cfg, args)
    phi0 = hj_initial(u0)
    vtraj = run_hj(scfg, flux, phi0, init_meta=meta)
    outputs = _write_snapshots(outdir, vtraj, prefix="hj_v")
    grads = [hj_gradient(g) for g in vtraj.snapshots]
    p = flux.max_exponent
    verdicts = []
    if p is not None and not flux.is_zero:
        a = 0.5 * (p - 1.0)
        M = measure.mass
        ratios = [float(np.max(g.values)) * (a * g.time) ** (1.0 / p) / M ** (1.0 / p)
                  for g in grads]
        chk = analysis.EstimateCheck(name="hj_gradient_bound",
                                     lhs_max_ratio=max(ratios),
                                     tol=analysis.ESTIMATE_TOL,
                                     details={"certified_a": a})
        verdicts.append(chk.as_dict())
    fig = outdir / "hj.png"
    reports.save_snapshot_figure(fig, vtraj.snapshots, title="integrated solution v")
    outputs.append(str(fig))
    code = _finish(outdir, cfg, h, "hj", outputs, verdicts)
    print(f"wrote HJ run to {outdir}")
    for v in verdicts:
        print(f"  {v['name']}: {v['verdict']}")
    return code


def _cmd_decay(args) -> int:
    cfg = _resolve(args)
    cfg["solver"].setdefault("snapshots", tuple(
        float(t) for t in np.geomspace(args.t_first, cfg["solver"].get("t_end", 1.0),
                                       args.n_snapshots)))
    flux, measure, scfg, u0, meta = _build_run_setup(cfg)
    outdir, h = _outdir(cfg, args)
    traj = run(scfg, flux, u0, init_meta=meta)
    norm_p = np.inf if args.norm == "inf" else float(args.norm)
    fit = fit_decay(traj, norm_p)
    ts = traj.times
    norms = [norm(g, norm_p) for g in traj.snapshots]
    series = outdir / "decay.csv"
    reports.write_series_csv(series, ts, norms)
    reports.write_json(outdir / "decay_fit.json", fit)
    fig = outdir / "decay.png"
    reports.save_decay_figure(fig, ts, norms, fit=fit,
                              title=f"L^{args.norm} decay, {flux.label()}")
    outputs = [str(series), str(outdir / "decay_fit.json"), str(fig)]
    code = _finish(outdir, cfg, h, "decay", outputs, [])
    print(f"fitted exponent {fit.exponent:.4f} (r2={fit.r2:.5f}) over "
          f"window [{fit.window[0]:.3g}, {fit.window[1]:.3g}]")
    return code


def _cmd_pcond(args) -> int:
    flux = parse_flux_flag(args.flux)
    cfg = {"flux": {"flag": args.flux},
           "pcond": {"a": args.a, "b": args.b, "gamma": args.gamma,
                     "r_range": [args.rmin, args.rmax],
                     "eta_range": [args.etamin, args.etamax]},
           "output": {}}
    outdir, h = _outdir(cfg, args)
    rep = certify_p_condition(flux, a=args.a, b=args.b, gamma=args.gamma,
                              r_range=(args.rmin, args.rmax),
                              eta_range=(args.etamin, args.etamax))
    reports.write_json(outdir / "pcond.json", rep)
    etas = [row[0] for row in rep.slack_by_eta]
    slack = [max(row[1], 1e-300) for row in rep.slack_by_eta]
    reports.save_decay_figure(outdir / "pcond.png", etas, slack,
                              bound=[rep.params.b * e ** rep.params.gamma + 1e-300
                                     for e in etas],
                              title=f"slack deficit vs eta, {flux.label()}",
                              xlabel="eta", ylabel="max deficit")
    (outdir / "pcond.md").write_text(reports.markdown_table(
        ["field", "value"],
        [("p", rep.params.p), ("a", rep.params.a), ("b", rep.params.b),
         ("gamma", rep.params.gamma), ("margin", rep.margin),
         ("best_a_zero_slack", rep.best_a_zero_slack),
         ("passed", rep.passed), ("note", rep.note)]))
    verdict = {"name": "p_condition", "verdict": "pass" if rep.passed else "FAIL"}
    code = _finish(outdir, cfg, h, "pcond",
                   [str(outdir / "pcond.json"), str(outdir / "pcond.md")], [verdict])
    print(f"p-condition (p={rep.params.p:g}, a={rep.params.a:g}, "
          f"b={rep.params.b:g}, gamma={rep.params.gamma:g}): "
          f"{'pass' if rep.passed else 'FAIL'} (margin {rep.margin:.3e})")
    return code


def _cmd_sweep(args) -> int:
    flux = parse_flux_flag(args.flux)
    if flux.kind != "power":
        raise ConfigurationError("sweeps support power-law fluxes")
    eps_list = [float(e) for e in args.eps_list.split(",")]
    base = SweepConfig(flux_p=flux.p, M=args.M, t_end=args.tend,
                       mollify_h=args.mollify_h)
    cfg = {"sweep": {"flux": args.flux, "eps_list": eps_list, "kind": args.kind,
                     "M": args.M, "t_end": args.tend,
                     "mollify_h": args.mollify_h}, "output": {}}
    outdir, h = _outdir(cfg, args)
    rep = eps_sweep(base, eps_list, kind=args.kind, jobs=args.jobs)
    reports.write_json(outdir / "sweep.json", rep)
    headers = ["eps", "pcond_linf", "l2_powerlaw", "sup_exponent", "l2_exponent"]
    rows = [[r["eps"], r["pcond_linf"], r["l2_powerlaw"],
             r["sup_exponent"], r["l2_exponent"]] for r in rep.rows]
    (outdir / "sweep.md").write_text(reports.markdown_table(headers, rows))
    fig = outdir / "sweep.png"
    reports.save_sweep_figure(fig, rep.eps_list, [r[args.kind] for r in rep.rows],
                              title=f"{args.kind} ratio, p={flux.p:g}")
    verdict = {"name": f"eps_sweep_{args.kind}",
               "verdict": "pass" if rep.passed else "FAIL"}
    code = _finish(outdir, cfg, h, "sweep",
                   [str(outdir / "sweep.json"), str(outdir / "sweep.md"), str(fig)],
                   [verdict])
    print(f"sweep {args.kind}: {'pass' if rep.passed else 'FAIL'} "
          f"(trend slope per ln eps = {rep.trend_slope_ln:+.4f})")
    return code


def _cmd_inviscid(args) -> int:
    eps_list = [float(e) for e in args.eps_list.split(",")]
    cfg = {"inviscid": {"M": args.M, "q": args.q, "eps_list": eps_list,
                        "t_probe": args.tprobe, "mollify_h": args.mollify_h},
           "output": {}}
    outdir, h = _outdir(cfg, args)
    base = SweepConfig(flux_p=args.q, M=args.M, t_end=args.tprobe,
                       mollify_h=args.mollify_h)
    rep = inviscid_limit(args.M, args.q, eps_list, args.tprobe, base=base,
                         jobs=args.jobs)
    reports.write_json(outdir / "inviscid.json", rep)
    if args.q == 2.0:
        rows = [[r["eps"], r["l1_error"], r["sup"]] for r in rep.rows]
        (outdir / "inviscid.md").write_text(
            reports.markdown_table(["eps", "l1_error_vs_nwave", "sup"], rows))
        reports.save_sweep_figure(outdir / "inviscid.png",
                                  [r["eps"] for r in rep.rows],
                                  [r["l1_error"] for r in rep.rows],
                                  title="L1 distance to the N-wave")
    verdict = {"name": "inviscid_limit", "verdict": "pass" if rep.passed else "FAIL"}
    code = _finish(outdir, cfg, h, "inviscid",
                   [str(outdir / "inviscid.json")], [verdict])
    print(f"inviscid limit q={args.q:g}: {'pass' if rep.passed else 'FAIL'} "
          f"(final error {rep.final_error:.4f})")
    return code


def _cmd_unique(args) -> int:
    h_list = [float(x) for x in args.h_list.split(",")]
    cfg = {"unique": {"M": args.M, "p": args.p, "eps": args.eps,
                      "h_list": h_list, "t_probe": args.tprobe}, "output": {}}
    outdir, hh = _outdir(cfg, args)
    ucfg = UniquenessConfig(flux_p=args.p, eps=args.eps, M=args.M,
                            t_probe=args.tprobe)
    rep = uniqueness_probe(dirac(args.M, 0.0), h_list, ucfg, jobs=args.jobs)
    pairs = {f"{a:g}/{b:g}": v for (a, b), v in rep.pairwise.items()}
    reports.write_json(outdir / "unique.json", {
        "h_list": rep.h_list, "pairwise": pairs, "fitted_order": rep.fitted_order,
        "shape_swap_distance": rep.shape_swap_distance,
        "shape_comparable_factor": rep.shape_comparable_factor,
        "sup_hypothesis_constant": rep.sup_hypothesis_constant,
        "passed": rep.passed})
    hs = rep.h_list[:-1]
    consec = [rep.pairwise[(rep.h_list[i], rep.h_list[i + 1])] for i in range(len(hs))]
    reports.save_convergence_figure(outdir / "unique.png", hs, consec,
                                    title="primitive self-convergence in h")
    verdict = {"name": "uniqueness_probe", "verdict": "pass" if rep.passed else "FAIL"}
    code = _finish(outdir, cfg, hh, "unique", [str(outdir / "unique.json")], [verdict])
    print(f"uniqueness probe: {'pass' if rep.passed else 'FAIL'} "
          f"(fitted order {rep.fitted_order:.3f})")
    return code


def _cmd_oracle(args) -> int:
    dom = args.domain or "-5:5"
    lo, _, hi = dom.partition(":")
    x = np.linspace(float(lo), float(hi), args.n)
    if args.which == "heat":
        u = oracle_heat(args.M, args.eps, x, args.t)
    elif args.which == "burgers":
        u = oracle_burgers_viscous(args.M, args.eps, x, args.t)
    elif args.which == "nwave":
        u = oracle_burgers_inviscid(args.M, x, args.t)
    else:
        raise ConfigurationError(f"unknown oracle {args.which!r}")
    cfg = {"oracle": {"which": args.which, "M": args.M, "eps": args.eps,
                      "t": args.t, "domain": dom, "n": args.n}, "output": {}}
    outdir, h = _outdir(cfg, args)
    path = outdir / f"oracle_{args.which}.csv"
    lines = ["x,u"] + [f"{xx:.17g},{uu:.17g}" for xx, uu in zip(x, u)]
    path.write_text("\n".join(lines) + "\n")
    from .initial_data import GridFunction as _GF
    g = _GF.__new__(_GF)
    half = 0.5 * (x[1] - x[0])
    g.x_lo, g.x_hi, g.n = x[0] - half, x[-1] + half, x.size
    g.values, g.time = u, args.t
    fig = outdir / f"oracle_{args.which}.png"
    reports.save_snapshot_figure(fig, [g], labels=[f"t = {args.t:g}"],
                                 title=f"{args.which} oracle")
    code = _finish(outdir, cfg, h, "oracle", [str(path), str(fig)], [])
    print(f"wrote {path}")
    return code


def _cmd_claims(args) -> int:
    """Run the full battery for one flux/eps and emit the claims matrix."""
    flux = parse_flux_flag(args.flux)
    eps = args.eps
    M = args.M
    cfg = {"claims": {"flux": args.flux, "eps": eps, "M": M}, "output": {}}
    outdir, h = _outdir(cfg, args)

    p = flux.max_exponent
    cert = certify_p_condition(flux)
    if not cert.passed:
        cert = certify_p_condition(flux, a=0.5 * cert.best_a_zero_slack)
    a = cert.params.a

    meas = dirac(M, 0.0)
    h_moll = 0.01
    dom = auto_domain(meas.support, flux, eps, 1.0, M, h=h_moll)
    n = min(int(np.ceil((dom[1] - dom[0]) / min(eps / 4.0, 4e-3))), 120_000)
    scfg = SolverConfig(eps=eps, grid=(dom[0], dom[1], n), t_end=1.0,
                        snapshot_times=tuple(np.geomspace(2e-4, 1.0, 48)),
                        cfl=0.9, dt_growth=0.008)
    u0 = mollify(meas, h_moll, (dom[0], dom[1], n))
    shift = 0.25 * (meas.support[1] - meas.support[0] + 1.0)
    v0 = u0.with_values(np.interp(u0.x - shift, u0.x, u0.values, left=0.0, right=0.0))
    v0.values *= M / v0.mass
    w0 = u0.with_values(u0.values + mollify(dirac(0.5 * M, shift), h_moll,
                                            (dom[0], dom[1], n)).values)
    meta = {"mollify_h": h_moll, "measure": meas.label()}
    tu, tv, tw = run_fv_many(scfg, flux, [u0, v0, w0], init_meta=meta)

    checks = check_structural(tu)
    checks += [c for c in check_structural(tu, partner=tv) if c.name == "l1_contraction"]
    checks += [c for c in check_structural(tu, partner=tw)
               if c.name == "order_preservation"]
    checks.append(check_spacetime(tu, eps))
    ctx = DecayContext(M=M, eps=eps, p=p, a=a, flux_min_p=flux.min_exponent)
    for kind in ("carlen_loss", "pcond_linf", "l2_powerlaw", "nash_lp", "feireisl"):
        checks.append(check_decay_bounds(tu, kind, ctx))

    phi0 = hj_initial(u0)
    vtraj = run_hj(scfg, flux, phi0, init_meta=meta)
    grads = [hj_gradient(g) for g in vtraj.snapshots]
    ratios = [float(np.max(g.values)) * (a * g.time) ** (1.0 / p) / M ** (1.0 / p)
              for g in grads]
    checks.append(analysis.EstimateCheck(
        name="hj_gradient_bound", lhs_max_ratio=max(ratios),
        tol=analysis.ESTIMATE_TOL, details={"certified_a": a}))
    checks.append(analysis.EstimateCheck(
        name="pcond_certification", lhs_max_ratio=1.0 if cert.passed else 2.0,
        tol=0.0, details={"a": a, "b": cert.params.b, "gamma": cert.params.gamma}))

    verdicts = [c.as_dict() for c in checks]
    from .kernel import KERNEL_NORM_CONSTANTS
    (outdir / "claims.md").write_text(reports.checks_markdown(checks))
    reports.write_json(outdir / "claims.json", verdicts)
    fig = outdir / "claims_snapshots.png"
    reports.save_snapshot_figure(fig, tu.snapshots[::12] + [tu.snapshots[-1]],
                                 title=f"claims run: {flux.label()}, eps={eps:g}")
    code = _finish(outdir, cfg, h, "claims",
                   [str(outdir / "claims.md"), str(outdir / "claims.json"), str(fig)],
                   verdicts,
                   diagnostics={"certified_a": a,
                                "kernel_norm_constants": {
                                    k: list(v) for k, v in KERNEL_NORM_CONSTANTS.items()}})
    print(f"claims matrix ({len(checks)} estimates) -> {outdir}")
    for c in checks:
        print(f"  {c.name:26s} {c.verdict}")
    return code


# ----------------------------------------------------------------------
# Parser
# ----------------------------------------------------------------------

def _add_common(sp, with_solver=True):
    sp.add_argument("--config", help="TOML configuration file")
    sp.add_argument("--out", help="output directory root (default out/)")
    if with_solver:
        sp.add_argument("--flux", help="flux spec, e.g. power:2, polysum:1x1.5,2x3, zero")
        sp.add_argument("--init", help="initial measure, e.g. dirac:1@0 or dirac:1@0+0.5@1")
        sp.add_argument("--eps", type=float, help="viscosity")
        sp.add_argument("--scheme", choices=["fv", "duhamel"], help="time integrator")
        sp.add_argument("--grid", type=int, help="number of cells")
        sp.add_argument("--domain", help="spatial domain lo:hi (default: auto)")
        sp.add_argument("--tend", type=float, help="final time")
        sp.add_argument("--snap", help="comma-separated snapshot times")
        sp.add_argument("--cfl", type=float, help="convective CFL number in (0,1]")
        sp.add_argument("--mollify-h", dest="mollify_h", type=float,
                        help="mollifier half-width")
        sp.add_argument("--spike", action="store_true",
                        help="debug: place atoms as single-cell spikes")
        sp.add_argument("--strict", action="store_true",
                        help="fail runs whose boundary leakage exceeds 1e-8 * mass")
        sp.add_argument("--t-start", dest="t_start", type=float,
                        help="start time (seeded runs)")
        sp.add_argument("--dt-growth", dest="dt_growth", type=float,
                        help="accuracy cap dt <= dt_init + growth * t")


def build_parser() -> _Parser:
    ap = _Parser(prog="viscid",
                 description="1D viscous conservation laws with measure data: "
                             "solvers, oracles, and estimate checks")
    sub = ap.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("solve", help="run one solver configuration")
    _add_common(sp)
    sp.set_defaults(fn=_cmd_solve)

    sp = sub.add_parser("hj", help="run the integrated (Hamilton-Jacobi) form")
    _add_common(sp)
    sp.set_defaults(fn=_cmd_hj)

    sp = sub.add_parser("decay", help="run and fit a norm decay exponent")
    _add_common(sp)
    sp.add_argument("--norm", default="inf", help="norm order (number or 'inf')")
    sp.add_argument("--t-first", dest="t_first", type=float, default=1e-3)
    sp.add_argument("--n-snapshots", dest="n_snapshots", type=int, default=48)
    sp.set_defaults(fn=_cmd_decay)

    sp = sub.add_parser("pcond", help="certify the p-condition for a flux")
    _add_common(sp, with_solver=False)
    sp.add_argument("--flux", required=True)
    sp.add_argument("--a", type=float, help="lower-bound coefficient (default (p-1)/2)")
    sp.add_argument("--b", type=float, help="slack coefficient (default: searched)")
    sp.add_argument("--gamma", type=float, help="slack exponent (default: searched)")
    sp.add_argument("--rmin", type=float, default=1e-6)
    sp.add_argument("--rmax", type=float, default=1e3)
    sp.add_argument("--etamin", type=float, default=1e-4)
    sp.add_argument("--etamax", type=float, default=1e-1)
    sp.set_defaults(fn=_cmd_pcond)

    sp = sub.add_parser("sweep", help="viscosity sweep of the decay-bound ratios")
    _add_common(sp, with_solver=False)
    sp.add_argument("--flux", required=True)
    sp.add_argument("--eps-list", dest="eps_list", required=True)
    sp.add_argument("--kind", default="pcond_linf",
                    choices=["pcond_linf", "l2_powerlaw"])
    sp.add_argument("--M", type=float, default=1.0)
    sp.add_argument("--tend", type=float, default=1.0)
    sp.add_argument("--mollify-h", dest="mollify_h", type=float, default=0.0025)
    sp.add_argument("--jobs", type=int, default=None)
    sp.set_defaults(fn=_cmd_sweep)

    sp = sub.add_parser("inviscid", help="vanishing-viscosity limit study")
    _add_common(sp, with_solver=False)
    sp.add_argument("--M", type=float, default=1.0)
    sp.add_argument("--q", type=float, default=2.0)
    sp.add_argument("--eps-list", dest="eps_list",
                    default="1e-1,3e-2,1e-2,3e-3,1e-3")
    sp.add_argument("--tprobe", type=float, default=1.0)
    sp.add_argument("--mollify-h", dest="mollify_h", type=float, default=0.0025)
    sp.add_argument("--jobs", type=int, default=None)
    sp.set_defaults(fn=_cmd_inviscid)

    sp = sub.add_parser("unique", help="mollifier self-convergence probe")
    _add_common(sp, with_solver=False)
    sp.add_argument("--M", type=float, default=1.0)
    sp.add_argument("--p", type=float, default=2.0)
    sp.add_argument("--eps", type=float, default=0.05)
    sp.add_argument("--h-list", dest="h_list", default="0.2,0.1,0.05,0.025")
    sp.add_argument("--tprobe", type=float, default=0.5)
    sp.add_argument("--jobs", type=int, default=None)
    sp.set_defaults(fn=_cmd_unique)

    sp = sub.add_parser("oracle", help="emit a closed-form solution as CSV")
    _add_common(sp, with_solver=False)
    sp.add_argument("--which", choices=["heat", "burgers", "nwave"], required=True)
    sp.add_argument("--M", type=float, default=1.0)
    sp.add_argument("--eps", type=float, default=0.1)
    sp.add_argument("--t", type=float, default=1.0)
    sp.add_argument("--domain", help="lo:hi (default -5:5)")
    sp.add_argument("--n", type=int, default=2001)
    sp.set_defaults(fn=_cmd_oracle)

    sp = sub.add_parser("claims", aliases=["claims-matrix"],
                    help="claims matrix: every estimate for one setup")
    _add_common(sp, with_solver=False)
    sp.add_argument("--flux", required=True)
    sp.add_argument("--eps", type=float, default=0.01)
    sp.add_argument("--M", type=float, default=1.0)
    sp.set_defaults(fn=_cmd_claims)

    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        return args.fn(args)
    except (ConfigurationError, PreconditionError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (InstabilityError, BlockSizeError, DomainTooSmallError) as exc:
        diag = getattr(exc, "diagnostics", {})
        dump = Path(getattr(args, "out", None) or "out") / "diagnostic_dump.json"
        dump.parent.mkdir(parents=True, exist_ok=True)
        reports.write_json(dump, {"error": str(exc), "diagnostics": diag})
        print(f"invariant violation: {exc} (diagnostics in {dump})", file=sys.stderr)
        return EXIT_INVARIANT


if __name__ == "__main__":
    sys.exit(main())
