"""Time integrators for u_t + f(u)_x = eps u_xx and closed-form oracles.

Two independent solvers for the conservation law:

* ``run_fv``      -- monotone finite volume: Engquist-Osher convection
  (plain upwind for nondecreasing fluxes) with backward-Euler diffusion via
  a tridiagonal solve.  Monotone, conservative, and order/contraction/
  max-min preserving by construction.
* ``run_duhamel`` -- fixed-point iteration on the integral form
  u(t) = G * u(t0) - int dx G(t-s) * f(u(s)) ds, with the heat semigroup
  applied through its analytic Fourier symbol and block lengths chosen so
  the Picard map is a 1/2-contraction.

plus ``run_hj`` for the integrated equation v_t + f(v_x) = eps v_xx, and
closed-form source solutions used as accuracy oracles.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, asdict

import numpy as np
from scipy.linalg import solve_banded
from scipy.special import erfc, erfcx

from .errors import (BlockSizeError, ConfigurationError, DomainTooSmallError,
                     InstabilityError)
from .flux import FluxSpec, eval_flux, eval_flux_deriv, eo_split
from .initial_data import GridFunction
from .kernel import TAIL_TOL, spectral_symbol

MAXMIN_TOL = 1e-10     # relative slack for the discrete maximum principle
BOUNDARY_TOL = 1e-12   # boundary values must stay below this times ||u0||_inf
LEAK_STRICT = 1e-8     # strict mode rejects runs leaking more mass than this


@dataclass
class SolverConfig:
    """Shared configuration for all time integrators."""

    eps: float
    grid: tuple[float, float, int]
    t_end: float
    snapshot_times: tuple = ()
    scheme: str = "fv"
    cfl: float = 0.45
    t_start: float = 0.0          # > 0 when seeding from a known state
    dt_init: float | None = None  # accuracy floor; default dx^2/(4 eps)
    dt_growth: float = 0.004      # dt <= dt_init + dt_growth * t
    picard_tol: float = 1e-10
    picard_max_iter: int = 120
    sub_nodes: int = 3
    block_factor: float = 1.0
    strict: bool = False

    def __post_init__(self):
        if self.eps <= 0:
            raise ConfigurationError("eps must be positive")
        x_lo, x_hi, n = self.grid
        if not (x_hi > x_lo and n >= 8):
            raise ConfigurationError("grid must satisfy x_hi > x_lo and n >= 8")
        if not self.t_end > self.t_start >= 0:
            raise ConfigurationError("need t_end > t_start >= 0")
        if not 0 < self.cfl <= 1:
            raise ConfigurationError("cfl must lie in (0, 1]")
        if self.scheme not in ("fv", "duhamel"):
            raise ConfigurationError(f"unknown scheme {self.scheme!r}")
        snaps = tuple(sorted(float(t) for t in self.snapshot_times))
        if not snaps:
            snaps = (self.t_end,)
        for t in snaps:
            if not self.t_start < t <= self.t_end + 1e-12:
                raise ConfigurationError(
                    f"snapshot time {t} outside ({self.t_start}, {self.t_end}]")
        object.__setattr__(self, "snapshot_times", snaps)

    @property
    def dx(self) -> float:
        x_lo, x_hi, n = self.grid
        return (x_hi - x_lo) / n

    def dt_floor(self) -> float:
        if self.dt_init is not None:
            return self.dt_init
        return self.dx ** 2 / (4.0 * self.eps)


@dataclass
class Trajectory:
    """Time-stamped snapshots with provenance and step diagnostics."""

    snapshots: list
    provenance: dict
    diagnostics: dict

    def __post_init__(self):
        ts = self.times
        if np.any(np.diff(ts) <= 0):
            raise ValueError("snapshot times must be strictly increasing")

    @property
    def times(self) -> np.ndarray:
        return np.array([g.time for g in self.snapshots])

    def at(self, t: float) -> GridFunction:
        i = int(np.argmin(np.abs(self.times - t)))
        if abs(self.snapshots[i].time - t) > 1e-9 * max(1.0, t):
            raise KeyError(f"no snapshot at t = {t}")
        return self.snapshots[i]

    @property
    def final(self) -> GridFunction:
        return self.snapshots[-1]


def _provenance(cfg: SolverConfig, flux: FluxSpec, u0: GridFunction,
                scheme: str, init_meta: dict | None) -> dict:
    prov = {
        "scheme": scheme,
        "config": asdict(cfg),
        "flux": flux.label(),
        "flux_p": flux.max_exponent,
        # the zero flux satisfies the f(xi)/xi regularity trivially
        "flux_min_p": math.inf if flux.is_zero else flux.min_exponent,
        "init": dict(init_meta or {}),
    }
    prov["init"].setdefault("mass", u0.mass)
    prov["init"].setdefault("sup", float(np.max(u0.values)))
    return prov


def _wrap_snapshot(u: np.ndarray, cfg: SolverConfig, t: float,
                   sup0: float) -> GridFunction:
    if np.min(u) < -MAXMIN_TOL * max(1.0, sup0):
        raise InstabilityError(
            f"snapshot at t={t:g} has negative values beyond tolerance",
            {"min": float(np.min(u)), "t": t})
    x_lo, x_hi, n = cfg.grid
    g = GridFunction.__new__(GridFunction)
    g.x_lo, g.x_hi, g.n = x_lo, x_hi, n
    g.values = u.copy()
    g.time = t
    return g


# ----------------------------------------------------------------------
# Monotone finite-volume scheme
# ----------------------------------------------------------------------

def _eo_faces(flux: FluxSpec, u: np.ndarray) -> np.ndarray:
    """Engquist-Osher numerical flux at the n+1 cell faces (ghost state 0)."""
    fplus, fminus = eo_split(flux, u)
    faces = np.empty(u.size + 1)
    faces[1:-1] = fplus[:-1]
    faces[0] = 0.0
    faces[-1] = fplus[-1]
    if np.any(fminus):
        faces[1:-1] += fminus[1:]
        faces[0] += fminus[0]
    return faces


def run_fv_many(cfg: SolverConfig, flux: FluxSpec, u0s, init_meta=None):
    """Evolve several initial states in lockstep (shared dt sequence).

    A common dt makes the monotone-scheme comparison properties (L1
    contraction, order preservation) hold exactly between the returned
    trajectories, not just in the limit.
    """
    x_lo, x_hi, n = cfg.grid
    dx = cfg.dx
    eps = cfg.eps
    states = [np.asarray(g.values, dtype=float).copy() for g in u0s]
    for g in u0s:
        if (g.x_lo, g.x_hi, g.n) != (x_lo, x_hi, n):
            raise ConfigurationError("initial data grid does not match the config grid")

    sup0 = [float(np.max(s)) for s in states]
    min0 = [min(0.0, float(np.min(s))) for s in states]
    mass0 = [dx * float(np.sum(s)) for s in states]

    events = list(cfg.snapshot_times)
    t = cfg.t_start
    floor = cfg.dt_floor()
    snaps = [[] for _ in states]
    dt_hist = []
    leak_conv = [0.0] * len(states)
    leak_diff = [0.0] * len(states)
    bmax = [0.0] * len(states)
    ab = np.zeros((3, n))
    ei = 0
    nsteps = 0

    while ei < len(events):
        fpmax = 0.0
        for s in states:
            clipped = np.maximum(s, 0.0)
            fpmax = max(fpmax, float(np.max(np.abs(eval_flux_deriv(flux, clipped)))))
        dt = floor + cfg.dt_growth * t
        if fpmax > 0:
            dt = min(dt, cfg.cfl * dx / fpmax)
        dt = min(dt, events[ei] - t)
        if not dt > 0:
            raise InstabilityError("time step collapsed to zero",
                                   {"t": t, "fpmax": fpmax})

        r = eps * dt / dx ** 2
        ab[0, :] = -r
        ab[1, :] = 1.0 + 2.0 * r
        ab[2, :] = -r
        for i, s in enumerate(states):
            faces = _eo_faces(flux, np.maximum(s, 0.0))
            star = s - (dt / dx) * (faces[1:] - faces[:-1])
            leak_conv[i] += dt * (faces[-1] - faces[0])
            new = solve_banded((1, 1), ab, star)
            leak_diff[i] += eps * dt * (new[0] + new[-1]) / dx
            mn = float(np.min(new))
            mx = float(np.max(new))
            if np.isnan(mn):
                raise InstabilityError("NaN in finite-volume state",
                                       {"t": t, "dt": dt, "step": nsteps})
            tol = MAXMIN_TOL * max(1.0, sup0[i])
            if mn < min0[i] - tol or mx > sup0[i] + tol:
                raise InstabilityError(
                    "discrete maximum principle violated",
                    {"t": t, "dt": dt, "min": mn, "max": mx,
                     "min0": min0[i], "max0": sup0[i]})
            bmax[i] = max(bmax[i], abs(new[0]), abs(new[-1]))
            states[i] = new
        t += dt
        nsteps += 1
        dt_hist.append(dt)
        if abs(t - events[ei]) < 1e-13 * max(1.0, events[ei]):
            t = events[ei]
            for i, s in enumerate(states):
                snaps[i].append(_wrap_snapshot(s, cfg, t, sup0[i]))
            ei += 1

    trajs = []
    for i in range(len(states)):
        diag = {
            "n_steps": nsteps,
            "dt_history": np.asarray(dt_hist),
            "leakage_convective": leak_conv[i],
            "leakage_diffusive": leak_diff[i],
            "boundary_max": bmax[i],
            "boundary_ok": bool(bmax[i] <= BOUNDARY_TOL * max(1.0, sup0[i])),
        }
        leak = abs(leak_conv[i]) + abs(leak_diff[i])
        if cfg.strict and leak > LEAK_STRICT * mass0[i]:
            raise DomainTooSmallError(
                f"boundary leakage {leak:.3e} exceeds {LEAK_STRICT:g} * mass "
                f"in strict mode; widen the domain")
        trajs.append(Trajectory(snapshots=snaps[i],
                                provenance=_provenance(cfg, flux, u0s[i], "fv", init_meta),
                                diagnostics=diag))
    return trajs


def run_fv(cfg: SolverConfig, flux: FluxSpec, u0: GridFunction,
           init_meta=None) -> Trajectory:
    """Monotone finite-volume run (upwind/EO convection + BE diffusion)."""
    return run_fv_many(cfg, flux, [u0], init_meta=init_meta)[0]


# ----------------------------------------------------------------------
# Duhamel fixed-point solver
# ----------------------------------------------------------------------

def run_duhamel(cfg: SolverConfig, flux: FluxSpec, u0: GridFunction,
                init_meta=None) -> Trajectory:
    """Picard iteration on the integral (Duhamel) form of the equation.

    On each block [t, t + dT] the map u -> G*u(t) - int dxG(t'-s) * f(u(s)) ds
    is iterated on midpoint sub-nodes until successive iterates differ by
    less than picard_tol in sup norm.  dT is chosen so the Lipschitz
    contraction factor 2 C1 (dT / (pi eps))^(1/2) stays at 1/2, with
    C1 = sup |f'| over the current solution range.
    """
    x_lo, x_hi, n = cfg.grid
    dx = cfg.dx
    eps = cfg.eps
    if (u0.x_lo, u0.x_hi, u0.n) != (x_lo, x_hi, n):
        raise ConfigurationError("initial data grid does not match the config grid")

    nfft = 2 * n
    xi = 2.0 * np.pi * np.fft.rfftfreq(nfft, dx)
    pad_len = nfft * dx

    u = np.asarray(u0.values, dtype=float).copy()
    sup0 = float(np.max(u))
    t = cfg.t_start
    m = cfg.sub_nodes
    events = list(cfg.snapshot_times)
    snaps = []
    block_iters = []
    block_resids = []
    n_blocks = 0
    ei = 0

    def fhat(vals):
        return np.fft.rfft(eval_flux(flux, np.maximum(vals, 0.0)), nfft)

    while ei < len(events):
        c1 = float(np.max(np.abs(eval_flux_deriv(flux, np.maximum(u, 0.0)))))
        if c1 > 0:
            dT = cfg.block_factor * math.pi * eps / (16.0 * c1 * c1)
        else:
            dT = events[ei] - t
        dT = min(dT, events[ei] - t)
        # circular wrap-around must stay below the kernel tail tolerance
        if erfc(0.5 * pad_len / (2.0 * math.sqrt(eps * dT))) > TAIL_TOL:
            raise DomainTooSmallError("padded domain too small for the block kernel")

        u_spec = np.fft.rfft(u, nfft)
        if c1 == 0.0:
            u = np.fft.irfft(u_spec * spectral_symbol(xi, eps, dT, 0), nfft)[:n]
            block_iters.append(1)
            block_resids.append(0.0)
        else:
            delta = dT / m
            sigma = t + (np.arange(m) + 0.5) * delta
            prop0 = [spectral_symbol(xi, eps, s - t, 0) for s in sigma]
            grad = [[spectral_symbol(xi, eps, sigma[j] - sigma[k], 1)
                     for k in range(j)] for j in range(m)]
            grad_self = 1j * xi
            nodes = [np.fft.irfft(u_spec * prop0[j], nfft)[:n] for j in range(m)]
            resid_prev = math.inf
            rising = 0
            for it in range(1, cfg.picard_max_iter + 1):
                fh = [fhat(nodes[k]) for k in range(m)]
                resid = 0.0
                new_nodes = []
                for j in range(m):
                    acc = u_spec * prop0[j]
                    for k in range(j):
                        acc = acc - delta * grad[j][k] * fh[k]
                    acc = acc - 0.5 * delta * grad_self * fh[j]
                    vals = np.fft.irfft(acc, nfft)[:n]
                    resid = max(resid, float(np.max(np.abs(vals - nodes[j]))))
                    new_nodes.append(vals)
                nodes = new_nodes
                if resid < cfg.picard_tol:
                    break
                if resid > resid_prev:
                    rising += 1
                    if rising >= 2:
                        raise BlockSizeError(
                            f"Picard iterates diverging at t={t:g} "
                            f"(residual {resid:.3e}); reduce block_factor")
                else:
                    rising = 0
                resid_prev = resid
            else:
                raise BlockSizeError(
                    f"Picard did not reach tol={cfg.picard_tol:g} in "
                    f"{cfg.picard_max_iter} iterations at t={t:g}")
            block_iters.append(it)
            block_resids.append(resid)
            fh = [fhat(nodes[k]) for k in range(m)]
            acc = u_spec * spectral_symbol(xi, eps, dT, 0)
            for k in range(m):
                acc = acc - delta * spectral_symbol(xi, eps, t + dT - sigma[k], 1) * fh[k]
            u = np.fft.irfft(acc, nfft)[:n]
        t += dT
        n_blocks += 1
        if abs(t - events[ei]) < 1e-13 * max(1.0, events[ei]):
            t = events[ei]
            snaps.append(_wrap_snapshot(u, cfg, t, sup0))
            ei += 1

    diag = {
        "n_blocks": n_blocks,
        "picard_iterations": block_iters,
        "picard_residuals": block_resids,
        "max_iterations": max(block_iters),
        "max_residual": max(block_resids),
    }
    return Trajectory(snapshots=snaps,
                      provenance=_provenance(cfg, flux, u0, "duhamel", init_meta),
                      diagnostics=diag)


def run(cfg: SolverConfig, flux: FluxSpec, u0: GridFunction,
        init_meta=None) -> Trajectory:
    """Dispatch on cfg.scheme."""
    if cfg.scheme == "duhamel":
        return run_duhamel(cfg, flux, u0, init_meta=init_meta)
    return run_fv(cfg, flux, u0, init_meta=init_meta)


# ----------------------------------------------------------------------
# Viscous Hamilton-Jacobi solver
# ----------------------------------------------------------------------

def hj_initial(u0: GridFunction) -> GridFunction:
    """Primitive of u0 sampled on the n+1 cell edges, as node data.

    The returned GridFunction stores node values; its cells are centered on
    the edges of the u-grid, so backward differences of v live exactly on
    the u cell centers.
    """
    dx = u0.dx
    v = np.concatenate([[0.0], np.cumsum(u0.values) * dx])
    return GridFunction(u0.x_lo - 0.5 * dx, u0.x_hi + 0.5 * dx, u0.n + 1, v,
                        time=u0.time)


def hj_gradient(v: GridFunction) -> GridFunction:
    """Backward-difference gradient of node data, on the matching cell grid."""
    dx = v.dx
    vals = np.diff(v.values) / dx
    g = GridFunction.__new__(GridFunction)
    g.x_lo, g.x_hi, g.n = v.x_lo + 0.5 * dx, v.x_hi - 0.5 * dx, v.n - 1
    g.values = vals
    g.time = v.time
    return g


def run_hj(cfg: SolverConfig, flux: FluxSpec, phi0: GridFunction,
           init_meta=None) -> Trajectory:
    """Monotone scheme for v_t + f(v_x) = eps v_xx with fixed boundary data.

    phi0 holds node values (see hj_initial).  The gradient is upwinded with
    the Engquist-Osher splitting: f_plus on the backward difference, f_minus
    on the forward difference; diffusion is backward Euler on interior nodes
    with v pinned to its initial boundary values.
    """
    nv = phi0.n            # number of nodes
    dx = phi0.dx
    eps = cfg.eps
    v = np.asarray(phi0.values, dtype=float).copy()
    v_lo, v_hi = float(v[0]), float(v[-1])
    vmin0, vmax0 = float(np.min(v)), float(np.max(v))

    events = list(cfg.snapshot_times)
    t = cfg.t_start
    floor = cfg.dt_floor()
    snaps = []
    nsteps = 0
    ab = np.zeros((3, nv - 2))
    ei = 0

    while ei < len(events):
        q = np.diff(v) / dx
        qc = np.maximum(q, 0.0)
        fpmax = float(np.max(np.abs(eval_flux_deriv(flux, qc))))
        dt = floor + cfg.dt_growth * t
        if fpmax > 0:
            dt = min(dt, cfg.cfl * dx / fpmax)
        dt = min(dt, events[ei] - t)

        fplus, fminus = eo_split(flux, qc)
        hamil = fplus[:-1]                   # backward difference, j = 1..nv-2
        if np.any(fminus):
            hamil = hamil + fminus[1:]       # forward difference part
        star = v[1:-1] - dt * hamil

        r = eps * dt / dx ** 2
        ab[0, :] = -r
        ab[1, :] = 1.0 + 2.0 * r
        ab[2, :] = -r
        star[0] += r * v_lo
        star[-1] += r * v_hi
        v = np.concatenate([[v_lo], solve_banded((1, 1), ab, star), [v_hi]])

        tol = MAXMIN_TOL * max(1.0, abs(vmax0))
        if np.isnan(v).any() or np.min(v) < vmin0 - tol or np.max(v) > vmax0 + tol:
            raise InstabilityError("HJ maximum principle violated",
                                   {"t": t, "dt": dt})
        t += dt
        nsteps += 1
        if abs(t - events[ei]) < 1e-13 * max(1.0, events[ei]):
            t = events[ei]
            g = GridFunction.__new__(GridFunction)
            g.x_lo, g.x_hi, g.n = phi0.x_lo, phi0.x_hi, nv
            g.values = v.copy()
            g.time = t
            snaps.append(g)
            ei += 1

    prov = {
        "scheme": "hj",
        "config": asdict(cfg),
        "flux": flux.label(),
        "flux_p": flux.max_exponent,
        "init": dict(init_meta or {}),
    }
    prov["init"].setdefault("sup", vmax0)
    return Trajectory(snapshots=snaps, provenance=prov,
                      diagnostics={"n_steps": nsteps})


# ----------------------------------------------------------------------
# Closed-form oracles
# ----------------------------------------------------------------------

def oracle_heat(M: float, eps: float, x, t: float):
    """Source solution of the heat equation: M * G_eps(x, t)."""
    if t <= 0:
        raise ValueError("oracle requires t > 0")
    x = np.asarray(x, dtype=float)
    out = M * (4.0 * np.pi * eps * t) ** -0.5 * np.exp(-x * x / (4.0 * eps * t))
    return out if out.ndim else float(out)


def oracle_burgers_viscous(M: float, eps: float, x, t: float):
    """Source solution of u_t + (u^2)_x = eps u_xx with u(., 0) = M delta_0.

    Derived by the Hopf-Cole transform of the integrated equation
    U_t + (U_x)^2 = eps U_xx with step data: psi = exp(-U/eps) solves the
    heat equation from psi0 = 1 - (1 - e^(-M/eps)) H(x), giving

        u = sqrt(eps/t) (1 - beta) exp(-xi^2) / (2 sqrt(pi) D(xi)),
        D = (1/2) erfc(xi) + beta E(xi),   E(xi) = 1 - (1/2) erfc(xi),

    with xi = x / (2 sqrt(eps t)) and beta = e^(-M/eps).  Evaluated in log
    space with erfcx so it is stable for M/eps up to ~1e6.
    """
    if t <= 0:
        raise ValueError("oracle requires t > 0")
    x = np.asarray(x, dtype=float)
    scalar = x.ndim == 0
    xi = np.atleast_1d(x / (2.0 * math.sqrt(eps * t)))
    R = M / eps

    # ln(D * e^{xi^2}) assembled from stable pieces
    ln_t1 = np.empty_like(xi)   # ln(0.5 erfc(xi) e^{xi^2})
    ln_e = np.empty_like(xi)    # ln E(xi)
    pos = xi >= 0
    ln_t1[pos] = np.log(0.5 * erfcx(xi[pos]))
    ln_e[pos] = np.log1p(-0.5 * erfc(xi[pos]))
    neg = ~pos
    if np.any(neg):
        xin = -xi[neg]
        ln_t1[neg] = np.log1p(-0.5 * erfcx(xin) * np.exp(-xin * xin)) + xi[neg] ** 2
        ln_e[neg] = np.log(0.5 * erfcx(xin)) - xin * xin
    ln_d = np.logaddexp(ln_t1, ln_e + xi * xi - R)

    one_minus_beta = -np.expm1(-R)
    u = (math.sqrt(eps / t) * one_minus_beta / (2.0 * math.sqrt(math.pi))
         * np.exp(-ln_d))
    return float(u[0]) if scalar else u


def oracle_burgers_inviscid(M: float, x, t: float):
    """Entropy (N-wave) source solution of u_t + (u^2)_x = 0.

    u = x/(2t) on 0 < x < s(t) with shock at s(t) = 2 sqrt(M t); the mass
    under the wedge is s^2/(4t) = M and the Rankine-Hugoniot speed
    s' = f(u_l)/u_l = u_l = s/(2t) both hold.
    """
    if t <= 0:
        raise ValueError("oracle requires t > 0")
    x = np.asarray(x, dtype=float)
    s = 2.0 * math.sqrt(M * t)
    out = np.where((x > 0) & (x < s), x / (2.0 * t), 0.0)
    return out if out.ndim else float(out)


def nwave_extent(M: float, p: float, t: float) -> float:
    """Rightmost shock position of the inviscid power-law N-wave.

    The self-similar profile u = (x/(p t))^(1/(p-1)) on (0, s) has mass M
    exactly when s = [M p/(p-1)]^((p-1)/p) (p t)^(1/p); p = 2 reduces to
    2 sqrt(M t).
    """
    return (M * p / (p - 1.0)) ** ((p - 1.0) / p) * (p * t) ** (1.0 / p)


def auto_domain(support: tuple[float, float], flux: FluxSpec, eps: float,
                t_end: float, M: float, h: float = 0.0,
                margin: float = 1.15) -> tuple[float, float]:
    """Domain that contains the data support, diffusion tails, and the
    convective spread through t_end with padding for the 1e-12 boundary rule."""
    lo, hi = support
    pad = 5.5 * math.sqrt(4.0 * eps * t_end)
    spread = 0.0
    p = flux.max_exponent
    if p is not None and not flux.is_zero:
        spread = margin * nwave_extent(M, p, t_end)
    elif flux.kind == "table":
        vmax = float(np.max(np.abs(flux.table_fp)))
        spread = margin * vmax * t_end
    return (lo - h - pad, hi + h + spread + pad)
