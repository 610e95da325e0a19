"""Flux functions f(u) and numerical certification of their weak convexity.

Supported flux kinds:

* ``power``   -- f(r) = r**p with p > 1,
* ``polysum`` -- f(r) = sum_k mu_k r**p_k with mu_k > 0, p_k > 1,
* ``table``   -- a C^1 flux given by samples of f and f' on [0, r_max],
  evaluated by monotone cubic interpolation.

For power/polysum fluxes the smoothing family

    Phi_eta(r)   = (r + eta^2)**(p/2) - eta**p          (termwise for sums)
    Theta_eta(r) = 2 r Phi_eta'(r) - Phi_eta(r)

is available, and ``certify_p_condition`` checks the lower bound

    Theta_eta(r) >= a r**(p/2) - b eta**gamma

on a log-spaced (r, eta) grid, optionally searching for admissible
(b, gamma) slack itself.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy.interpolate import PchipInterpolator
from scipy.stats import linregress

from .errors import UnsupportedFluxError

POWER = "power"
POLYSUM = "polysum"
TABLE = "table"

# Relative tolerance for the grid certification margin.
PCOND_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class FluxSpec:
    """Immutable description of a flux f with f(0) = f'(0) = 0."""

    kind: str
    p: float | None = None
    terms: tuple[tuple[float, float], ...] = ()
    table_r: np.ndarray | None = None
    table_f: np.ndarray | None = None
    table_fp: np.ndarray | None = None
    holder_hint: float | None = None  # diagnostic only, never used numerically

    def __post_init__(self):
        if self.kind == POWER:
            if self.p is None or not self.p > 1.0:
                raise ValueError(f"power-law exponent must satisfy p > 1, got {self.p}")
        elif self.kind == POLYSUM:
            cleaned = tuple((float(mu), float(pk)) for mu, pk in self.terms if mu != 0.0)
            for mu, pk in cleaned:
                if mu < 0:
                    raise ValueError(f"polysum coefficients must be positive, got {mu}")
                if not pk > 1.0:
                    raise ValueError(f"polysum exponents must exceed 1, got {pk}")
            object.__setattr__(self, "terms", cleaned)
        elif self.kind == TABLE:
            r = np.asarray(self.table_r, dtype=float)
            f = np.asarray(self.table_f, dtype=float)
            if r.ndim != 1 or r.size < 4 or f.shape != r.shape:
                raise ValueError("tabulated flux needs >= 4 matching (r, f) samples")
            if not (np.all(np.isfinite(r)) and np.all(np.isfinite(f))):
                raise ValueError("tabulated flux samples must be finite")
            if not (np.all(np.diff(r) > 0) and r[0] == 0.0):
                raise ValueError("tabulated r-grid must be strictly increasing from 0")
            if abs(f[0]) > 1e-12 * max(1.0, np.max(np.abs(f))):
                raise ValueError("tabulated flux must satisfy f(0) = 0")
            f = f.copy()
            f[0] = 0.0
            if self.table_fp is None:
                fp = PchipInterpolator(r, f).derivative()(r)
            else:
                fp = np.asarray(self.table_fp, dtype=float).copy()
                if fp.shape != r.shape or not np.all(np.isfinite(fp)):
                    raise ValueError("tabulated f' samples must match the r-grid")
            if abs(fp[0]) > 1e-9 * max(1.0, np.max(np.abs(fp))):
                raise ValueError("tabulated flux must satisfy f'(0) = 0")
            fp[0] = 0.0
            object.__setattr__(self, "table_r", r)
            object.__setattr__(self, "table_f", f)
            object.__setattr__(self, "table_fp", fp)
        else:
            raise ValueError(f"unknown flux kind {self.kind!r}")

    # -- constructors -------------------------------------------------

    @classmethod
    def power(cls, p: float) -> "FluxSpec":
        return cls(kind=POWER, p=float(p))

    @classmethod
    def polysum(cls, terms) -> "FluxSpec":
        return cls(kind=POLYSUM, terms=tuple((float(m), float(q)) for m, q in terms))

    @classmethod
    def zero(cls) -> "FluxSpec":
        """The trivial flux f = 0 (pure heat equation)."""
        return cls(kind=POLYSUM, terms=())

    @classmethod
    def tabulated(cls, r, f, fp=None, holder_hint=None) -> "FluxSpec":
        return cls(kind=TABLE, table_r=np.asarray(r, float),
                   table_f=np.asarray(f, float),
                   table_fp=None if fp is None else np.asarray(fp, float),
                   holder_hint=holder_hint)

    # -- helpers ------------------------------------------------------

    @property
    def is_zero(self) -> bool:
        return self.kind == POLYSUM and not self.terms

    @property
    def max_exponent(self) -> float | None:
        """Largest power-law exponent; the p of the p-condition for polysum."""
        if self.kind == POWER:
            return self.p
        if self.kind == POLYSUM:
            return max((pk for _, pk in self.terms), default=None)
        return None

    @property
    def min_exponent(self) -> float | None:
        if self.kind == POWER:
            return self.p
        if self.kind == POLYSUM:
            return min((pk for _, pk in self.terms), default=None)
        return None

    @property
    def ratio_is_c1(self) -> bool:
        """Whether f(xi)/xi extends to a C^1 function (needs exponents >= 2)."""
        me = self.min_exponent
        return me is not None and me >= 2.0

    @cached_property
    def _interp_f(self):
        return PchipInterpolator(self.table_r, self.table_f)

    @cached_property
    def _interp_fp(self):
        return PchipInterpolator(self.table_r, self.table_fp)

    @cached_property
    def _interp_fplus(self):
        """Antiderivative of max(f', 0); Engquist-Osher positive part."""
        up = np.maximum(self.table_fp, 0.0)
        vals = np.concatenate([[0.0], np.cumsum(0.5 * (up[1:] + up[:-1]) * np.diff(self.table_r))])
        return PchipInterpolator(self.table_r, vals)

    @cached_property
    def _interp_fminus(self):
        dn = np.minimum(self.table_fp, 0.0)
        vals = np.concatenate([[0.0], np.cumsum(0.5 * (dn[1:] + dn[:-1]) * np.diff(self.table_r))])
        return PchipInterpolator(self.table_r, vals)

    def label(self) -> str:
        if self.kind == POWER:
            return f"power:{self.p:g}"
        if self.kind == POLYSUM:
            if self.is_zero:
                return "zero"
            return "polysum:" + ",".join(f"{m:g}x{q:g}" for m, q in self.terms)
        return f"table[{self.table_r.size} pts, r_max={self.table_r[-1]:g}]"


def _check_domain(flux: FluxSpec, r: np.ndarray):
    if np.any(r < 0):
        raise ValueError("flux arguments must be nonnegative")
    if flux.kind == TABLE and np.any(r > flux.table_r[-1]):
        raise ValueError(
            f"tabulated flux evaluated beyond r_max={flux.table_r[-1]:g} (extrapolation)")


def eval_flux(flux: FluxSpec, r):
    """Evaluate f(r) for r >= 0."""
    arr = np.asarray(r, dtype=float)
    _check_domain(flux, arr)
    if flux.kind == POWER:
        out = arr ** flux.p
    elif flux.kind == POLYSUM:
        out = np.zeros_like(arr)
        for mu, pk in flux.terms:
            out += mu * arr ** pk
    else:
        out = flux._interp_f(arr)
    return out if isinstance(r, np.ndarray) else float(out)


def eval_flux_deriv(flux: FluxSpec, r):
    """Evaluate f'(r) for r >= 0; f'(0) = 0 by normalization."""
    arr = np.asarray(r, dtype=float)
    _check_domain(flux, arr)
    if flux.kind == POWER:
        with np.errstate(divide="ignore", invalid="ignore"):
            out = np.where(arr > 0, flux.p * arr ** (flux.p - 1.0), 0.0)
    elif flux.kind == POLYSUM:
        out = np.zeros_like(arr)
        with np.errstate(divide="ignore", invalid="ignore"):
            for mu, pk in flux.terms:
                out += np.where(arr > 0, mu * pk * arr ** (pk - 1.0), 0.0)
    else:
        out = flux._interp_fp(arr)
    return out if isinstance(r, np.ndarray) else float(out)


def eo_split(flux: FluxSpec, r):
    """Engquist-Osher splitting (f_plus, f_minus) with f = f_plus + f_minus.

    f_plus' = max(f', 0) and f_minus' = min(f', 0).  Power-law and polysum
    fluxes are nondecreasing on r >= 0, so f_plus = f and f_minus = 0 there.
    """
    arr = np.asarray(r, dtype=float)
    _check_domain(flux, arr)
    if flux.kind in (POWER, POLYSUM):
        return eval_flux(flux, arr), np.zeros_like(arr)
    return flux._interp_fplus(arr), flux._interp_fminus(arr)


# ----------------------------------------------------------------------
# Smoothing family and the p-condition
# ----------------------------------------------------------------------

def _phi_terms(flux: FluxSpec):
    if flux.kind == POWER:
        return ((1.0, flux.p),)
    if flux.kind == POLYSUM:
        return flux.terms
    raise UnsupportedFluxError(
        "the smoothing family Phi_eta is only defined for power/polysum fluxes")


def phi_eta(flux: FluxSpec, r, eta: float):
    """Phi_eta(r) = sum_k mu_k [(r + eta^2)^(p_k/2) - eta^p_k]; Phi_eta(0) = 0."""
    if eta <= 0:
        raise ValueError("eta must be positive")
    arr = np.asarray(r, dtype=float)
    if np.any(arr < 0):
        raise ValueError("phi_eta arguments must be nonnegative")
    out = np.zeros_like(arr)
    eta_sq = eta * eta
    # eta^p written as (eta^2)^(p/2) so Phi_eta(0) cancels exactly
    for mu, pk in _phi_terms(flux):
        out += mu * ((arr + eta_sq) ** (0.5 * pk) - eta_sq ** (0.5 * pk))
    return out if isinstance(r, np.ndarray) else float(out)


def phi_eta_deriv(flux: FluxSpec, r, eta: float):
    if eta <= 0:
        raise ValueError("eta must be positive")
    arr = np.asarray(r, dtype=float)
    if np.any(arr < 0):
        raise ValueError("phi_eta arguments must be nonnegative")
    out = np.zeros_like(arr)
    for mu, pk in _phi_terms(flux):
        out += mu * 0.5 * pk * (arr + eta * eta) ** (0.5 * pk - 1.0)
    return out if isinstance(r, np.ndarray) else float(out)


def theta_eta(flux: FluxSpec, r, eta: float):
    """Theta_eta(r) = 2 r Phi_eta'(r) - Phi_eta(r)."""
    arr = np.asarray(r, dtype=float)
    out = 2.0 * arr * phi_eta_deriv(flux, arr, eta) - phi_eta(flux, arr, eta)
    return out if isinstance(r, np.ndarray) else float(out)


@dataclass(frozen=True)
class PCondParams:
    """Parameters of the p-condition lower bound a r^(p/2) - b eta^gamma."""

    p: float
    a: float
    b: float
    gamma: float
    eta_range: tuple[float, float] = (1e-4, 1e-1)
    r_range: tuple[float, float] = (1e-6, 1e3)

    def __post_init__(self):
        if not self.p > 1.0:
            raise ValueError("p-condition requires p > 1")
        if not self.a > 0:
            raise ValueError("coefficient a must be positive")
        if self.b < 0:
            raise ValueError("slack coefficient b must be nonnegative")
        if not self.gamma > 0:
            raise ValueError("slack exponent gamma must be positive")
        for lo, hi in (self.eta_range, self.r_range):
            if not (0 < lo < hi):
                raise ValueError("ranges must satisfy 0 < lo < hi")


@dataclass
class PCondReport:
    """Outcome of a grid certification of the p-condition."""

    params: PCondParams
    passed: bool
    margin: float                 # min of (Theta - a r^(p/2) + b eta^gamma) / scale
    worst_r: float
    worst_eta: float
    best_a_zero_slack: float      # largest a with b = 0 at the smallest tested eta
    slack_by_eta: list            # rows (eta, max over r of [a r^(p/2) - Theta]_+)
    n_r: int
    n_eta: int
    note: str = ""


def _grids(params: PCondParams, n_r: int, n_eta: int):
    r = np.geomspace(params.r_range[0], params.r_range[1], n_r)
    eta = np.geomspace(params.eta_range[0], params.eta_range[1], n_eta)
    return r, eta


def verify_p_condition(flux: FluxSpec, params: PCondParams,
                       n_r: int = 192, n_eta: int = 48) -> PCondReport:
    """Check Theta_eta(r) >= a r^(p/2) - b eta^gamma on a log-spaced grid.

    Passes iff the relative margin is >= -PCOND_TOL at every tested point.
    Also reports the largest a admitting zero slack at the smallest eta.
    """
    r, etas = _grids(params, n_r, n_eta)
    rp = r ** (0.5 * params.p)
    margin = np.inf
    worst = (r[0], etas[0])
    slack_rows = []
    for eta in etas:
        th = theta_eta(flux, r, eta)
        gap = th - params.a * rp + params.b * eta ** params.gamma
        scale = np.maximum(1.0, params.a * rp)
        rel = gap / scale
        i = int(np.argmin(rel))
        if rel[i] < margin:
            margin = float(rel[i])
            worst = (float(r[i]), float(eta))
        slack_rows.append((float(eta), float(np.max(np.maximum(params.a * rp - th, 0.0)))))
    th_min = theta_eta(flux, r, etas[0])
    best_a = float(np.min(th_min / rp))
    return PCondReport(
        params=params,
        passed=bool(margin >= -PCOND_TOL),
        margin=margin,
        worst_r=worst[0],
        worst_eta=worst[1],
        best_a_zero_slack=best_a,
        slack_by_eta=slack_rows,
        n_r=n_r,
        n_eta=n_eta,
    )


def certify_p_condition(flux: FluxSpec, a: float | None = None, p: float | None = None,
                        b: float | None = None, gamma: float | None = None,
                        r_range=(1e-6, 1e3), eta_range=(1e-4, 1e-1),
                        n_r: int = 192, n_eta: int = 48) -> PCondReport:
    """Certify the p-condition, searching for (b, gamma) slack when not given.

    Defaults: p from the flux, a = (p - 1)/2.  The slack search measures the
    deficit D(eta) = max_r [a r^(p/2) - Theta_eta(r)]_+ on the grid, requires
    it to vanish as eta -> 0 (otherwise the certification fails), fits gamma
    from the decay of D, and sets b just above max D(eta)/eta^gamma.
    """
    if p is None:
        p = flux.max_exponent
        if p is None:
            raise UnsupportedFluxError("cannot infer p for a tabulated flux")
    if a is None:
        a = 0.5 * (p - 1.0)

    if b is not None and gamma is not None:
        return verify_p_condition(
            flux, PCondParams(p=p, a=a, b=b, gamma=gamma,
                              eta_range=tuple(eta_range), r_range=tuple(r_range)),
            n_r=n_r, n_eta=n_eta)

    r, etas = _grids(PCondParams(p=p, a=a, b=0.0, gamma=1.0,
                                 eta_range=tuple(eta_range),
                                 r_range=tuple(r_range)), n_r, n_eta)
    rp = r ** (0.5 * p)
    deficit = np.array([np.max(np.maximum(a * rp - theta_eta(flux, r, eta), 0.0))
                        for eta in etas])

    if np.all(deficit <= PCOND_TOL * np.maximum(1.0, a * rp.max())):
        b_found, gamma_found = 0.0, (1.0 if gamma is None else gamma)
        note = "no slack needed on the tested grid"
    else:
        pos = deficit > 0
        # the slack must vanish with eta; a flat deficit means a is too large
        if deficit[0] > 0.5 * deficit[-1]:
            params = PCondParams(p=p, a=a, b=0.0, gamma=1.0,
                                 eta_range=tuple(eta_range), r_range=tuple(r_range))
            rep = verify_p_condition(flux, params, n_r=n_r, n_eta=n_eta)
            rep.passed = False
            rep.note = ("deficit does not vanish as eta -> 0; "
                        "no admissible (b, gamma) slack exists for this a")
            return rep
        if gamma is None:
            if np.count_nonzero(pos) >= 3:
                fit = linregress(np.log(etas[pos]), np.log(deficit[pos]))
                gamma_found = max(0.9 * fit.slope, 0.05)
            else:
                gamma_found = 1.0
        else:
            gamma_found = gamma
        b_found = 1.05 * float(np.max(deficit[pos] / etas[pos] ** gamma_found))
        note = f"slack fitted from grid deficit (gamma from decay of D(eta))"

    params = PCondParams(p=p, a=a, b=b_found, gamma=gamma_found,
                         eta_range=tuple(eta_range), r_range=tuple(r_range))
    rep = verify_p_condition(flux, params, n_r=n_r, n_eta=n_eta)
    rep.note = note
    return rep


@dataclass
class GrowthReport:
    p: float
    r_max: float
    c_hat: float     # max over samples of |f'(r)| / (1 + r^(p-1))
    passed: bool
    worst_r: float


def verify_growth(flux: FluxSpec, p: float, r_max: float, n: int = 4096) -> GrowthReport:
    """Estimate the constant in |f'(r)| <= C (1 + r^(p-1)) on (0, r_max]."""
    if r_max <= 0:
        raise ValueError("r_max must be positive")
    r = np.geomspace(r_max * 1e-9, r_max, n)
    ratio = np.abs(eval_flux_deriv(flux, r)) / (1.0 + r ** (p - 1.0))
    i = int(np.argmax(ratio))
    c = float(ratio[i])
    return GrowthReport(p=p, r_max=r_max, c_hat=c,
                        passed=bool(np.isfinite(c)), worst_r=float(r[i]))


# ----------------------------------------------------------------------
# Configuration plumbing
# ----------------------------------------------------------------------

def flux_from_config(cfg: dict) -> FluxSpec:
    """Build a FluxSpec from the `flux.*` keys of a run configuration."""
    kind = cfg.get("kind", "power")
    if kind == "power":
        return FluxSpec.power(cfg["p"])
    if kind == "polysum":
        return FluxSpec.polysum(cfg.get("terms", []))
    if kind == "table":
        data = np.loadtxt(cfg["table"], delimiter=",", skiprows=1)
        return FluxSpec.tabulated(data[:, 0], data[:, 1],
                                  holder_hint=cfg.get("holder_hint"))
    raise ValueError(f"unknown flux kind {kind!r}")


def parse_flux_flag(text: str) -> FluxSpec:
    """Parse a CLI flux flag: 'power:2', 'polysum:1x1.5,2x3', 'table:PATH', 'zero'."""
    if text == "zero":
        return FluxSpec.zero()
    kind, _, rest = text.partition(":")
    if kind == "power":
        return FluxSpec.power(float(rest))
    if kind == "polysum":
        terms = []
        for item in rest.split(","):
            mu, _, pk = item.partition("x")
            terms.append((float(mu), float(pk)))
        return FluxSpec.polysum(terms)
    if kind == "table":
        return flux_from_config({"kind": "table", "table": rest})
    raise ValueError(f"cannot parse flux flag {text!r}")
