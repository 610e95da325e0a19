"""Nonnegative measures, mollified approximations, and grid functions.

A measure is a finite list of atoms (x_i, M_i) plus an optional
piecewise-polynomial density with compact support.  ``mollify`` smooths it
with a compactly supported bump of width h and projects onto a uniform
cell-average grid, rescaling so the discrete mass equals the measure mass
exactly.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError

# integral of exp(-1/(1-y^2)) over (-1, 1); fixes the bump normalization.
# Validated against adaptive quadrature in the test suite.
BUMP_INTEGRAL = 0.44399381616807865

MOLLIFIER_SHAPES = ("bump", "cosine")

# Grid functions tolerate round-off undershoots this far below zero
# (relative to the sup norm); anything worse is a real sign violation.
NEGATIVITY_TOL = 1e-12


def mollifier_profile(y: np.ndarray, shape: str = "bump") -> np.ndarray:
    """Unit-mass mollifier on (-1, 1), evaluated at y."""
    y = np.asarray(y, dtype=float)
    out = np.zeros_like(y)
    inside = np.abs(y) < 1.0
    if shape == "bump":
        out[inside] = np.exp(-1.0 / (1.0 - y[inside] ** 2)) / BUMP_INTEGRAL
    elif shape == "cosine":
        out[inside] = 0.5 * (1.0 + np.cos(np.pi * y[inside]))
    else:
        raise ValueError(f"unknown mollifier shape {shape!r}")
    return out


@dataclass(frozen=True)
class PiecewisePoly:
    """Piecewise polynomial density; coefficients are in local (x - x_lo) powers.

    pieces: tuple of (x_lo, x_hi, coeffs) with coeffs = (c0, c1, ...) meaning
    c0 + c1*(x - x_lo) + c2*(x - x_lo)^2 + ...
    """

    pieces: tuple

    def __post_init__(self):
        for lo, hi, coeffs in self.pieces:
            if not lo < hi:
                raise ValueError("piece endpoints must satisfy x_lo < x_hi")
            if len(coeffs) == 0:
                raise ValueError("piece needs at least one coefficient")

    @property
    def support(self) -> tuple[float, float]:
        los = [p[0] for p in self.pieces]
        his = [p[1] for p in self.pieces]
        return (min(los), max(his))

    def __call__(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        out = np.zeros_like(x)
        for lo, hi, coeffs in self.pieces:
            m = (x >= lo) & (x < hi)
            if np.any(m):
                t = x[m] - lo
                acc = np.zeros_like(t)
                for c in reversed(coeffs):
                    acc = acc * t + c
                out[m] += acc
        return out

    def mass(self) -> float:
        total = 0.0
        for lo, hi, coeffs in self.pieces:
            w = hi - lo
            total += sum(c * w ** (k + 1) / (k + 1) for k, c in enumerate(coeffs))
        return total

    @classmethod
    def constant(cls, lo: float, hi: float, height: float) -> "PiecewisePoly":
        return cls(pieces=((lo, hi, (height,)),))

    @classmethod
    def from_samples(cls, x, values) -> "PiecewisePoly":
        """Piecewise-linear density through (x, values) samples."""
        x = np.asarray(x, float)
        v = np.asarray(values, float)
        if x.size < 2 or np.any(np.diff(x) <= 0):
            raise ValueError("density samples need a strictly increasing x-grid")
        pieces = []
        for i in range(x.size - 1):
            slope = (v[i + 1] - v[i]) / (x[i + 1] - x[i])
            pieces.append((float(x[i]), float(x[i + 1]), (float(v[i]), float(slope))))
        return cls(pieces=tuple(pieces))


@dataclass(frozen=True)
class MeasureData:
    """Finite nonnegative measure: atoms plus an optional density."""

    atoms: tuple = ()
    density: PiecewisePoly | None = None

    def __post_init__(self):
        atoms = tuple((float(x), float(m)) for x, m in self.atoms)
        for _, m in atoms:
            if m <= 0:
                raise ValueError("atom masses must be positive")
        object.__setattr__(self, "atoms", atoms)
        if not atoms and self.density is None:
            raise ValueError("measure must carry at least one atom or a density")
        if self.density is not None:
            lo, hi = self.density.support
            probe = np.linspace(lo, hi, 4097, endpoint=False)
            if np.min(self.density(probe)) < -1e-12:
                raise ValueError("density must be nonnegative")

    @property
    def mass(self) -> float:
        total = sum(m for _, m in self.atoms)
        if self.density is not None:
            total += self.density.mass()
        return total

    @property
    def support(self) -> tuple[float, float]:
        los, his = [], []
        for x, _ in self.atoms:
            los.append(x)
            his.append(x)
        if self.density is not None:
            lo, hi = self.density.support
            los.append(lo)
            his.append(hi)
        return (min(los), max(his))

    def label(self) -> str:
        parts = [f"atom({x:g},{m:g})" for x, m in self.atoms]
        if self.density is not None:
            lo, hi = self.density.support
            parts.append(f"density[{lo:g},{hi:g}]")
        return "+".join(parts)


def dirac(M: float, x0: float = 0.0) -> MeasureData:
    """Point mass M at x0."""
    if M <= 0:
        raise ValueError("Dirac mass must be positive")
    return MeasureData(atoms=((x0, M),))


@dataclass
class GridFunction:
    """Nonnegative cell averages on a uniform grid over [x_lo, x_hi]."""

    x_lo: float
    x_hi: float
    n: int
    values: np.ndarray
    time: float | None = None

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != (self.n,):
            raise ValueError(f"expected {self.n} cell values, got {self.values.shape}")
        if not self.x_hi > self.x_lo:
            raise ValueError("domain must satisfy x_hi > x_lo")
        scale = max(1.0, float(np.max(np.abs(self.values), initial=0.0)))
        if np.min(self.values, initial=0.0) < -NEGATIVITY_TOL * scale:
            raise ValueError("grid function has a negative value beyond round-off")

    @property
    def dx(self) -> float:
        return (self.x_hi - self.x_lo) / self.n

    @property
    def x(self) -> np.ndarray:
        return self.x_lo + (np.arange(self.n) + 0.5) * self.dx

    @property
    def mass(self) -> float:
        return float(self.dx * np.sum(self.values))

    def with_values(self, values, time=None) -> "GridFunction":
        return GridFunction(self.x_lo, self.x_hi, self.n, values,
                            self.time if time is None else time)


def mass(g: GridFunction) -> float:
    """Discrete mass dx * sum(values)."""
    return g.mass


def mollify(measure: MeasureData, h: float, grid: tuple[float, float, int],
            shape: str = "bump", spike: bool = False) -> GridFunction:
    """Project the mollified measure onto cell averages with exact mass.

    The result is (measure * rho_h) sampled on the grid and then rescaled so
    the discrete mass equals the measure mass.  With ``spike=True`` each atom
    is instead dumped into its nearest cell as M/dx (debug mode; no
    smoothing of atoms).
    """
    if h <= 0:
        raise ValueError("mollifier width must be positive")
    x_lo, x_hi, n = grid
    dx = (x_hi - x_lo) / n
    lo, hi = measure.support
    if lo - h < x_lo or hi + h > x_hi:
        raise ConfigurationError(
            f"grid [{x_lo:g}, {x_hi:g}] does not contain the h-fattened support "
            f"[{lo - h:g}, {hi + h:g}]")
    x = x_lo + (np.arange(n) + 0.5) * dx
    vals = np.zeros(n)

    for xa, ma in measure.atoms:
        if spike:
            j = int(np.clip(round((xa - x_lo) / dx - 0.5), 0, n - 1))
            vals[j] += ma / dx
        else:
            vals += ma * mollifier_profile((x - xa) / h, shape) / h

    if measure.density is not None:
        # cell averages of the density by 3-point Simpson, then discrete
        # convolution with the sampled mollifier
        edges = x_lo + np.arange(n + 1) * dx
        dens = (measure.density(edges[:-1]) + 4.0 * measure.density(x)
                + measure.density(edges[1:])) / 6.0
        if spike:
            vals += dens
        else:
            half = int(np.ceil(h / dx)) + 1
            offs = np.arange(-half, half + 1) * dx
            ker = mollifier_profile(offs / h, shape) / h
            ker = ker / (np.sum(ker) * dx)  # unit discrete mass
            vals += np.convolve(dens, ker * dx, mode="same")

    total = dx * np.sum(vals)
    if total <= 0:
        raise ConfigurationError("mollification produced an empty grid function")
    vals *= measure.mass / total
    return GridFunction(x_lo, x_hi, n, vals, time=0.0)


# ----------------------------------------------------------------------
# Configuration plumbing
# ----------------------------------------------------------------------

def measure_from_config(cfg: dict) -> MeasureData:
    """Build a MeasureData from the `init.*` keys of a run configuration."""
    atoms = tuple((float(x), float(m)) for x, m in cfg.get("atoms", []))
    density = None
    if "density" in cfg:
        spec = cfg["density"]
        if isinstance(spec, str):
            data = np.loadtxt(spec, delimiter=",", skiprows=1)
            density = PiecewisePoly.from_samples(data[:, 0], data[:, 1])
        else:
            density = PiecewisePoly(pieces=tuple(
                (float(lo), float(hi), tuple(float(c) for c in coeffs))
                for lo, hi, coeffs in spec))
    return MeasureData(atoms=atoms, density=density)


def parse_init_flag(text: str) -> MeasureData:
    """Parse a CLI init flag: 'dirac:M@x' or 'dirac:M@x+M2@x2' or 'csv:PATH'."""
    kind, _, rest = text.partition(":")
    if kind == "dirac":
        atoms = []
        for item in rest.split("+"):
            m, _, x = item.partition("@")
            atoms.append((float(x), float(m)))
        return MeasureData(atoms=tuple(atoms))
    if kind == "csv":
        return measure_from_config({"density": rest})
    raise ValueError(f"cannot parse init flag {text!r}")
