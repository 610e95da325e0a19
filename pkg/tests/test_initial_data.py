"""Measures, mollification, and grid functions."""

import numpy as np
import pytest
from scipy.integrate import quad

from viscid.errors import ConfigurationError
from viscid.initial_data import (BUMP_INTEGRAL, GridFunction, MeasureData,
                                 PiecewisePoly, dirac, mass, measure_from_config,
                                 mollifier_profile, mollify, parse_init_flag)

GRID = (-3.0, 3.0, 1200)


def test_dirac_examples():
    m = dirac(1.0, 0.0)
    assert m.atoms == ((0.0, 1.0),)
    assert m.mass == 1.0
    m = dirac(2.5, -1.0)
    assert m.atoms == ((-1.0, 2.5),)
    assert m.mass == 2.5
    two = MeasureData(atoms=((0.0, 1.0), (1.0, 1.0)))
    assert two.mass == 2.0


def test_dirac_rejects_nonpositive_mass():
    with pytest.raises(ValueError):
        dirac(0.0, 0.0)
    with pytest.raises(ValueError):
        dirac(-1.0, 0.0)


def test_bump_normalization_against_quadrature():
    val, err = quad(lambda x: np.exp(-1.0 / (1.0 - x * x)), -1, 1)
    assert BUMP_INTEGRAL == pytest.approx(val, abs=10 * err)
    for shape in ("bump", "cosine"):
        xs = np.linspace(-1.5, 1.5, 200001)
        w = np.trapezoid(mollifier_profile(xs, shape), xs)
        assert w == pytest.approx(1.0, abs=1e-8)
        assert np.all(mollifier_profile(np.array([-1.0, 1.0, 2.0]), shape) == 0.0)


def test_mollify_exact_mass():
    g = mollify(dirac(1.0, 0.0), 0.1, GRID)
    assert abs(g.mass - 1.0) <= 4 * np.finfo(float).eps
    g = mollify(dirac(3.0, 0.5), 0.05, GRID)
    assert g.mass == pytest.approx(3.0, abs=1e-14)


def test_mollify_mass_exact_along_h_halving():
    m = MeasureData(atoms=((0.0, 0.7), (0.8, 0.55)),
                    density=PiecewisePoly.constant(-0.5, 0.5, 0.3))
    M = m.mass
    for h in (0.4, 0.2, 0.1, 0.05, 0.025):
        g = mollify(m, h, GRID)
        assert abs(g.mass - M) <= 8 * np.finfo(float).eps * M


def test_mollified_peak_grows_like_inverse_h():
    peaks = []
    for h in (0.2, 0.1, 0.05):
        g = mollify(dirac(1.0, 0.0), h, GRID)
        peaks.append(np.max(g.values) * h)
        assert g.mass == pytest.approx(1.0, abs=1e-13)
    # peak * h approaches the profile maximum
    assert np.allclose(peaks, peaks[0], rtol=0.02)


def test_mollify_support_fattening():
    h = 0.1
    g = mollify(dirac(1.0, 0.0), h, GRID)
    outside = np.abs(g.x) > h + 2 * g.dx
    assert np.all(g.values[outside] == 0.0)


def test_mollified_indicator_close_to_density():
    m = MeasureData(density=PiecewisePoly.constant(0.0, 1.0, 1.0))
    h = 0.02
    g = mollify(m, h, (-1.0, 2.0, 6000))
    interior = (g.x > 3 * h) & (g.x < 1.0 - 3 * h)
    assert np.max(np.abs(g.values[interior] - 1.0)) < 1e-3
    away = (g.x < -3 * h) | (g.x > 1.0 + 3 * h)
    assert np.max(np.abs(g.values[away])) < 1e-3


def test_grid_too_small_for_support():
    with pytest.raises(ConfigurationError):
        mollify(dirac(1.0, 2.95), 0.1, GRID)


def test_weak_convergence_probe():
    # zeta is a clamped polynomial; the pairing converges as h -> 0
    m = MeasureData(atoms=((-0.4, 0.6), (0.3, 0.9)),
                    density=PiecewisePoly.constant(-0.2, 0.6, 0.5))

    def zeta(x):
        return np.where(np.abs(x) < 2.0, (1 - (x / 2.0) ** 2) ** 2, 0.0)

    exact = sum(w * zeta(np.array(x)) for x, w in m.atoms)
    exact += quad(lambda x: 0.5 * zeta(np.array(x)), -0.2, 0.6)[0]
    errs = []
    for h in (0.4, 0.2, 0.1, 0.05):
        g = mollify(m, h, (-4.0, 4.0, 16000))
        pairing = g.dx * np.sum(g.values * zeta(g.x))
        errs.append(abs(pairing - float(exact)))
    # symmetric mollifier: pairing error is O(h^2)
    assert errs[-1] < 5e-4
    assert errs[-1] < errs[0] / 30


def test_spike_mode_places_single_cell():
    g = mollify(dirac(1.0, 0.0), 0.1, GRID, spike=True)
    nz = np.nonzero(g.values)[0]
    assert nz.size == 1
    assert g.values[nz[0]] == pytest.approx(1.0 / g.dx)


def test_mollifier_shapes_differ_but_share_mass():
    gb = mollify(dirac(1.0, 0.0), 0.2, GRID, shape="bump")
    gc = mollify(dirac(1.0, 0.0), 0.2, GRID, shape="cosine")
    assert gb.mass == pytest.approx(gc.mass, abs=1e-13)
    assert np.max(np.abs(gb.values - gc.values)) > 0.05


def test_gridfunction_validation():
    with pytest.raises(ValueError):
        GridFunction(0.0, 1.0, 4, np.array([0.0, -1.0, 0.0, 0.0]))
    g = GridFunction(0.0, 1.0, 4, np.array([0.0, 1.0, 2.0, 0.0]))
    assert g.dx == 0.25
    assert mass(g) == pytest.approx(0.75)


def test_mass_examples():
    g = GridFunction(0.0, 1.0, 100, np.zeros(100))
    assert mass(g) == 0.0
    g = GridFunction(0.0, 1.0, 100, np.ones(100))
    assert mass(g) == pytest.approx(1.0, abs=1e-15)


def test_piecewise_poly():
    d = PiecewisePoly(pieces=((0.0, 1.0, (1.0, 2.0)),))  # 1 + 2(x-0)
    assert d(np.array([0.5]))[0] == pytest.approx(2.0)
    assert d.mass() == pytest.approx(2.0)
    lin = PiecewisePoly.from_samples([0.0, 1.0, 2.0], [0.0, 1.0, 0.0])
    assert lin.mass() == pytest.approx(1.0)
    assert lin(np.array([0.25]))[0] == pytest.approx(0.25)


def test_density_must_be_nonnegative():
    with pytest.raises(ValueError):
        MeasureData(density=PiecewisePoly(pieces=((0.0, 1.0, (-0.5,)),)))


def test_config_parsing():
    m = measure_from_config({"atoms": [[0.0, 1.0], [1.0, 0.5]]})
    assert m.mass == pytest.approx(1.5)
    m = parse_init_flag("dirac:1@0+0.5@1")
    assert m.mass == pytest.approx(1.5)
    assert m.atoms[0] == (0.0, 1.0)
    with pytest.raises(ValueError):
        parse_init_flag("step:1")
