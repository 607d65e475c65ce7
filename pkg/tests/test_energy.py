import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from wide_solver import (
    CosinePotential,
    DerivPower,
    DissipationSpec,
    EnergySpec,
    InvalidTermError,
    KirchhoffQuartic,
    SobolevQuadratic,
    SpatialField,
    SpatialGrid,
    UnknownPresetError,
    eval_dissipation,
    eval_energy,
    grad_dissipation,
    grad_energy,
    preset,
    registry,
)
from wide_solver.energy import GRADCHECK_PRESETS

TWO_PI = 2 * np.pi


def sine(n=128, bc="periodic"):
    g = SpatialGrid(TWO_PI, n, bc)
    return SpatialField(g, np.sin(g.x))


def fd_error(value, grad, v, rng, directions=10, delta=1e-5):
    """Worst relative gap between the analytic and the central-difference directional derivative."""
    worst = 0.0
    g = grad(v)
    for _ in range(directions):
        eta = SpatialField(v.grid, rng.standard_normal(v.grid.nodes))
        fd = (value(v + delta * eta) - value(v - delta * eta)) / (2 * delta)
        an = v.grid.h * np.dot(g.values, eta.values)
        worst = max(worst, abs(fd - an) / max(abs(fd), abs(an), 1e-8))
    return worst


def test_wave_energy_of_sine():
    assert eval_energy(preset("wave").energy, sine()) == pytest.approx(np.pi / 2, abs=1e-3)


def test_cosine_potential_at_rest():
    v = SpatialField(SpatialGrid(TWO_PI, 32), np.zeros(32))
    assert eval_energy(EnergySpec((CosinePotential(1.0),)), v) == 0.0


def test_kirchhoff_of_sine():
    assert eval_energy(preset("kirchhoff").energy, sine()) == pytest.approx(np.pi**2 / 4, abs=1e-3)


@pytest.mark.parametrize("name", GRADCHECK_PRESETS)
def test_gradient_consistency(name):
    p = preset(name)
    g = SpatialGrid(TWO_PI, 24)
    rng = np.random.default_rng(11)
    for _ in range(5):
        v = SpatialField(g, rng.standard_normal(24))
        assert fd_error(lambda u: eval_energy(p.energy, u), lambda u: grad_energy(p.energy, u), v, rng) <= 1e-6
        if p.dissipation:
            err = fd_error(lambda u: eval_dissipation(p.dissipation, u),
                           lambda u: grad_dissipation(p.dissipation, u), v, rng)
            assert err <= 1e-6


@pytest.mark.parametrize("name", ["wave", "beam(4,4)", "kirchhoff", "strong-damping-on-top-of(nlw(4))"])
def test_gradient_consistency_dirichlet(name):
    p = preset(name)
    g = SpatialGrid(1.0, 20, "dirichlet")
    rng = np.random.default_rng(5)
    v = SpatialField(g, rng.standard_normal(20))
    assert fd_error(lambda u: eval_energy(p.energy, u), lambda u: grad_energy(p.energy, u), v, rng) <= 1e-6


def test_wave_gradient_is_negative_laplacian():
    errs = []
    for n in (64, 128):
        v = sine(n)
        errs.append(np.max(np.abs(grad_energy(preset("wave").energy, v).values - v.values)))
    h = TWO_PI / 64
    assert errs[0] <= h**2
    assert errs[0] / errs[1] == pytest.approx(4.0, rel=0.05)


def test_power_rule_on_constant():
    g = SpatialGrid(TWO_PI, 16)
    c = 1.3
    grad = grad_energy(EnergySpec((DerivPower(0, 4.0, 1.0),)), SpatialField(g, np.full(16, c)))
    assert np.max(np.abs(grad.values - c**3)) < 1e-12


def test_telegraph_dissipation():
    d = preset("telegraph").dissipation
    v = sine(64)
    assert eval_dissipation(d, v) == pytest.approx(np.pi / 2, abs=1e-10)
    assert np.array_equal(grad_dissipation(d, v).values, v.values)


def test_strong_damping_dissipation():
    d = preset("strong-damping").dissipation
    v = sine(128)
    assert eval_dissipation(d, v) == pytest.approx(np.pi / 2, abs=1e-3)
    assert np.max(np.abs(grad_dissipation(d, v).values - v.values)) < 1e-3


def test_empty_dissipation():
    d = DissipationSpec()
    v = sine(32)
    assert eval_dissipation(d, v) == 0.0
    assert np.all(grad_dissipation(d, v).values == 0.0)
    assert not d


def test_preset_contents():
    w = preset("wave")
    assert w.energy.terms == (DerivPower(1, 2.0, 1.0),) and not w.dissipation and w.kappa == 0
    kg = preset("klein-gordon")
    assert DerivPower(0, 2.0, 1.0) in kg.energy.terms and kg.kappa == 0
    t = preset("telegraph-on-top-of(nlw(4))")
    assert t.kappa == 1 and t.dissipation.terms == ((0, 1.0),)
    assert t.energy == preset("nlw(4)").energy
    assert preset("fractional-wave(0.5)").energy.quadratic
    assert not preset("fractional-wave(0.5,1,4)").energy.quadratic


@pytest.mark.parametrize("name", ["heat", "nlw(", "telegraph-on-top-of", "nlw(a)", "telegraph-on-top-of(foo)"])
def test_unknown_presets(name):
    with pytest.raises(UnknownPresetError):
        preset(name)


def test_registry_lists_families():
    names = [n for n, _ in registry()]
    for want in ("wave", "klein-gordon", "biharmonic", "nlw", "sine-gordon", "plaplace-wave", "beam",
                 "kirchhoff", "fractional-wave", "telegraph-on-top-of(X)", "strong-damping-on-top-of(X)",
                 "full-damping-on-top-of(X)"):
        assert want in names


def test_invalid_terms():
    g = SpatialGrid(1.0, 16, "dirichlet")
    v = SpatialField(g, np.zeros(16))
    with pytest.raises(InvalidTermError):
        eval_energy(EnergySpec((SobolevQuadratic(0.5),)), v)
    with pytest.raises(InvalidTermError):
        eval_energy(EnergySpec((DerivPower(1, 1.0),)), v)
    with pytest.raises(InvalidTermError):
        eval_energy(EnergySpec((DerivPower(1, 2.0, -1.0),)), v)
    with pytest.raises(InvalidTermError):
        DissipationSpec(((0, -1.0),))
    with pytest.raises(InvalidTermError):
        EnergySpec(("not a term",))


def test_subquadratic_gradient_at_kink():
    g = SpatialGrid(TWO_PI, 16)
    grad = grad_energy(EnergySpec((DerivPower(1, 1.5),)), SpatialField(g, np.zeros(16)))
    assert np.all(np.isfinite(grad.values)) and np.all(grad.values == 0)


def test_nonnegative_on_random_fields():
    g = SpatialGrid(TWO_PI, 24)
    rng = np.random.default_rng(2024)
    specs = [preset(n) for n in GRADCHECK_PRESETS]
    for _ in range(1000):
        v = SpatialField(g, rng.standard_normal(24) * rng.uniform(0.01, 10))
        for p in specs:
            assert eval_energy(p.energy, v) >= 0
            assert eval_dissipation(p.dissipation, v) >= 0


ALL_TERMS = (DerivPower(1), DerivPower(0, 3.0, 0.5), DerivPower(2, 4.0), SobolevQuadratic(0.75),
             CosinePotential(2.0), KirchhoffQuartic(0.5))


@settings(max_examples=40, deadline=None)
@given(arrays(np.float64, 20, elements=st.floats(-5, 5)))
def test_additive_stability(v):
    g = SpatialGrid(TWO_PI, 20)
    u = SpatialField(g, v)
    whole = EnergySpec(ALL_TERMS)
    parts = [EnergySpec((t,)) for t in ALL_TERMS]
    val, grad = 0.0, np.zeros(20)
    for p in parts:
        val += eval_energy(p, u)
        grad = grad + grad_energy(p, u).values
    assert eval_energy(whole, u) == val
    assert np.array_equal(grad_energy(whole, u).values, grad)
    joined = EnergySpec(ALL_TERMS[:3]) + EnergySpec(ALL_TERMS[3:])
    assert eval_energy(joined, u) == eval_energy(whole, u)


@settings(max_examples=40, deadline=None)
@given(arrays(np.float64, 20, elements=st.floats(-5, 5)), st.floats(-20, 20))
def test_dissipation_homogeneous_degree_two(v, a):
    g = SpatialGrid(TWO_PI, 20)
    d = preset("full-damping").dissipation
    u = SpatialField(g, v)
    assert eval_dissipation(d, a * u) == pytest.approx(a * a * eval_dissipation(d, u), rel=1e-12, abs=1e-300)
