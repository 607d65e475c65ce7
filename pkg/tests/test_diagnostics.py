import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from wide_solver import (
    ConstraintSet,
    NotConvergedError,
    SolveOptions,
    SpaceTimeField,
    SpatialField,
    SpatialGrid,
    TimeGrid,
    Trajectory,
    WeightedFunctional,
    WindowError,
    apriori_checks,
    approx_energy_trace,
    avg_op,
    avg_op2,
    avg_tail_bound,
    check_energy_inequality,
    check_F_monotone,
    compare,
    convergence_slope,
    energy_trace,
    initial_energy,
    leapfrog,
    minimize,
    preset,
    uniformity,
)
from wide_solver.diagnostics import derivative_identity_residual, sliding_window_margin

from conftest import sine_data

TWO_PI = 2 * np.pi
samples = arrays(np.float64, st.integers(2, 60), elements=st.floats(0, 100))


def rescaled(ds, S=30.0):
    return ds * np.arange(int(round(S / ds)) + 1)


@pytest.mark.parametrize("ds", [0.2, 0.05, 0.01])
def test_average_of_one(ds):
    s = rescaled(ds)
    one = np.ones_like(s)
    tail = avg_tail_bound(one, ds)
    inside = s <= s[-1] - 10
    assert np.all(np.abs(avg_op(one, ds) - 1) <= ds + tail)
    tau = s[-1] - s
    assert np.all(np.abs(avg_op2(one, ds)[inside] - 1) <= ds + tail[inside] * (1 + tau[inside]))


def test_average_of_identity():
    ds = 0.05
    s = rescaled(ds)
    af = avg_op(s, ds)
    inside = s <= s[-1] - 15
    assert np.max(np.abs(af[inside] - (s[inside] + 1))) < 1e-4
    tail = avg_tail_bound(s, ds) * (1 + 1 / s[-1])
    assert np.all(np.abs(af - (s + 1)) <= tail + 1e-12)


def test_derivative_identity_second_order():
    res = []
    for ds in (0.1, 0.05, 0.025):
        s = rescaled(ds, 20.0)
        res.append(np.max(np.abs(derivative_identity_residual(2 + np.sin(s) + np.cos(3 * s), ds))))
    orders = np.log2(np.array(res[:-1]) / np.array(res[1:]))
    assert np.all(orders >= 1.8)


def test_average_rejects_negative():
    with pytest.raises(ValueError):
        avg_op(np.array([1.0, -1e-3, 2.0]), 0.1)
    with pytest.raises(ValueError):
        avg_op2(np.array([1.0, 2.0]), 0.1, route="direct")


@settings(max_examples=60, deadline=None)
@given(samples, st.floats(0.01, 1.0))
def test_average_positive(f, ds):
    assert np.all(avg_op(f, ds) >= 0)


@settings(max_examples=60, deadline=None)
@given(samples, st.floats(0.01, 1.0), st.data())
def test_average_monotone(f, ds, data):
    bump = data.draw(arrays(np.float64, len(f), elements=st.floats(0, 10)))
    assert np.all(avg_op(f + bump, ds) >= avg_op(f, ds))


@settings(max_examples=60, deadline=None)
@given(samples, st.floats(0.01, 1.0))
def test_average_squared_routes_agree(f, ds):
    a, b = avg_op2(f, ds), avg_op2(f, ds, route="kernel")
    assert np.allclose(a, b, rtol=1e-10, atol=1e-10 * (1e-300 + np.max(np.abs(a))))


def test_zero_data_energy():
    grid = SpatialGrid(TWO_PI, 32)
    zero = SpatialField(grid, np.zeros(32))
    p = preset("wave")
    tr = leapfrog(p.energy, p.dissipation, zero, zero, 0.01, 1.0)
    trace = energy_trace(tr, p.energy)
    assert np.all(trace.total == 0)
    assert check_energy_inequality(trace, 1.0).passed


def test_leapfrog_energy_inequality():
    grid = SpatialGrid(TWO_PI, 64)
    p = preset("sine-gordon")
    w0, w1 = SpatialField(grid, np.sin(grid.x)), SpatialField(grid, np.zeros(64))
    trace = energy_trace(leapfrog(p.energy, p.dissipation, w0, w1, 1e-3, 1.0), p.energy)
    res = check_energy_inequality(trace, 1.0, tolerance=0.01)
    assert res.passed
    assert res.detail["e0"] == pytest.approx(initial_energy(p.energy, w0, w1), rel=1e-12)


def test_minimizer_energy_inequality(wave_sweep):
    entry = wave_sweep[-1]
    assert entry.eps == 0.05
    trace = energy_trace(entry.minimizer, preset("wave").energy)
    res = check_energy_inequality(trace, 0.75, tolerance=0.05)
    assert res.passed and res.detail["max_ratio"] <= 1.05


def test_dissipation_accumulates(telegraph_sweep):
    p = preset("telegraph")
    for e in telegraph_sweep:
        trace = energy_trace(e.minimizer, p.energy, p.dissipation, 1)
        assert np.all(np.diff(trace.dissipation) >= 0)


def test_energy_check_is_pure(wave_sweep):
    trace = energy_trace(wave_sweep[0].minimizer, preset("wave").energy)
    assert check_energy_inequality(trace, 0.75) == check_energy_inequality(trace, 0.75)


def test_energy_check_empty_window(wave_sweep):
    trace = energy_trace(wave_sweep[0].minimizer, preset("wave").energy)
    with pytest.raises(WindowError):
        check_energy_inequality(trace, (2.0, 3.0))


def test_approximate_energy_monotone(grid64):
    p = preset("wave")
    F = WeightedFunctional(0.2, p.energy, p.dissipation, 0, TimeGrid(1.0, 400))
    w, stats = minimize(F, sine_data(grid64), opts=SolveOptions(tol=1e-10))
    trace = approx_energy_trace(w, F, stats.converged)
    res = check_F_monotone(trace, 0.75, tolerance=1e-3)
    assert res.passed
    assert np.isfinite(res.detail["C_fit"])
    assert check_F_monotone(trace, 0.75) == res
    assert trace.rows().shape == (401, 9)


def test_approximate_energy_rejects_unconverged(grid64):
    p = preset("wave")
    F = WeightedFunctional(0.2, p.energy, p.dissipation, 0, TimeGrid(1.0, 100))
    w, stats = minimize(F, sine_data(grid64), opts=SolveOptions(tol=1e-16, max_iter=1))
    assert not stats.converged
    with pytest.raises(NotConvergedError):
        approx_energy_trace(w, F, stats.converged)


def test_approximate_energy_zero_data(grid64):
    p = preset("nlw(4)")
    F = WeightedFunctional(0.2, p.energy, p.dissipation, 0, TimeGrid(1.0, 100))
    zero = SpatialField(grid64, np.zeros(64))
    w, _ = minimize(F, ConstraintSet(zero, zero))
    assert np.all(approx_energy_trace(w, F).F == 0)


def test_dissipative_approximate_energy_bound(telegraph_sweep):
    p = preset("telegraph")
    for e in telegraph_sweep[1:]:
        F = WeightedFunctional(e.eps, p.energy, p.dissipation, 1, e.minimizer.time)
        trace = approx_energy_trace(e.minimizer, F)
        mask = trace.s * e.eps <= 0.75 + 1e-12
        assert np.max((trace.F + trace.damping_integral)[mask]) <= 1.05 * trace.F[0]


def test_apriori_zero_data(grid64):
    p = preset("telegraph")
    F = WeightedFunctional(0.1, p.energy, p.dissipation, 1, TimeGrid(1.0, 100))
    zero = SpatialField(grid64, np.zeros(64))
    w, _ = minimize(F, ConstraintSet(zero, zero))
    rep = apriori_checks(w, F)
    for v in (rep.potential, rep.kinetic, rep.position, rep.dual, rep.dissipation, rep.sliding_window):
        assert v == 0


def test_apriori_report_contents(wave_sweep):
    p = preset("wave")
    e = wave_sweep[-1]
    F = WeightedFunctional(e.eps, p.energy, p.dissipation, 0, e.minimizer.time)
    rep = apriori_checks(e.minimizer, F, window=0.75)
    assert rep.dissipation is None and rep.dual is not None
    assert rep.potential > 0 and rep.kinetic > 0 and rep.position == pytest.approx(np.pi, rel=1e-3)
    assert rep.sliding_window >= 0
    with pytest.raises(WindowError):
        apriori_checks(e.minimizer, F, window=0.01)


def test_dual_bound_scope():
    grid = SpatialGrid(1.0, 31, "dirichlet")
    zero = SpatialField(grid, np.zeros(31))
    for name, g in (("kirchhoff", SpatialGrid(TWO_PI, 32)), ("wave", grid)):
        p = preset(name)
        F = WeightedFunctional(0.1, p.energy, p.dissipation, 0, TimeGrid(1.0, 100))
        z = SpatialField(g, np.zeros(g.nodes))
        w, _ = minimize(F, ConstraintSet(z, z))
        assert apriori_checks(w, F).dual is None


def test_sliding_window_consequence(wave_sweep):
    p = preset("wave")
    for e in wave_sweep[1:]:
        F = WeightedFunctional(e.eps, p.energy, p.dissipation, 0, e.minimizer.time)
        assert sliding_window_margin(approx_energy_trace(e.minimizer, F), 0.75) >= 0


def test_compare_identical_and_errors(wave_sweep):
    w = wave_sweep[0].minimizer
    c = compare(w, w, 0.75)
    assert c.spacetime == 0 and np.all(c.distance == 0) and c.relative == 0
    with pytest.raises(WindowError):
        compare(w, w, 2.0)
    other = SpaceTimeField(w.time, SpatialGrid(1.0, 64), w.values)
    with pytest.raises(WindowError):
        compare(w, other, 0.5)


def test_compare_resamples_finer_oracle():
    grid = SpatialGrid(TWO_PI, 32)
    coarse = TimeGrid(1.0, 10)
    fine = TimeGrid(1.0, 1000)

    def exact(time):
        t = time.times[:, None]
        return Trajectory(time, grid, np.cos(t) * np.sin(grid.x), -np.sin(t) * np.sin(grid.x))

    assert compare(exact(coarse), exact(fine), 1.0).spacetime < 1e-12


def test_convergence_slope():
    eps = np.array([0.4, 0.2, 0.1, 0.05])
    assert convergence_slope(eps, 3 * eps**1.5) == pytest.approx(1.5, rel=1e-12)
    assert convergence_slope([0.1], [1.0]) is None
    assert convergence_slope(eps, [1.0, 0.0, 1.0, 1.0]) is None


def test_uniformity():
    assert uniformity([1.0, 1.1, 0.95]).passed
    res = uniformity([1.0, 2.0])
    assert not res.passed and res.detail["spread"] == 0.5
    assert uniformity([None, None]).passed
