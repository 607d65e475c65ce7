"""Energy traces, the exponential averaging operator and estimate checks.

Everything here is a pure function of trajectories or minimizers.  Checks
return a :class:`CheckResult` whose ``margin`` is positive when the check
passes with room to spare.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .errors import NotConvergedError, WindowError
from .functional import SpaceTimeField, WeightedFunctional
from .energy import SobolevQuadratic
from .grid import SpatialField, neg_sobolev_norm
from .reference import Trajectory


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    margin: float
    detail: dict = field(default_factory=dict)

    def as_dict(self):
        return {"name": self.name, "passed": bool(self.passed), "margin": float(self.margin), **self.detail}


# -- averaging operator -------------------------------------------------------


def _avg_coefficients(ds):
    r = np.exp(-ds)
    e1 = -np.expm1(-ds)
    e2 = e1 - ds * r
    beta = e2 / ds
    alpha = e1 - beta
    gamma = beta + alpha * r
    return alpha, beta, gamma, r


def _check_samples(f):
    f = np.asarray(f, dtype=float)
    if not np.all(np.isfinite(f)):
        raise ValueError("samples must be finite")
    if np.any(f < 0):
        raise ValueError("the averaging operator expects nonnegative samples")
    return f


def avg_op(f, ds):
    """``Af(s) = int_s^inf exp(-(t - s)) f(t) dt`` for samples on a uniform grid.

    ``f`` is integrated exactly as a piecewise-linear function and is taken to
    vanish beyond the last sample (see :func:`avg_tail_bound`).  Works along
    axis 0.
    """
    f = _check_samples(f)
    alpha, beta, _, r = _avg_coefficients(ds)
    out = np.empty_like(f)
    out[-1] = alpha * f[-1]
    for j in range(len(f) - 2, -1, -1):
        out[j] = alpha * f[j] + beta * f[j + 1] + r * out[j + 1]
    return out


def avg_kernel2(m, ds):
    """Discrete kernel of ``A^2`` at lags ``m`` (continuum: ``t exp(-t)``)."""
    alpha, _, gamma, r = _avg_coefficients(ds)
    m = np.asarray(m)
    mm = np.maximum(m, 2)
    k = 2 * alpha * gamma * r ** (mm - 1) + (mm - 1) * gamma**2 * r ** (mm - 2)
    return np.where(m == 0, alpha**2, np.where(m == 1, 2 * alpha * gamma, k))


def avg_op2(f, ds, route="iterate"):
    """``A(Af)``, either by applying :func:`avg_op` twice or through the kernel."""
    if route == "iterate":
        return avg_op(avg_op(f, ds), ds)
    if route != "kernel":
        raise ValueError("route must be 'iterate' or 'kernel'")
    f = _check_samples(f)
    n = len(f)
    row = avg_kernel2(np.arange(n), ds)
    K = scipy.linalg.toeplitz(np.r_[row[0], np.zeros(n - 1)], row)
    return K @ f


def avg_tail_bound(f, ds):
    """Bound ``exp(-(S - s_j)) max f`` on what truncation at ``S`` drops."""
    f = _check_samples(f)
    s = ds * np.arange(len(f))
    return np.exp(-(s[-1] - s)) * (np.max(f) if len(f) else 0.0)


def derivative_identity_residual(f, ds):
    """Central-difference residual of ``(Af)' = Af - f`` on interior samples."""
    af = avg_op(f, ds)
    return (af[2:] - af[:-2]) / (2 * ds) - (af[1:-1] - np.asarray(f)[1:-1])


# -- physical energy ----------------------------------------------------------


@dataclass(frozen=True, eq=False)
class EnergyTrace:
    times: np.ndarray
    kinetic: np.ndarray
    potential: np.ndarray
    dissipation: np.ndarray
    total: np.ndarray
    kappa: int = 0

    def rows(self):
        return np.column_stack([self.times, self.kinetic, self.potential, self.dissipation, self.total])


def _cumtrapz(y, dx):
    out = np.zeros_like(y)
    out[1:] = np.cumsum(0.5 * dx * (y[1:] + y[:-1]))
    return out


def energy_trace(traj, energy, dissipation=None, kappa=0) -> EnergyTrace:
    """``E = 1/2 |w'|^2 + G(w)`` and the cumulative ``2 int D(w')``."""
    if isinstance(traj, SpaceTimeField):
        traj = Trajectory.from_field(traj)
    grid = traj.grid
    kin = 0.5 * grid.h * np.sum(traj.velocities**2, axis=1)
    pot = np.asarray(energy.value(grid, traj.values), dtype=float)
    if kappa and dissipation:
        rate = np.asarray(dissipation.value(grid, traj.velocities), dtype=float)
        diss = 2.0 * _cumtrapz(rate, traj.time.dt)
    else:
        diss = np.zeros_like(kin)
    return EnergyTrace(traj.times, kin, pot, diss, kin + pot, int(bool(kappa)))


def initial_energy(energy, w0, w1):
    return 0.5 * w1.grid.h * float(np.sum(w1.values**2)) + float(energy.value(w0.grid, w0.values))


def _window_mask(times, window):
    lo, hi = (0.0, window) if np.isscalar(window) else window
    mask = (times >= lo - 1e-12) & (times <= hi + 1e-12)
    if not np.any(mask):
        raise WindowError(f"reporting window {window} contains no samples")
    return mask


def check_energy_inequality(trace: EnergyTrace, window, tolerance=0.05, e0=None) -> CheckResult:
    """Pass iff ``E(t) + 2 kappa int D <= E(0) (1 + tolerance)`` on the window."""
    mask = _window_mask(trace.times, window)
    e0 = float(trace.total[0]) if e0 is None else float(e0)
    lhs = trace.total[mask] + trace.dissipation[mask]
    bound = e0 * (1 + tolerance)
    margin = float(np.min(bound - lhs))
    ratio = float(np.max(lhs) / e0) if e0 > 0 else 0.0
    return CheckResult("energy_inequality", margin >= 0, margin, {"max_ratio": ratio, "e0": e0, "tolerance": tolerance})


# -- approximate energy -------------------------------------------------------


@dataclass(frozen=True, eq=False)
class ApproxEnergyTrace:
    s: np.ndarray
    kinetic: np.ndarray
    averaged_potential: np.ndarray
    F: np.ndarray
    inertia: np.ndarray
    potential: np.ndarray
    damping: np.ndarray
    lagrangian: np.ndarray
    damping_integral: np.ndarray
    eps: float
    tail: np.ndarray

    def rows(self):
        return np.column_stack([
            self.s, self.kinetic, self.averaged_potential, self.F, self.inertia,
            self.potential, self.damping, self.lagrangian, self.damping_integral,
        ])


def approx_energy_trace(w: SpaceTimeField, F: WeightedFunctional, converged=True) -> ApproxEnergyTrace:
    """``K + A^2 W`` on the rescaled grid ``s = t / eps`` plus the auxiliary columns."""
    if not converged:
        raise NotConvergedError("the approximate energy is only meaningful at a converged minimizer")
    grid = w.space
    eps = F.eps
    ds = F.time.dt / eps
    s = F.time.times / eps
    v = w.velocities()
    _, _, a = w.kinematics()
    acc = np.concatenate([a[:1], a, a[-1:]])
    kin = 0.5 * grid.h * np.sum(v * v, axis=1)
    pot = np.asarray(F.energy.value(grid, w.values), dtype=float)
    avg = avg_op2(pot, ds)
    inertia = 0.5 * eps**2 * grid.h * np.sum(acc * acc, axis=1)
    if F.kappa:
        h_eps = eps**2 * np.asarray(F.dissipation.value(grid, v), dtype=float)
    else:
        h_eps = np.zeros_like(kin)
    lag = inertia + pot + (F.kappa / eps) * h_eps
    damp = (2 * F.kappa / eps) * _cumtrapz(h_eps, ds)
    tail = avg_tail_bound(pot, ds) * (1 + s[-1] - s)
    return ApproxEnergyTrace(s, kin, avg, kin + avg, inertia, pot, h_eps, lag, damp, eps, tail)


def check_F_monotone(trace: ApproxEnergyTrace, window, tolerance=1e-3, e0=None) -> CheckResult:
    """Monotone decrease of ``F`` on the window (physical time) and the bound constant.

    The bound ``F + (2 kappa / eps) int H <= E(0) + C sqrt(eps)`` is realized
    with the smallest nonnegative ``C``, reported as ``C_fit``.
    """
    mask = _window_mask(trace.s * trace.eps, window)
    f = trace.F[mask]
    scale = 1.0 + abs(trace.F[0])
    jumps = np.diff(f)
    margin = float(tolerance * scale - np.max(jumps)) if len(jumps) else float(tolerance * scale)
    e0 = float(trace.F[0]) if e0 is None else float(e0)
    excess = float(np.max(f + trace.damping_integral[mask] - e0))
    c_fit = max(excess, 0.0) / np.sqrt(trace.eps)
    return CheckResult(
        "F_monotone", margin >= 0, margin,
        {"max_increase": float(np.max(jumps)) if len(jumps) else 0.0, "C_fit": c_fit, "e0": e0, "tolerance": tolerance},
    )


# -- a priori estimates -------------------------------------------------------


@dataclass(frozen=True)
class AprioriReport:
    eps: float
    potential: float
    kinetic: float
    position: float
    dual: float | None
    dissipation: float | None
    sliding_window: float

    def as_dict(self):
        return dict(self.__dict__)


def _sliding_average(y, dt, width):
    n = max(int(round(width / dt)), 1)
    c = np.concatenate([[0.0], np.cumsum(0.5 * dt * (y[1:] + y[:-1]))])
    if n >= len(y):
        return np.array([c[-1] / (dt * (len(y) - 1))])
    return (c[n:] - c[:-n]) / (n * dt)


def _dual_order(energy, grid):
    """Order of the quadratic leading term when the dual bound applies, else ``None``."""
    if not grid.periodic or not energy.terms:
        return None
    lead = max(energy.terms, key=lambda t: getattr(t, "order", -1))
    if isinstance(lead, SobolevQuadratic) or (getattr(lead, "exponent", None) == 2 and hasattr(lead, "order")):
        return float(lead.order)
    return None


def apriori_checks(w: SpaceTimeField, F: WeightedFunctional, window=None, e0=None) -> AprioriReport:
    """Smallest constants realizing the a priori bounds on ``[0, window]``.

    * potential: ``sup_tau (1/T') int_tau^{tau+T'} G dt`` over ``T' = eps, 2 eps, ...``
    * kinetic: ``max |w'|^2``; position: ``max |w|^2 / (1 + t^2)``
    * dual: ``max |w''|_{H^-m}^2`` (periodic, quadratic leading term of order ``m``)
    * dissipation: ``int D(w')`` (damped problems)
    * sliding_window: smallest margin of the windowed consequence of ``A^2 W <= m``
    """
    eps = F.eps
    if window is None:
        window = F.time.horizon - 5 * eps
    if window < eps:
        raise WindowError(f"window {window} is shorter than eps={eps}")
    grid = w.space
    t = F.time.times
    mask = _window_mask(t, window)
    dt = F.time.dt
    tw = t[mask]
    vals = w.values[mask]
    vel = w.velocities()[mask]
    pot = np.asarray(F.energy.value(grid, vals), dtype=float)

    widths = eps * np.arange(1, int(window / eps) + 1)
    c_pot = max(float(np.max(_sliding_average(pot, dt, T))) for T in widths)
    c_kin = float(np.max(grid.h * np.sum(vel * vel, axis=1)))
    c_pos = float(np.max(grid.h * np.sum(vals * vals, axis=1) / (1 + tw**2)))

    m = _dual_order(F.energy, grid)
    c_dual = None
    if m is not None:
        _, _, a = w.kinematics()
        acc = np.concatenate([a[:1], a, a[-1:]])[mask]
        c_dual = max(neg_sobolev_norm(SpatialField(grid, x), m) ** 2 for x in acc)

    c_diss = None
    if F.kappa:
        rate = np.asarray(F.dissipation.value(grid, vel), dtype=float)
        c_diss = float(_cumtrapz(rate, dt)[-1])

    trace = approx_energy_trace(w, F)
    margin = sliding_window_margin(trace, window, e0)
    return AprioriReport(eps, c_pot, c_kin, c_pos, c_dual, c_diss, margin)


def _y(z):
    """``int_0^z s exp(-s) ds``."""
    return 1.0 - np.exp(-z) * (1.0 + z)


def sliding_window_margin(trace: ApproxEnergyTrace, window, e0=None, delta=0.5, spans=(1.0, 2.0, 4.0)):
    """Check ``Y(delta a) int_{T+delta a}^{T+a} W <= int_T^{T+a} m`` on the rescaled grid.

    ``m = E(0) + C sqrt(eps) - K - (2 kappa / eps) int H`` with the fitted
    constant of :func:`check_F_monotone`, which makes ``A^2 W <= m`` hold on
    the window.  Returns the smallest margin (nonnegative when the
    consequence holds everywhere).
    """
    eps = trace.eps
    ds = trace.s[1] - trace.s[0]
    res = check_F_monotone(trace, window, e0=e0)
    e0 = res.detail["e0"]
    mvals = e0 + res.detail["C_fit"] * np.sqrt(eps) - trace.kinetic - trace.damping_integral
    n_win = int(np.sum(trace.s * eps <= window + 1e-12))
    cw = np.concatenate([[0.0], np.cumsum(0.5 * ds * (trace.potential[1:] + trace.potential[:-1]))])
    cm = np.concatenate([[0.0], np.cumsum(0.5 * ds * (mvals[1:] + mvals[:-1]))])
    worst = np.inf
    for a in spans:
        na = int(round(a / ds))
        nd = int(round(delta * a / ds))
        if na < 1 or na >= n_win:
            continue
        starts = np.arange(0, n_win - na)
        lhs = _y(nd * ds) * (cw[starts + na] - cw[starts + nd])
        rhs = cm[starts + na] - cm[starts]
        worst = min(worst, float(np.min(rhs - lhs)))
    return worst if np.isfinite(worst) else 0.0


def uniformity(values, tolerance=0.2) -> CheckResult:
    """Constants across a sweep vary by at most ``tolerance`` relative to the largest."""
    v = np.asarray([x for x in values if x is not None], dtype=float)
    if len(v) == 0 or np.max(np.abs(v)) == 0:
        return CheckResult("uniformity", True, tolerance, {"spread": 0.0})
    spread = float((np.max(v) - np.min(v)) / np.max(np.abs(v)))
    return CheckResult("uniformity", spread <= tolerance, tolerance - spread, {"spread": spread, "values": v.tolist()})


# -- comparison against oracles -----------------------------------------------


@dataclass(frozen=True, eq=False)
class Comparison:
    times: np.ndarray
    distance: np.ndarray
    spacetime: float
    reference_norm: float

    @property
    def relative(self):
        return self.spacetime / self.reference_norm if self.reference_norm > 0 else self.spacetime


def compare(traj, oracle, window) -> Comparison:
    """L2 distances between two trajectories on ``[0, window]``.

    The oracle may live on a finer time grid; it is resampled to the samples
    of ``traj`` by cubic Hermite interpolation.
    """
    if isinstance(traj, SpaceTimeField):
        traj = Trajectory.from_field(traj)
    if isinstance(oracle, SpaceTimeField):
        oracle = Trajectory.from_field(oracle)
    if traj.grid != oracle.grid:
        raise WindowError("trajectories live on different spatial grids")
    hi = window if np.isscalar(window) else window[1]
    if hi > traj.time.horizon + 1e-12 or hi > oracle.time.horizon + 1e-12:
        raise WindowError(f"window {window} exceeds a trajectory horizon")
    mask = _window_mask(traj.times, window)
    t = traj.times[mask]
    ref, _ = oracle.resample(t)
    h = traj.grid.h
    diff = traj.values[mask] - ref
    dist = np.sqrt(h * np.sum(diff * diff, axis=1))
    ref_norm = np.sqrt(h * np.sum(ref * ref, axis=1))
    dt = traj.time.dt

    def st(y):
        return float(np.sqrt(np.trapezoid(y * y, dx=dt))) if len(y) > 1 else float(y[0])

    return Comparison(t, dist, st(dist), st(ref_norm))


def convergence_slope(eps, errors):
    """Least-squares slope of ``log error`` against ``log eps``."""
    eps, errors = np.asarray(eps, dtype=float), np.asarray(errors, dtype=float)
    if len(eps) < 2 or np.any(errors <= 0):
        return None
    return float(np.polyfit(np.log(eps), np.log(errors), 1)[0])
