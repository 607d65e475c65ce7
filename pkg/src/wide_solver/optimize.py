"""Minimization of the weighted functional and epsilon continuation.

The unknowns are the second time differences ``a_j`` of the free layers;
values and velocities are rebuilt from them by running sums.  Working with
``a`` keeps the inertia term (and the fourth difference in its gradient) free
of the cancellation that plagues nodal values once ``dt`` is small.

Both solver paths share a preconditioner that is exact for quadratic
problems: in the Fourier/sine basis of the grid every spatial mode decouples
and the Hessian of the functional becomes a pentadiagonal matrix in time,
factored once per mode.
"""

from __future__ import annotations

import time as _time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
import scipy.sparse as sp

from .errors import ConditioningError, NonFiniteError, WideError
from .functional import (
    ConstraintSet,
    ProblemSpec,
    SpaceTimeField,
    WeightedFunctional,
    _assemble_accel,
    _assemble_nodal,
    _gradient_pieces,
    _value,
    preconditioned_sup,
)

MAX_CONDITIONING = 40.0
PATHS = ("auto", "quadratic", "nonlinear")


@dataclass(frozen=True)
class SolveOptions:
    tol: float = 1e-8
    max_iter: int = 10_000
    c1: float = 1e-4
    backtrack: float = 0.5
    memory: int = 10
    path: str = "auto"

    def __post_init__(self):
        if not self.tol > 0:
            raise ValueError("tolerance must be positive")
        if self.memory < 1:
            raise ValueError("quasi-Newton memory must be >= 1")
        if self.path not in PATHS:
            raise ValueError(f"path must be one of {PATHS}")
        if not 0 < self.c1 < 0.5 or not 0 < self.backtrack < 1:
            raise ValueError("line-search parameters out of range")


@dataclass
class SolveStats:
    path: str
    status: str = "running"
    iterations: int = 0
    evaluations: int = 0
    grad_norm: float = np.inf
    value: float = np.nan
    wall_time: float = 0.0
    history: list = field(default_factory=list, repr=False)

    @property
    def converged(self):
        return self.status == "converged"

    def as_dict(self):
        return {
            "path": self.path,
            "status": self.status,
            "iterations": self.iterations,
            "evaluations": self.evaluations,
            "grad_norm": self.grad_norm,
            "value": self.value,
            "wall_time": self.wall_time,
        }


class ModePreconditioner:
    """Approximate inverse Hessian on the free layers ``2..J``.

    For spatial mode ``k`` with energy curvature ``sigma_k`` and dissipation
    symbol ``beta_k`` the time matrix is

        eps^2 D2^T C D2 + sigma_k P + kappa eps beta_k D1^T C D1

    with ``C`` the cell weights and ``P`` the potential weights (zero on the
    last layer).  It is scaled by ``C^-1/2`` on both sides before the banded
    Cholesky factorization so that the exponential weights do not ruin the
    conditioning.
    """

    def __init__(self, F: WeightedFunctional, grid, v_ref=None):
        self.F = F
        self.grid = grid
        J = F.time.steps
        dt = F.time.dt
        c = F.cell_weights
        if v_ref is None:
            v_ref = np.zeros(grid.nodes)
        sigma = np.maximum(F.energy.hessian_symbol(grid, v_ref), 0.0)
        beta = F.dissipation.symbol(grid) if F.kappa else np.zeros_like(sigma)

        cw = sp.diags(c[1:J])
        d2 = sp.diags([1.0, -2.0, 1.0], [0, 1, 2], shape=(J - 1, J + 1)) / dt**2
        d1 = sp.diags([-1.0, 1.0], [0, 2], shape=(J - 1, J + 1)) / (2 * dt)
        d2, d1 = d2.tocsc()[:, 2:], d1.tocsc()[:, 2:]
        inertia = F.eps**2 * (d2.T @ cw @ d2)
        damping = F.kappa * F.eps * (d1.T @ cw @ d1)
        pot = c[2:].copy()
        pot[-1] = 0.0
        self.scale = 1.0 / np.sqrt(c[2:])

        def bands(m):
            m = sp.csr_matrix(m)
            out = np.zeros((3, J - 1))
            for d in range(3):
                out[d, : J - 1 - d] = m.diagonal(-d)
            return out

        s = self.scale
        pair = [s * s, s[1:] * s[:-1], s[2:] * s[:-2]]
        bi, bd = bands(inertia), bands(damping)
        self.factors = []
        for sk, bk in zip(sigma, beta):
            ab = bi + bk * bd
            ab[0] += sk * pot
            for d in range(3):
                ab[d, : J - 1 - d] *= pair[d]
            self.factors.append(scipy.linalg.cholesky_banded(ab, lower=True))

    def solve(self, y):
        """Apply the inverse to nodal gradients ``y`` of shape ``(J - 1, N)``."""
        grid = self.grid
        modes = grid.to_modes(y * self.scale[:, None])
        out = np.empty_like(modes)
        for k, cb in enumerate(self.factors):
            rhs = modes[:, k]
            if np.iscomplexobj(rhs):
                sol = scipy.linalg.cho_solve_banded((cb, True), np.stack([rhs.real, rhs.imag], axis=1))
                out[:, k] = sol[:, 0] + 1j * sol[:, 1]
            else:
                out[:, k] = scipy.linalg.cho_solve_banded((cb, True), rhs)
        return grid.from_modes(out) * self.scale[:, None]

    def apply_accel(self, q):
        """Preconditioner in acceleration variables, ``D2 M^-1 D2^T``."""
        J = self.F.time.steps
        dt = self.F.time.dt
        qp = np.zeros((J + 2, q.shape[1]))
        qp[1:J] = q
        y = (qp[1:J] - 2 * qp[2 : J + 1] + qp[3:]) / dt**2
        return self.from_nodal(self.solve(y))

    def from_nodal(self, z):
        J = self.F.time.steps
        wz = np.zeros((J + 1, z.shape[1]))
        wz[2:] = z
        return np.diff(wz, 2, axis=0) / self.F.time.dt**2


class _Problem:
    """Value and gradients of the functional as a function of the accelerations."""

    def __init__(self, F, constraints, stats):
        self.F = F
        self.c = constraints
        self.grid = constraints.grid
        self.stats = stats
        self.zero = ConstraintSet(constraints.w0 * 0.0, constraints.w1 * 0.0)

    def evaluate(self, a, homogeneous=False):
        F = self.F
        cons = self.zero if homogeneous else self.c
        w, vh = cons.kinematics(F.time, a)
        with np.errstate(over="ignore", invalid="ignore"):
            f = _value(
                self.grid, F.energy, F.dissipation, F.kappa, w, vh, a,
                F.cell_weights, 0.5 * F.eps**2, F.kappa * F.eps,
            )
            if not np.isfinite(f):
                return f, None, None
            pieces = _gradient_pieces(F, self.grid, w, vh, a)
        self.stats.evaluations += 1
        return f, _assemble_nodal(F, *pieces), _assemble_accel(F, *pieces)

    def metric(self, gw):
        return preconditioned_sup(self.F, self.grid, gw)


def _check_conditioning(F):
    if F.conditioning > MAX_CONDITIONING:
        raise ConditioningError(
            f"T/eps = {F.conditioning:.3g} exceeds {MAX_CONDITIONING:g}; the weights underflow the optimality system"
        )


def _initial_accel(F, c, init):
    if init is None:
        return np.zeros((F.time.steps - 1, c.grid.nodes))
    if init.time != F.time or init.space != c.grid:
        raise WideError("initial field lives on a different grid")
    _, _, a = c.apply(init).kinematics()
    return np.array(a)


def _snapshot(prob, a):
    try:
        return prob.c.from_accel(prob.F.time, a)
    except ValueError:
        return np.array(a)


def _pcg(prob, a, opts, stats, precond):
    f, gw, ga = prob.evaluate(a)
    if gw is None:
        raise NonFiniteError("non-finite functional value at the initial iterate", _snapshot(prob, a))
    stats.history.append(f)
    stats.grad_norm = prob.metric(gw)
    best, stall = stats.grad_norm, 0
    r = -ga
    z = -precond.from_nodal(precond.solve(gw[2:]))
    p = z.copy()
    rz = np.sum(r * z)
    while stats.grad_norm > opts.tol:
        if stats.iterations >= opts.max_iter:
            stats.status = "max-iterations"
            return a, f
        _, _, ap = prob.evaluate(p, homogeneous=True)
        pap = np.sum(p * ap)
        if not pap > 0:
            stats.status = "stalled"
            return a, f
        alpha = rz / pap
        a_new = a + alpha * p
        f_new, gw_new, ga_new = prob.evaluate(a_new)
        if gw_new is None:
            raise NonFiniteError("non-finite functional value during conjugate gradients", _snapshot(prob, a_new))
        stats.iterations += 1
        a, f, gw = a_new, f_new, gw_new
        stats.history.append(f)
        stats.grad_norm = prob.metric(gw)
        if stats.grad_norm < 0.5 * best:
            best, stall = stats.grad_norm, 0
        else:
            stall += 1
            if stall >= 20:
                stats.status = "stalled"
                return a, f
        r_new = -ga_new
        z_new = -precond.from_nodal(precond.solve(gw[2:]))
        rz_new = np.sum(r_new * z_new)
        beta = max(0.0, (rz_new - np.sum(r_new * z)) / rz)
        p = z_new + beta * p
        r, z, rz = r_new, z_new, rz_new
    stats.status = "converged"
    return a, f


def _lbfgs(prob, a, opts, stats, precond):
    f, gw, g = prob.evaluate(a)
    if gw is None:
        raise NonFiniteError("non-finite functional value at the initial iterate", _snapshot(prob, a))
    stats.history.append(f)
    stats.grad_norm = prob.metric(gw)
    mem = []
    best, stall = stats.grad_norm, 0
    while stats.grad_norm > opts.tol:
        if stats.iterations >= opts.max_iter:
            stats.status = "max-iterations"
            return a, f
        # two-loop recursion with the mode preconditioner as initial inverse
        q = g.copy()
        alphas = []
        for s, y, rho in reversed(mem):
            al = rho * np.sum(s * q)
            q -= al * y
            alphas.append(al)
        d = precond.apply_accel(q)
        for (s, y, rho), al in zip(mem, reversed(alphas)):
            d += (al - rho * np.sum(y * d)) * s
        d = -d
        slope = np.sum(g * d)
        if not slope < 0:
            mem.clear()
            d = -precond.apply_accel(g)
            slope = np.sum(g * d)
            if not slope < 0:
                stats.status = "stalled"
                return a, f

        step = 1.0
        roundoff = 64 * np.finfo(float).eps * (abs(f) + 1e-300)
        accepted = None
        for _ in range(60):
            a_try = a + step * d
            f_try, gw_try, g_try = prob.evaluate(a_try)
            if gw_try is not None:
                if f_try <= f + opts.c1 * step * slope:
                    accepted = (a_try, f_try, gw_try, g_try)
                    break
                # approximate Armijo once differences in f drown in rounding
                if f_try <= f + roundoff and np.sum(g_try * d) <= (1 - 2 * opts.c1) * slope:
                    accepted = (a_try, f_try, gw_try, g_try)
                    break
            step *= opts.backtrack
        if accepted is None:
            if not np.isfinite(f_try):
                raise NonFiniteError("line search found only non-finite values", _snapshot(prob, a))
            stats.status = "stalled"
            return a, f
        a_new, f, gw, g_new = accepted
        s, y = a_new - a, g_new - g
        sy = np.sum(s * y)
        if sy > 1e-12 * np.sqrt(np.sum(s * s) * np.sum(y * y)):
            mem.append((s, y, 1.0 / sy))
            if len(mem) > opts.memory:
                mem.pop(0)
        a, g = a_new, g_new
        stats.iterations += 1
        stats.history.append(f)
        stats.grad_norm = prob.metric(gw)
        if stats.grad_norm < 0.5 * best:
            best, stall = stats.grad_norm, 0
        else:
            stall += 1
            if stall >= 50:
                stats.status = "stalled"
                return a, f
    stats.status = "converged"
    return a, f


def choose_path(F, opts):
    if opts.path != "auto":
        return opts.path
    return "quadratic" if F.energy.quadratic else "nonlinear"


def minimize(F: WeightedFunctional, c: ConstraintSet, init: SpaceTimeField | None = None,
             opts: SolveOptions | None = None):
    """Minimize ``F`` over fields satisfying ``c``; ``init`` defaults to the competitor.

    Returns ``(field, stats)``.  The field carries its exact kinematics, so the
    constrained layers are bit-identical to the encoded data.
    """
    opts = opts or SolveOptions()
    _check_conditioning(F)
    F.energy.validate(c.grid)
    t0 = _time.perf_counter()
    path = choose_path(F, opts)
    stats = SolveStats(path=path)
    prob = _Problem(F, c, stats)
    a = _initial_accel(F, c, init)
    with np.errstate(over="ignore", invalid="ignore"):
        f0 = _value(c.grid, F.energy, F.dissipation, F.kappa, *c.kinematics(F.time, a), a,
                    F.cell_weights, 0.5 * F.eps**2, F.kappa * F.eps)
    if not np.isfinite(f0):
        raise NonFiniteError("non-finite functional value at the initial iterate", _snapshot(prob, a))
    precond = ModePreconditioner(F, c.grid, c.w0.values)
    solver = _pcg if path == "quadratic" else _lbfgs
    a, f = solver(prob, a, opts, stats, precond)
    stats.value = float(f)
    stats.wall_time = _time.perf_counter() - t0
    return c.from_accel(F.time, a), stats


@dataclass(frozen=True)
class SweepPlan:
    schedule: tuple
    warm_start: bool = True

    def __post_init__(self):
        sched = tuple(float(e) for e in self.schedule)
        if not sched:
            raise ValueError("the epsilon schedule is empty")
        if any(not e > 0 for e in sched):
            raise ValueError("epsilon values must be positive")
        if any(b >= a for a, b in zip(sched, sched[1:])):
            raise ValueError("the epsilon schedule must be strictly decreasing")
        object.__setattr__(self, "schedule", sched)

    @classmethod
    def geometric(cls, start, count, ratio=0.5, warm_start=True):
        return cls(tuple(start * ratio**i for i in range(count)), warm_start)


@dataclass
class SweepEntry:
    eps: float
    minimizer: SpaceTimeField | None
    stats: SolveStats | None
    error: str | None = None

    @property
    def failed(self):
        return self.error is not None or self.stats is None or not self.stats.converged


def sweep(plan: SweepPlan, problem: ProblemSpec, opts: SolveOptions | None = None, workers=1):
    """Solve every ``eps`` of the plan; failures are recorded and the sweep goes on.

    Without warm starts the entries are independent and may run on ``workers``
    threads; results are identical to the sequential run.
    """
    for eps in plan.schedule:
        _check_conditioning(problem.functional(eps))

    def one(eps, init):
        F = problem.functional(eps)
        try:
            w, stats = minimize(F, problem.constraints, init, opts)
        except WideError as exc:
            return SweepEntry(eps, None, None, f"{type(exc).__name__}: {exc}")
        return SweepEntry(eps, w, stats)

    if not plan.warm_start:
        if workers > 1:
            with ThreadPoolExecutor(workers) as pool:
                return list(pool.map(lambda e: one(e, None), plan.schedule))
        return [one(e, None) for e in plan.schedule]
    out = []
    prev = None
    for eps in plan.schedule:
        entry = one(eps, prev)
        out.append(entry)
        if entry.minimizer is not None:
            prev = entry.minimizer
    return out
