"""The discrete exponentially weighted space-time functional.

For a field ``w[j, i]`` on time layers ``t_j = j dt`` the functional is

    F(w) = c_0 G(w_0) + sum_{j=1}^{J-1} c_j [ eps^2/2 |d2 w_j|^2 + G(w_j) + kappa eps D(d1 w_j) ]

with ``d2`` the 3-point second difference, ``d1`` the centered first
difference and ``c_j = int_{t_j}^{t_{j+1}} exp(-t/eps) dt`` the exact weight of
the cell to the right of node ``j``.  Layers 0 and 1 carry the initial data
(``w_0`` and ``w_0 + dt w_1``); everything else is free.

Fields may carry their own kinematics (half-step velocities and second
differences).  The optimizer uses them so that the fourth difference in time
is never applied to rounded nodal values; see :class:`SpaceTimeField`.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .energy import DissipationSpec, EnergySpec
from .errors import GridMismatchError, WindowError
from .grid import SpatialField, SpatialGrid

QUADRATURE = "exponential-cell"


@dataclass(frozen=True)
class TimeGrid:
    horizon: float
    steps: int

    def __post_init__(self):
        if not self.horizon > 0:
            raise ValueError("time horizon must be positive")
        if int(self.steps) != self.steps or self.steps < 4:
            raise ValueError("a time grid needs at least 4 steps")
        object.__setattr__(self, "steps", int(self.steps))
        object.__setattr__(self, "horizon", float(self.horizon))

    @classmethod
    def from_step(cls, horizon, dt):
        steps = round(horizon / dt)
        if abs(steps * dt - horizon) > 1e-9 * horizon:
            raise ValueError(f"horizon {horizon} is not a multiple of dt={dt}")
        return cls(horizon, steps)

    @property
    def dt(self) -> float:
        return self.horizon / self.steps

    @cached_property
    def times(self) -> np.ndarray:
        return np.arange(self.steps + 1) * self.dt


@dataclass(frozen=True, eq=False)
class SpaceTimeField:
    """Nodal values ``values[j, i]`` on ``time x space``.

    ``half_velocity`` (``(w_{j+1} - w_j) / dt``, shape ``(J, N)``) and
    ``accel`` (second differences, shape ``(J - 1, N)``) are optional.  When
    present they are the authoritative kinematics: the values are their
    running sums, and functional/gradient evaluation reads the second
    differences directly instead of re-differencing rounded values.
    """

    time: TimeGrid
    space: SpatialGrid
    values: np.ndarray = field(repr=False)
    half_velocity: np.ndarray | None = field(default=None, repr=False)
    accel: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        shape = (self.time.steps + 1, self.space.nodes)
        if v.shape != shape:
            raise ValueError(f"expected values of shape {shape}, got {v.shape}")
        if not np.all(np.isfinite(v)):
            raise ValueError("space-time field values must be finite")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)
        if (self.half_velocity is None) != (self.accel is None):
            raise ValueError("half_velocity and accel must be given together")

    @classmethod
    def from_kinematics(cls, time, space, w0, half_velocity, accel):
        values = np.empty((time.steps + 1, space.nodes))
        values[0] = w0
        values[1:] = w0 + time.dt * np.cumsum(half_velocity, axis=0)
        return cls(time, space, values, half_velocity, accel)

    def kinematics(self):
        """``(values, half_velocity, accel)``."""
        if self.accel is not None:
            return self.values, self.half_velocity, self.accel
        dt = self.time.dt
        vh = np.diff(self.values, axis=0) / dt
        a = np.diff(self.values, 2, axis=0) / dt**2
        return self.values, vh, a

    def layer(self, j) -> SpatialField:
        return SpatialField(self.space, self.values[j])

    def velocities(self) -> np.ndarray:
        """Nodal velocities: ``w_1`` at layer 0, centered inside, backward at the end."""
        _, vh, _ = self.kinematics()
        v = np.empty_like(self.values)
        v[0] = vh[0]
        v[1:-1] = 0.5 * (vh[1:] + vh[:-1])
        v[-1] = vh[-1]
        return v


@dataclass(frozen=True)
class ConstraintSet:
    """Initial position and velocity, encoded as ``layer0 = w0``, ``layer1 = w0 + dt w1``."""

    w0: SpatialField
    w1: SpatialField

    def __post_init__(self):
        if self.w0.grid != self.w1.grid:
            raise GridMismatchError("initial position and velocity live on different grids")

    @property
    def grid(self):
        return self.w0.grid

    def layers(self, time: TimeGrid):
        w0 = self.w0.values
        return w0, w0 + time.dt * self.w1.values

    def kinematics(self, time: TimeGrid, accel):
        """Values and half-step velocities generated by second differences ``accel``."""
        dt = time.dt
        l0, l1 = self.layers(time)
        vh = np.empty((time.steps, self.grid.nodes))
        vh[0] = self.w1.values
        vh[1:] = vh[0] + dt * np.cumsum(accel, axis=0)
        values = np.empty((time.steps + 1, self.grid.nodes))
        values[0], values[1] = l0, l1
        values[2:] = l1 + dt * np.cumsum(vh[1:], axis=0)
        return values, vh

    def from_accel(self, time: TimeGrid, accel) -> SpaceTimeField:
        accel = np.asarray(accel, dtype=float)
        values, vh = self.kinematics(time, accel)
        return SpaceTimeField(time, self.grid, values, vh, accel)

    def apply(self, w: SpaceTimeField) -> SpaceTimeField:
        if w.space != self.grid:
            raise GridMismatchError("constraint grid differs from field grid")
        if w.accel is not None:
            return self.from_accel(w.time, w.accel)
        l0, l1 = self.layers(w.time)
        values = np.array(w.values)
        values[0], values[1] = l0, l1
        return SpaceTimeField(w.time, w.space, values)

    def satisfied_by(self, w: SpaceTimeField) -> bool:
        l0, l1 = self.layers(w.time)
        return np.array_equal(w.values[0], l0) and np.array_equal(w.values[1], l1)


@dataclass(frozen=True)
class WeightedFunctional:
    eps: float
    energy: EnergySpec
    dissipation: DissipationSpec
    kappa: int
    time: TimeGrid
    weighted: bool = True

    def __post_init__(self):
        if not self.eps > 0:
            raise ValueError("eps must be positive")
        if self.kappa not in (0, 1):
            raise ValueError("kappa must be 0 or 1")
        if self.kappa == 1 and not self.dissipation:
            raise ValueError("kappa=1 needs a nonempty dissipation")

    @property
    def quadrature(self):
        return QUADRATURE if self.weighted else "rectangle"

    @cached_property
    def mu(self) -> np.ndarray:
        """Nodal weights ``exp(-t_j / eps)``."""
        if not self.weighted:
            return np.ones(self.time.steps + 1)
        return np.exp(-self.time.times / self.eps)

    @cached_property
    def cell_weights(self) -> np.ndarray:
        if not self.weighted:
            return np.full(self.time.steps + 1, self.time.dt)
        ds = self.time.dt / self.eps
        return self.eps * -np.expm1(-ds) * self.mu

    @property
    def conditioning(self):
        return self.time.horizon / self.eps

    def is_quadratic(self):
        return self.energy.quadratic

    def check(self, w: SpaceTimeField):
        if w.time != self.time:
            raise GridMismatchError("field time grid differs from functional time grid")
        self.energy.validate(w.space)


def _value(grid, energy, dissipation, kappa, w, vh, a, weights, inertia, damping):
    c = weights
    g = energy.value(grid, w[:-1])
    total = c[0] * g[0]
    per_layer = inertia * grid.h * np.sum(a * a, axis=-1) + g[1:]
    if kappa:
        b = 0.5 * (vh[1:] + vh[:-1])
        per_layer = per_layer + damping * dissipation.value(grid, b)
    return float(total + np.sum(c[1:-1] * per_layer))


def eval_functional(F: WeightedFunctional, w: SpaceTimeField) -> float:
    F.check(w)
    values, vh, a = w.kinematics()
    return _value(
        w.space, F.energy, F.dissipation, F.kappa, values, vh, a,
        F.cell_weights, 0.5 * F.eps**2, F.kappa * F.eps,
    )


def rescaled_value(F: WeightedFunctional, w: SpaceTimeField) -> float:
    """``J = F / eps``, the value in rescaled time ``s = t / eps``."""
    return eval_functional(F, w) / F.eps


def eval_rescaled(F: WeightedFunctional, u: SpaceTimeField) -> float:
    """Evaluate the rescaled functional directly on ``u(s) = w(eps s)``.

    ``u`` must live on the time grid ``TimeGrid(T / eps, J)``.
    """
    expected = TimeGrid(F.time.horizon / F.eps, F.time.steps)
    if abs(u.time.horizon - expected.horizon) > 1e-12 * expected.horizon or u.time.steps != expected.steps:
        raise GridMismatchError("rescaled field must live on the grid s = t / eps")
    ds = u.time.dt
    weights = np.exp(-u.time.times) * -np.expm1(-ds)
    values, vh, a = u.kinematics()
    return _value(
        u.space, F.energy, F.dissipation, F.kappa, values, vh, a,
        weights, 0.5 / F.eps**2, F.kappa / F.eps,
    )


def _gradient_pieces(F, grid, w, vh, a):
    """Weighted term derivatives before the time-difference adjoints are applied.

    Returns ``(inertia, potential, damping)``: ``c_j eps^2 d2w_j`` for
    ``j = 1..J-1``, ``c_j grad G(w_j)`` for ``j = 0..J-1`` and
    ``c_j kappa eps grad D(d1w_j)`` for ``j = 1..J-1`` (``None`` if undamped).
    """
    J = F.time.steps
    c = F.cell_weights
    inertia = (c[1:J, None] * F.eps**2) * a
    potential = c[:J, None] * F.energy.gradient(grid, w[:J])
    damping = None
    if F.kappa:
        b = 0.5 * (vh[1:] + vh[:-1])
        damping = (c[1:J, None] * F.kappa * F.eps) * F.dissipation.gradient(grid, b)
    return inertia, potential, damping


def _assemble_nodal(F, inertia, potential, damping):
    J = F.time.steps
    dt = F.time.dt
    out = np.zeros((J + 1, inertia.shape[1]))
    pad = np.zeros((J + 3, inertia.shape[1]))
    pad[2 : J + 1] = inertia
    out += np.diff(pad, 2, axis=0) / dt**2
    out[:J] += potential
    if damping is not None:
        pad[2 : J + 1] = damping
        out += (pad[:-2] - pad[2:]) / (2 * dt)
    out[:2] = 0.0
    return out


def _suffix_sum(x):
    return np.cumsum(x[::-1], axis=0)[::-1]


def _assemble_accel(F, inertia, potential, damping):
    """Gradient with respect to the second differences ``a_1 .. a_{J-1}``."""
    J = F.time.steps
    dt = F.time.dt
    gvh = np.zeros((J, inertia.shape[1]))
    gvh[1 : J - 1] = dt * _suffix_sum(potential[2:])
    if damping is not None:
        gvh[1:] += 0.5 * damping
        gvh[1 : J - 1] += 0.5 * damping[1:]
    return inertia + dt * _suffix_sum(gvh[1:])


def _grad_arrays(F, grid, w, vh, a):
    return _assemble_nodal(F, *_gradient_pieces(F, grid, w, vh, a))


def grad_functional(F: WeightedFunctional, w: SpaceTimeField) -> SpaceTimeField:
    """L2 gradient (nodal partials divided by ``h``); zero on the constrained layers."""
    F.check(w)
    values, vh, a = w.kinematics()
    return SpaceTimeField(F.time, w.space, _grad_arrays(F, w.space, values, vh, a))


def precondition(g: SpaceTimeField, F: WeightedFunctional) -> SpaceTimeField:
    """Divide layer ``j`` by ``dt * mu_j``; constrained layers stay zero."""
    out = g.values / (F.time.dt * F.mu)[:, None]
    out[:2] = 0.0
    return SpaceTimeField(g.time, g.space, out)


def preconditioned_sup(F, grid, gvals) -> float:
    scale = F.time.dt * F.mu
    return float(np.max(np.abs(gvals[2:] / scale[2:, None]))) if gvals.shape[0] > 2 else 0.0


def competitor(F: WeightedFunctional, c: ConstraintSet) -> SpaceTimeField:
    """The admissible field ``psi_j = w0 + t_j w1``."""
    t = F.time.times[:, None]
    return SpaceTimeField(F.time, c.grid, c.w0.values[None, :] + t * c.w1.values[None, :])


@dataclass(frozen=True, eq=False)
class ELResidual:
    times: np.ndarray
    norms: np.ndarray
    terms: dict
    window: float
    window_max: float
    damping_rate_max: float


def el_residual(F: WeightedFunctional, w: SpaceTimeField, window: float | None = None) -> ELResidual:
    """Central-difference residual of the fourth-order Euler-Lagrange equation.

    Returns the L2 norm on every layer ``2 .. J-3`` of
    ``eps^2 w'''' - 2 eps w''' + w'' + grad G(w) + kappa (grad D(w') - eps (grad D(w'))')``,
    the individual term norms, and the maximum over ``t <= window``
    (default ``T - 5 eps``).  The ``-eps (grad D(w'))'`` contribution is also
    reported on its own as ``damping_rate``.
    """
    F.check(w)
    J = F.time.steps
    if J < 6:
        raise ValueError("the residual needs at least 6 steps")
    if window is None:
        window = F.time.horizon - 5 * F.eps
    if window > F.time.horizon or window < 0:
        raise WindowError(f"reporting window [0, {window}] not inside the horizon")
    grid = w.space
    dt = F.time.dt
    values, vh, a = w.kinematics()
    idx = np.arange(2, J - 2)
    ai = idx - 1  # accel row of layer j
    fourth = np.diff(a, 2, axis=0)[ai - 1] / dt**2
    third = (a[ai + 1] - a[ai - 1]) / (2 * dt)
    second = a[ai]
    pot = F.energy.gradient(grid, values[idx])
    terms = {
        "fourth": F.eps**2 * fourth,
        "third": -2 * F.eps * third,
        "second": second,
        "potential": pot,
    }
    total = terms["fourth"] + terms["third"] + second + pot
    if F.kappa:
        b = 0.5 * (vh[1:] + vh[:-1])
        terms["damping"] = F.dissipation.gradient(grid, b[ai])
        terms["damping_rate"] = -F.eps * F.dissipation.gradient(grid, a[ai])
        total = total + terms["damping"] + terms["damping_rate"]

    def norm(x):
        return np.sqrt(grid.h * np.sum(x * x, axis=-1))

    norms = norm(total)
    term_norms = {k: norm(v) for k, v in terms.items()}
    times = F.time.times[idx]
    inside = times <= window + 1e-12
    wmax = float(np.max(norms[inside])) if np.any(inside) else 0.0
    dmax = float(np.max(term_norms["damping_rate"][inside])) if F.kappa and np.any(inside) else 0.0
    return ELResidual(times, norms, term_norms, window, wmax, dmax)


@dataclass(frozen=True)
class ProblemSpec:
    """Everything needed to build the functional for any ``eps`` of a schedule."""

    energy: EnergySpec
    dissipation: DissipationSpec
    kappa: int
    time: TimeGrid
    constraints: ConstraintSet
    schedule: tuple = ()
    name: str = ""

    def __post_init__(self):
        object.__setattr__(self, "schedule", tuple(float(e) for e in self.schedule))

    @property
    def grid(self) -> SpatialGrid:
        return self.constraints.grid

    def functional(self, eps) -> WeightedFunctional:
        return WeightedFunctional(eps, self.energy, self.dissipation, self.kappa, self.time)
