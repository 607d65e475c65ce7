"""Independent oracles: a damped leapfrog integrator and single-mode closed forms.

The integrator uses the same spatial operators as the functional, so
comparisons against minimizers only see the time discretization.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import CubicHermiteSpline

from .energy import DissipationSpec, EnergySpec, Preset, preset
from .errors import InstabilityError, UnsupportedOperationError
from .functional import SpaceTimeField, TimeGrid
from .grid import SpatialField, SpatialGrid


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Positions and velocities on a time grid; ``values[n]`` is ``w(t_n)``."""

    time: TimeGrid
    grid: SpatialGrid
    values: np.ndarray = field(repr=False)
    velocities: np.ndarray = field(repr=False)

    def __post_init__(self):
        shape = (self.time.steps + 1, self.grid.nodes)
        for name in ("values", "velocities"):
            v = np.array(getattr(self, name), dtype=float)
            if v.shape != shape:
                raise ValueError(f"{name} must have shape {shape}, got {v.shape}")
            v.setflags(write=False)
            object.__setattr__(self, name, v)

    @classmethod
    def from_field(cls, w: SpaceTimeField) -> "Trajectory":
        return cls(w.time, w.space, w.values, w.velocities())

    @property
    def times(self):
        return self.time.times

    @property
    def layers(self):
        return [SpatialField(self.grid, v) for v in self.values]

    def resample(self, times):
        """Cubic Hermite interpolation in time (uses the stored velocities)."""
        times = np.asarray(times, dtype=float)
        if np.array_equal(times, self.times):
            return np.array(self.values), np.array(self.velocities)
        spline = CubicHermiteSpline(self.times, self.values, self.velocities, axis=0)
        return spline(times), spline(times, 1)


def _resolve(spec):
    if isinstance(spec, str):
        return preset(spec)
    if isinstance(spec, Preset):
        return spec
    energy, dissipation, kappa = spec
    return Preset(energy, dissipation, kappa)


def leapfrog(energy: EnergySpec, dissipation: DissipationSpec, w0: SpatialField, w1: SpatialField,
             dt: float, T: float, kappa: int = 0, guard: float = 10.0) -> Trajectory:
    """Two-step central scheme with implicit centered damping.

    ``(I + kappa dt/2 B) w^{n+1} = 2 w^n - w^{n-1} - dt^2 grad G(w^n) + kappa dt/2 B w^{n-1}``,
    where ``B`` is the dissipation operator, inverted exactly in the mode basis.
    Raises :class:`InstabilityError` if the energy exceeds ``guard`` times its
    initial value.
    """
    grid = w0.grid
    if w1.grid != grid:
        raise ValueError("initial position and velocity live on different grids")
    energy.validate(grid)
    time = TimeGrid.from_step(T, dt)
    M = time.steps
    half = 0.5 * kappa * dt
    beta = dissipation.symbol(grid) if kappa else np.zeros(grid.laplacian_symbol().shape)

    def damp(v):
        return dissipation.gradient(grid, v) if kappa else 0.0

    def implicit(rhs):
        if not kappa:
            return rhs
        return grid.from_modes(grid.to_modes(rhs) / (1.0 + half * beta))

    def total_energy(w, v):
        return 0.5 * grid.h * float(np.sum(v * v)) + float(energy.value(grid, w))

    w = np.empty((M + 2, grid.nodes))
    w[0] = w0.values
    w[1] = w0.values + dt * w1.values + 0.5 * dt**2 * (-energy.gradient(grid, w0.values) - kappa * damp(w1.values))
    e0 = total_energy(w0.values, w1.values)
    limit = guard * max(e0, np.finfo(float).tiny)
    for n in range(1, M + 1):
        rhs = 2 * w[n] - w[n - 1] - dt**2 * energy.gradient(grid, w[n])
        if kappa:
            rhs = rhs + half * damp(w[n - 1])
        w[n + 1] = implicit(rhs)
        v = (w[n + 1] - w[n - 1]) / (2 * dt)
        e = total_energy(w[n], v)
        if not np.isfinite(e) or (e0 > 0 and e > limit):
            raise InstabilityError(f"leapfrog energy grew from {e0:.3e} to {e:.3e} at t={n * dt:.4g}; reduce dt")
    vel = np.empty((M + 1, grid.nodes))
    vel[0] = w1.values
    vel[1:] = (w[2:] - w[:-2]) / (2 * dt)
    return Trajectory(time, grid, w[: M + 1], vel)


def _sinhc(g, t):
    """``sinh(g t) / g`` including the limit ``t`` at ``g = 0``."""
    z = g * t
    small = np.abs(z) < 1e-6
    safe = np.where(small, 1.0, g)
    return np.where(small, t * (1 + z * z / 6), np.sinh(z) / safe)


def mode_solution(omega2, c, t, a0=1.0, v0=0.0):
    """Solve ``a'' + c a' + omega2 a = 0``; returns ``(a(t), a'(t))``.

    Covers the under-, over- and critically damped branches with one complex
    formula.
    """
    t = np.asarray(t, dtype=float)
    omega2 = np.asarray(omega2, dtype=float)
    c = np.asarray(c, dtype=float)
    g = np.sqrt((0.25 * c * c - omega2).astype(complex))
    decay = np.exp(-0.5 * c * t)
    s = decay * _sinhc(g, t)
    cosine = decay * np.cosh(g * t) + 0.5 * c * s
    a = a0 * cosine + v0 * s
    da = -omega2 * a0 * s + v0 * (cosine - c * s)
    return np.real(a), np.real(da)


def _symbols(spec, grid=None, k=None):
    if not spec.energy.quadratic:
        raise UnsupportedOperationError("closed-form modes exist only for quadratic presets")
    if grid is None:
        omega2 = spec.energy.continuum_symbol(np.asarray(k, dtype=float))
        c = spec.kappa * spec.dissipation.continuum_symbol(np.asarray(k, dtype=float))
        return omega2, c
    omega2 = spec.energy.hessian_symbol(grid, np.zeros(grid.nodes))
    c = spec.kappa * spec.dissipation.symbol(grid) if spec.kappa else np.zeros_like(omega2)
    return omega2, c


def exact_mode(spec, k, t, grid: SpatialGrid | None = None, derivative=False):
    """Amplitude of wavenumber ``k`` with ``a(0) = 1``, ``a'(0) = 0``.

    ``spec`` is a preset name, a :class:`Preset` or an ``(energy, dissipation,
    kappa)`` triple.  Without a grid ``k`` is the physical wavenumber and the
    continuum symbols are used.  With a grid ``k`` is the integer mode number
    and the symbols of the discrete operators are used (the semi-discrete
    solution).
    """
    spec = _resolve(spec)
    if grid is None:
        omega2, c = _symbols(spec, k=k)
    else:
        idx = int(k) if grid.periodic else int(k) - 1
        omega2, c = (s[idx] for s in _symbols(spec, grid))
    a, da = mode_solution(omega2, c, t)
    return (a, da) if derivative else a


def modal_trajectory(spec, w0: SpatialField, w1: SpatialField, time: TimeGrid, discrete=True) -> Trajectory:
    """Exact time evolution of every spatial mode for a quadratic preset.

    ``discrete=True`` evolves the semi-discrete system (discrete symbols),
    otherwise the continuum symbols at the grid wavenumbers are used.
    """
    spec = _resolve(spec)
    grid = w0.grid
    if discrete:
        omega2, c = _symbols(spec, grid)
    else:
        omega2, c = _symbols(spec, k=grid.wavenumbers())
    t = time.times[:, None]
    ac, dac = mode_solution(omega2[None, :], c[None, :], t, 1.0, 0.0)
    as_, das = mode_solution(omega2[None, :], c[None, :], t, 0.0, 1.0)
    p, q = grid.to_modes(w0.values)[None, :], grid.to_modes(w1.values)[None, :]
    values = grid.from_modes(p * ac + q * as_)
    vel = grid.from_modes(p * dac + q * das)
    return Trajectory(time, grid, values, vel)
