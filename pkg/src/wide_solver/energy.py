"""Energy functionals ``G`` and quadratic dissipations ``D`` on a spatial grid.

Every term evaluates on arrays of shape ``(..., N)`` and returns one value per
leading index, so a whole space-time block is handled in one call.  Gradients
follow the L2 convention used throughout the package: nodal partial
derivatives divided by ``h``, so that ``h * sum(grad * eta)`` is the
directional derivative.

Terms compose additively; an EnergySpec is just a tuple of terms whose values and
gradients are summed.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import InvalidTermError, UnknownPresetError
from .grid import SpatialField

DEFAULT_DELTA = 1e-8


@dataclass(frozen=True)
class DerivPower:
    """``(coeff / p) * sum h |C_k v|^p`` with ``C_k`` the compact k-th difference."""

    order: int
    exponent: float = 2.0
    coeff: float = 1.0
    delta: float = DEFAULT_DELTA

    @property
    def quadratic(self):
        return self.exponent == 2 or self.coeff == 0

    def validate(self, grid):
        if self.order not in (0, 1, 2, 3, 4):
            raise InvalidTermError(f"derivative order {self.order} outside 0..4")
        if not self.exponent > 1:
            raise InvalidTermError("DerivPower exponent must exceed 1")
        if self.coeff < 0:
            raise InvalidTermError("energy coefficients must be nonnegative")

    def value(self, grid, v):
        g = grid.compact_diff(v, self.order)
        p = self.exponent
        mag = g * g if p == 2 else np.abs(g) ** p
        return self.coeff / p * grid.h * np.sum(mag, axis=-1)

    def _flux(self, g):
        p = self.exponent
        if p == 2:
            return g
        if p < 2:
            return (g * g + self.delta**2) ** ((p - 2) / 2) * g
        return np.abs(g) ** (p - 2) * g

    def gradient(self, grid, v):
        g = grid.compact_diff(v, self.order)
        return self.coeff * grid.compact_diff_adjoint(self._flux(g), self.order)

    def hessian_symbol(self, grid, v_ref):
        sigma = grid.laplacian_symbol() ** self.order
        p = self.exponent
        if p == 2:
            return self.coeff * sigma
        g = grid.compact_diff(v_ref, self.order)
        scale = (g * g + self.delta**2) ** ((p - 2) / 2)
        return self.coeff * (p - 1) * float(np.median(scale)) * sigma

    def continuum_symbol(self, xi):
        if not self.quadratic:
            raise InvalidTermError("continuum symbol only exists for quadratic terms")
        return self.coeff * xi ** (2 * self.order)


@dataclass(frozen=True)
class SobolevQuadratic:
    """``(coeff / 2) * |v|_{H^m}^2`` evaluated spectrally."""

    order: float
    coeff: float = 1.0

    quadratic = True

    def validate(self, grid):
        if not self.order > 0:
            raise InvalidTermError("Sobolev order must be positive")
        if self.coeff < 0:
            raise InvalidTermError("energy coefficients must be nonnegative")
        if not grid.periodic and float(self.order) != int(self.order):
            raise InvalidTermError("non-integer Sobolev orders need a periodic grid")

    def _multiplier(self, grid):
        xi = grid.wavenumbers()
        return np.where(xi == 0, 0.0, np.abs(xi)) ** (2 * self.order)

    def value(self, grid, v):
        return 0.5 * self.coeff * np.sum(self._multiplier(grid) * grid.mode_energies(v), axis=-1)

    def gradient(self, grid, v):
        return self.coeff * grid.spectral_power(v, self.order)

    def hessian_symbol(self, grid, v_ref):
        return self.coeff * self._multiplier(grid)

    def continuum_symbol(self, xi):
        return self.coeff * np.abs(xi) ** (2 * self.order)


@dataclass(frozen=True)
class CosinePotential:
    """``coeff * sum h (1 - cos v)``; nonconvex."""

    coeff: float = 1.0

    quadratic = False

    def validate(self, grid):
        if self.coeff < 0:
            raise InvalidTermError("energy coefficients must be nonnegative")

    def value(self, grid, v):
        return self.coeff * grid.h * np.sum(2.0 * np.sin(0.5 * np.asarray(v)) ** 2, axis=-1)

    def gradient(self, grid, v):
        return self.coeff * np.sin(v)

    def hessian_symbol(self, grid, v_ref):
        c = max(float(np.median(np.cos(v_ref))), 0.0)
        return np.full(grid.laplacian_symbol().shape, self.coeff * c)


@dataclass(frozen=True)
class KirchhoffQuartic:
    """``(coeff / 4) * (sum h |forward v|^2)^2``; gradient ``I(v) * (-Laplacian v)``."""

    coeff: float = 1.0

    quadratic = False

    def validate(self, grid):
        if self.coeff < 0:
            raise InvalidTermError("energy coefficients must be nonnegative")

    def _dirichlet_integral(self, grid, v):
        g = grid.forward(v)
        return grid.h * np.sum(g * g, axis=-1)

    def value(self, grid, v):
        return 0.25 * self.coeff * self._dirichlet_integral(grid, v) ** 2

    def gradient(self, grid, v):
        i = self._dirichlet_integral(grid, v)
        return self.coeff * np.asarray(i)[..., None] * -grid.laplacian(v)

    def hessian_symbol(self, grid, v_ref):
        return self.coeff * float(self._dirichlet_integral(grid, v_ref)) * grid.laplacian_symbol()


TERM_TYPES = (DerivPower, SobolevQuadratic, CosinePotential, KirchhoffQuartic)


@dataclass(frozen=True)
class EnergySpec:
    terms: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "terms", tuple(self.terms))
        for t in self.terms:
            if not isinstance(t, TERM_TYPES):
                raise InvalidTermError(f"unknown energy term {t!r}")

    def __add__(self, other):
        return EnergySpec(self.terms + other.terms)

    @property
    def quadratic(self):
        return all(t.quadratic for t in self.terms)

    def validate(self, grid):
        for t in self.terms:
            t.validate(grid)

    def value(self, grid, v):
        v = np.asarray(v, dtype=float)
        out = np.zeros(v.shape[:-1])
        for t in self.terms:
            out = out + t.value(grid, v)
        return out

    def gradient(self, grid, v):
        v = np.asarray(v, dtype=float)
        out = np.zeros(v.shape)
        for t in self.terms:
            out = out + t.gradient(grid, v)
        return out

    def hessian_symbol(self, grid, v_ref):
        out = np.zeros(grid.laplacian_symbol().shape)
        for t in self.terms:
            out = out + t.hessian_symbol(grid, v_ref)
        return out

    def continuum_symbol(self, xi):
        if not self.quadratic:
            raise InvalidTermError("energy is not quadratic")
        return sum((t.continuum_symbol(xi) for t in self.terms), 0.0 * np.asarray(xi, dtype=float))


@dataclass(frozen=True)
class DissipationSpec:
    """Quadratic dissipation ``sum_j (coeff_j / 2) * sum h |C_j v|^2``.

    ``terms`` is a tuple of ``(order, coeff)`` pairs; an empty tuple is the
    non-dissipative convention ``D = 0``.
    """

    terms: tuple = ()

    def __post_init__(self):
        terms = tuple((int(j), float(c)) for j, c in self.terms)
        for j, c in terms:
            if j not in (0, 1, 2, 3, 4):
                raise InvalidTermError(f"dissipation order {j} outside 0..4")
            if c < 0:
                raise InvalidTermError("dissipation coefficients must be nonnegative")
        object.__setattr__(self, "terms", terms)

    def __add__(self, other):
        return DissipationSpec(self.terms + other.terms)

    def __bool__(self):
        return bool(self.terms)

    def validate(self, grid):
        pass

    def value(self, grid, v):
        v = np.asarray(v, dtype=float)
        out = np.zeros(v.shape[:-1])
        for j, c in self.terms:
            g = grid.compact_diff(v, j)
            out = out + 0.5 * c * grid.h * np.sum(g * g, axis=-1)
        return out

    def gradient(self, grid, v):
        v = np.asarray(v, dtype=float)
        out = np.zeros(v.shape)
        for j, c in self.terms:
            out = out + c * grid.compact_diff_adjoint(grid.compact_diff(v, j), j)
        return out

    def symbol(self, grid):
        sigma = grid.laplacian_symbol()
        return sum((c * sigma**j for j, c in self.terms), np.zeros_like(sigma))

    def continuum_symbol(self, xi):
        xi = np.asarray(xi, dtype=float)
        return sum((c * xi ** (2 * j) for j, c in self.terms), np.zeros_like(xi))


# -- field-level operations -------------------------------------------------


def _check(spec, v):
    if not isinstance(v, SpatialField):
        raise TypeError("expected a SpatialField")
    spec.validate(v.grid)


def eval_energy(spec: EnergySpec, v: SpatialField) -> float:
    _check(spec, v)
    return float(spec.value(v.grid, v.values))


def grad_energy(spec: EnergySpec, v: SpatialField) -> SpatialField:
    _check(spec, v)
    return SpatialField(v.grid, spec.gradient(v.grid, v.values))


def eval_dissipation(spec: DissipationSpec, v: SpatialField) -> float:
    _check(spec, v)
    return float(spec.value(v.grid, v.values))


def grad_dissipation(spec: DissipationSpec, v: SpatialField) -> SpatialField:
    _check(spec, v)
    return SpatialField(v.grid, spec.gradient(v.grid, v.values))


# -- preset registry ----------------------------------------------------------


class Preset(NamedTuple):
    energy: EnergySpec
    dissipation: DissipationSpec
    kappa: int


def _wave():
    return EnergySpec((DerivPower(1, 2.0, 1.0),))


def _klein_gordon():
    return EnergySpec((DerivPower(1, 2.0, 1.0), DerivPower(0, 2.0, 1.0)))


def _biharmonic():
    return EnergySpec((DerivPower(2, 2.0, 1.0),))


def _nlw(p=4.0):
    return EnergySpec((DerivPower(1, 2.0, 1.0), DerivPower(0, p, 1.0)))


def _sine_gordon():
    return EnergySpec((DerivPower(1, 2.0, 1.0), CosinePotential(1.0)))


def _plaplace(p=4.0, q=None):
    terms = [DerivPower(1, p, 1.0)]
    if q is not None:
        terms.append(DerivPower(0, q, 1.0))
    return EnergySpec(tuple(terms))


def _beam(p=4.0, q=4.0):
    return EnergySpec((DerivPower(2, 2.0, 1.0), DerivPower(1, p, 1.0), DerivPower(0, q, 1.0)))


def _kirchhoff():
    return EnergySpec((KirchhoffQuartic(1.0),))


def _fractional(s=0.5, lam=0.0, p=4.0):
    if lam == 0:
        return EnergySpec((SobolevQuadratic(s, 1.0),))
    return EnergySpec((SobolevQuadratic(s, 1.0), DerivPower(0, p, lam)))


_BASE = {
    "wave": (_wave, "w'' = w_xx"),
    "klein-gordon": (_klein_gordon, "w'' = w_xx - w"),
    "biharmonic": (_biharmonic, "w'' = -w_xxxx"),
    "nlw": (_nlw, "w'' = w_xx - |w|^(p-2) w   (defocusing NLW, default p=4)"),
    "sine-gordon": (_sine_gordon, "w'' = w_xx - sin w"),
    "plaplace-wave": (_plaplace, "w'' = Delta_p w [- |w|^(q-2) w]   (quasilinear, default p=4)"),
    "beam": (_beam, "w'' = -w_xxxx + Delta_p w - |w|^(q-2) w   (vibrating beam, default p=q=4)"),
    "kirchhoff": (_kirchhoff, "w'' = (int |w_x|^2) w_xx"),
    "fractional-wave": (
        _fractional,
        "w'' = -(-Delta)^s w - lambda |w|^(p-2) w   (default s=0.5, lambda=0, p=4)",
    ),
}

_DAMPERS = {
    "telegraph-on-top-of": (((0, 1.0),), "adds -w'"),
    "strong-damping-on-top-of": (((1, 1.0),), "adds +w_xx'"),
    "full-damping-on-top-of": (((2, 1.0), (1, 1.0), (0, 1.0)), "adds -w_xxxx' + w_xx' - w'"),
}

_ALIASES = {
    "telegraph": "telegraph-on-top-of(wave)",
    "strong-damping": "strong-damping-on-top-of(wave)",
    "full-damping": "full-damping-on-top-of(wave)",
}

_CALL = re.compile(r"^\s*([a-z][a-z0-9-]*)\s*(?:\((.*)\))?\s*$")


def _split_args(s):
    args, depth, cur = [], 0, ""
    for ch in s:
        if ch == "," and depth == 0:
            args.append(cur.strip())
            cur = ""
            continue
        depth += ch == "("
        depth -= ch == ")"
        cur += ch
    if cur.strip():
        args.append(cur.strip())
    return args


def preset(name: str) -> Preset:
    """Look up a registered equation, e.g. ``"nlw(4)"`` or ``"telegraph-on-top-of(sine-gordon)"``."""
    name = _ALIASES.get(name.strip(), name)
    m = _CALL.match(name)
    if m is None:
        raise UnknownPresetError(f"malformed preset name {name!r}")
    head, inner = m.group(1), m.group(2)
    if head in _DAMPERS:
        if not inner:
            raise UnknownPresetError(f"{head} needs a base preset, e.g. {head}(wave)")
        base = preset(inner)
        return Preset(base.energy, base.dissipation + DissipationSpec(_DAMPERS[head][0]), 1)
    if head not in _BASE:
        raise UnknownPresetError(f"unknown preset {head!r}")
    builder = _BASE[head][0]
    try:
        args = [float(a) for a in _split_args(inner)] if inner else []
        energy = builder(*args)
    except (TypeError, ValueError) as exc:
        raise UnknownPresetError(f"bad arguments for preset {name!r}: {exc}") from None
    return Preset(energy, DissipationSpec(), 0)


def registry():
    """``(name, equation)`` pairs for every registered family."""
    rows = [(k, eq) for k, (_, eq) in _BASE.items()]
    rows += [(f"{k}(X)", eq) for k, (_, eq) in _DAMPERS.items()]
    return rows


# Instances exercised by the gradient-consistency suite.
GRADCHECK_PRESETS = (
    "wave",
    "klein-gordon",
    "biharmonic",
    "nlw(4)",
    "sine-gordon",
    "plaplace-wave(3)",
    "plaplace-wave(3,4)",
    "beam(3,4)",
    "kirchhoff",
    "fractional-wave(0.5,1,4)",
    "telegraph-on-top-of(nlw(4))",
    "strong-damping-on-top-of(nlw(4))",
    "full-damping-on-top-of(wave)",
)

