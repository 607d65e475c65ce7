"""One-dimensional spatial grids, difference/spectral operators and discrete norms.

Two boundary conditions are supported:

``periodic``
    nodes ``x_i = i h`` with ``h = L / N``; node ``N`` aliases node ``0`` and
    is not stored.
``dirichlet``
    interior nodes only, ``x_i = (i + 1) h`` with ``h = L / (N + 1)``; the
    boundary values are identically zero and never stored.

Array-level kernels act on the last axis so that whole space-time blocks of
shape ``(layers, N)`` can be processed at once.  The :class:`SpatialField`
wrappers exist for the public, grid-checked operations.

Two families of difference operators live here.  :func:`diff` is the
second-order central stencil used to sample derivatives.  The *compact*
operators (forward difference for odd orders, the 3-point Laplacian for even
orders) are what the energy functionals are built from: their normal
products ``C_k^T C_k`` are the standard Laplacian powers, with no odd-even
decoupling, and they share one Fourier/sine eigenbasis.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import scipy.fft

from .errors import GridMismatchError, UnsupportedOperationError

BOUNDARY_CONDITIONS = ("periodic", "dirichlet")


@dataclass(frozen=True)
class SpatialGrid:
    length: float
    nodes: int
    bc: str = "periodic"

    def __post_init__(self):
        if self.bc == "dirichlet-zero":
            object.__setattr__(self, "bc", "dirichlet")
        if self.bc not in BOUNDARY_CONDITIONS:
            raise ValueError(f"unknown boundary condition {self.bc!r}")
        if not self.length > 0:
            raise ValueError("grid length must be positive")
        if int(self.nodes) != self.nodes or self.nodes < 4:
            raise ValueError("a grid needs an integer node count >= 4")
        object.__setattr__(self, "nodes", int(self.nodes))
        object.__setattr__(self, "length", float(self.length))

    @property
    def periodic(self) -> bool:
        return self.bc == "periodic"

    @property
    def h(self) -> float:
        if self.periodic:
            return self.length / self.nodes
        return self.length / (self.nodes + 1)

    @cached_property
    def x(self) -> np.ndarray:
        i = np.arange(self.nodes, dtype=float)
        if self.periodic:
            return i * self.h
        return (i + 1.0) * self.h

    # -- central stencils -------------------------------------------------

    def _pad(self, u, width):
        pad = [(0, 0)] * (u.ndim - 1) + [(width, width)]
        if self.periodic:
            return np.pad(u, pad, mode="wrap")
        return np.pad(u, pad)

    def central_diff(self, u, order):
        """Second-order central difference of ``u`` along the last axis."""
        u = np.asarray(u, dtype=float)
        if order not in (1, 2, 3, 4):
            raise UnsupportedOperationError(f"central difference of order {order} is not supported")
        p = self._pad(u, 2)
        h = self.h
        c = p[..., 2:-2]
        r1, l1 = p[..., 3:-1], p[..., 1:-3]
        r2, l2 = p[..., 4:], p[..., :-4]
        if order == 1:
            return (r1 - l1) / (2 * h)
        if order == 2:
            return ((r1 - c) - (c - l1)) / h**2
        if order == 3:
            return ((r2 - l2) - 2.0 * (r1 - l1)) / (2 * h**3)
        return ((r2 + l2) - 4.0 * (r1 + l1) + 6.0 * c) / h**4

    # -- compact (energy) stencils ----------------------------------------

    def forward(self, u):
        u = np.asarray(u, dtype=float)
        if self.periodic:
            return (np.roll(u, -1, axis=-1) - u) / self.h
        pad = [(0, 0)] * (u.ndim - 1) + [(1, 1)]
        return np.diff(np.pad(u, pad), axis=-1) / self.h

    def forward_adjoint(self, y):
        y = np.asarray(y, dtype=float)
        if self.periodic:
            return (np.roll(y, 1, axis=-1) - y) / self.h
        return -np.diff(y, axis=-1) / self.h

    def laplacian(self, u):
        """3-point Laplacian, ``-forward^T forward``."""
        return -self.forward_adjoint(self.forward(u))

    def compact_diff(self, u, order):
        if order == 0:
            return np.asarray(u, dtype=float)
        if order == 1:
            return self.forward(u)
        if order == 2:
            return self.laplacian(u)
        if order == 3:
            return self.forward(self.laplacian(u))
        if order == 4:
            return self.laplacian(self.laplacian(u))
        raise UnsupportedOperationError(f"compact difference of order {order} is not supported")

    def compact_diff_adjoint(self, y, order):
        if order == 0:
            return np.asarray(y, dtype=float)
        if order == 1:
            return self.forward_adjoint(y)
        if order == 2:
            return self.laplacian(y)
        if order == 3:
            return self.laplacian(self.forward_adjoint(y))
        if order == 4:
            return self.laplacian(self.laplacian(y))
        raise UnsupportedOperationError(f"compact difference of order {order} is not supported")

    # -- spectral machinery -----------------------------------------------

    def wavenumbers(self) -> np.ndarray:
        """Physical wavenumbers in the order of :meth:`to_modes`."""
        if self.periodic:
            k = np.arange(self.nodes // 2 + 1)
            return 2 * np.pi * k / self.length
        k = np.arange(1, self.nodes + 1)
        return np.pi * k / self.length

    def laplacian_symbol(self) -> np.ndarray:
        """Eigenvalues of ``-laplacian`` in the order of :meth:`to_modes`."""
        if self.periodic:
            k = np.arange(self.nodes // 2 + 1)
            return 4.0 / self.h**2 * np.sin(np.pi * k / self.nodes) ** 2
        k = np.arange(1, self.nodes + 1)
        return 4.0 / self.h**2 * np.sin(np.pi * k / (2 * (self.nodes + 1))) ** 2

    def to_modes(self, u):
        """Real-to-mode transform along the last axis (rfft or orthonormal DST-I)."""
        if self.periodic:
            return np.fft.rfft(u, axis=-1)
        return scipy.fft.dst(np.asarray(u, dtype=float), type=1, axis=-1, norm="ortho")

    def from_modes(self, c):
        if self.periodic:
            return np.fft.irfft(c, n=self.nodes, axis=-1)
        return scipy.fft.dst(c, type=1, axis=-1, norm="ortho")

    def spectral_power(self, u, s):
        """Apply the multiplier ``|xi|^(2 s)``; for dirichlet grids only integer ``s`` is allowed."""
        if not self.periodic and float(s) != int(s):
            raise UnsupportedOperationError("non-integer spectral powers need a periodic grid")
        xi = self.wavenumbers()
        mult = np.where(xi == 0, 0.0, np.abs(xi)) ** (2 * s)
        return self.from_modes(mult * self.to_modes(u))

    def mode_energies(self, u):
        """Per-mode contributions to ``h * sum(u**2)`` (Parseval weights included)."""
        c = self.to_modes(u)
        if self.periodic:
            n = self.nodes
            weight = np.full(c.shape[-1], 2.0)
            weight[0] = 1.0
            if n % 2 == 0:
                weight[-1] = 1.0
            return self.length * weight * np.abs(c / n) ** 2
        # orthonormal DST: sum(u^2) = sum(c^2)
        return self.h * np.abs(c) ** 2


@dataclass(frozen=True, eq=False)
class SpatialField:
    grid: SpatialGrid
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.shape != (self.grid.nodes,):
            raise ValueError(f"expected {self.grid.nodes} values, got shape {v.shape}")
        if not np.all(np.isfinite(v)):
            raise ValueError("field values must be finite")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @classmethod
    def from_function(cls, grid, fn):
        return cls(grid, fn(grid.x))

    def __add__(self, other):
        _check_same(self, other)
        return SpatialField(self.grid, self.values + other.values)

    def __sub__(self, other):
        _check_same(self, other)
        return SpatialField(self.grid, self.values - other.values)

    def __mul__(self, a):
        return SpatialField(self.grid, a * self.values)

    __rmul__ = __mul__


@dataclass(frozen=True, eq=False)
class SpectralField:
    """Fourier coefficients ``u_hat[k] = fft(u)[k] / N`` on a periodic grid."""

    grid: SpatialGrid
    coeffs: np.ndarray = field(repr=False)

    @classmethod
    def transform(cls, u: SpatialField) -> "SpectralField":
        if not u.grid.periodic:
            raise UnsupportedOperationError("Fourier coefficients need a periodic grid")
        return cls(u.grid, np.fft.fft(u.values) / u.grid.nodes)

    @property
    def wavenumbers(self):
        n = self.grid.nodes
        return 2 * np.pi * np.fft.fftfreq(n, d=1.0 / n) / self.grid.length

    def inverse(self) -> SpatialField:
        return SpatialField(self.grid, np.fft.ifft(self.coeffs * self.grid.nodes).real)


def _check_same(u, v):
    if u.grid != v.grid:
        raise GridMismatchError(f"fields live on different grids: {u.grid} vs {v.grid}")


def l2_inner(u: SpatialField, v: SpatialField) -> float:
    """Discrete ``\\int u v dx`` as ``h * sum(u * v)``."""
    _check_same(u, v)
    return float(u.grid.h * np.dot(u.values, v.values))


def diff(u: SpatialField, order: int) -> SpatialField:
    return SpatialField(u.grid, u.grid.central_diff(u.values, order))


def fractional_laplacian(u: SpatialField, s: float) -> SpatialField:
    """Spectral ``(-Delta)^s u`` with symbol ``|2 pi k / L|^(2 s)``."""
    if not u.grid.periodic:
        raise UnsupportedOperationError("the fractional Laplacian needs a periodic grid")
    if not 0 < s <= 1:
        raise ValueError("fractional order must lie in (0, 1]")
    return SpatialField(u.grid, u.grid.spectral_power(u.values, s))


def _check_order(grid, m):
    if m < 0:
        raise ValueError("Sobolev order must be nonnegative")
    if not grid.periodic and float(m) != int(m):
        raise UnsupportedOperationError("non-integer Sobolev orders need a periodic grid")


def sobolev_seminorm_sq(u: SpatialField, m: float) -> float:
    """Squared homogeneous ``H^m`` seminorm, computed spectrally."""
    _check_order(u.grid, m)
    xi = u.grid.wavenumbers()
    mult = np.where(xi == 0, 0.0 if m > 0 else 1.0, np.abs(xi) ** (2 * m))
    return float(np.sum(mult * u.grid.mode_energies(u.values)))


def neg_sobolev_norm(f: SpatialField, m: float) -> float:
    """Dual-norm surrogate ``(sum |f_k|^2 / (1 + |xi_k|^(2m)))^(1/2)``."""
    _check_order(f.grid, m)
    xi = f.grid.wavenumbers()
    return float(np.sqrt(np.sum(f.grid.mode_energies(f.values) / (1.0 + np.abs(xi) ** (2 * m)))))
