"""
Spatial operators and the energy catalog
========================================

Difference stencils, the spectral fractional Laplacian, and the values and
gradients of a few registered energies on a single Fourier mode.
"""

import numpy as np

from wide_solver import (
    SpatialField,
    SpatialGrid,
    diff,
    eval_dissipation,
    eval_energy,
    fractional_laplacian,
    grad_energy,
    preset,
    registry,
    sobolev_seminorm_sq,
)

# a periodic grid on [0, 2 pi] and the mode sin(x)
grid = SpatialGrid(2 * np.pi, 128)
u = SpatialField(grid, np.sin(grid.x))

# the central first difference is second order accurate
err = np.max(np.abs(diff(u, 1).values - np.cos(grid.x)))
print(f"max |D u - cos x| on N=128: {err:.2e}")

# fractional powers act on a single mode by multiplication
for s in (0.25, 0.5, 1.0):
    lam = fractional_laplacian(u, s).values[32] / u.values[32]
    print(f"(-Delta)^{s} sin x = {lam:.12f} sin x")

print(f"|sin x|_H1^2 = {sobolev_seminorm_sq(u, 1):.12f}   (pi = {np.pi:.12f})")

# every registered family, with the equation it realizes
for name, eq in registry():
    print(f"  {name:<28} {eq}")

# energies of sin(x): wave is pi/2, Kirchhoff pi^2/4
for name in ("wave", "klein-gordon", "sine-gordon", "kirchhoff", "nlw(4)"):
    print(f"G_{name}(sin x) = {eval_energy(preset(name).energy, u):.6f}")

# the wave gradient is the discrete -u_xx, i.e. sin(x) up to O(h^2)
g = grad_energy(preset("wave").energy, u)
print(f"max |grad G_wave - sin x| = {np.max(np.abs(g.values - u.values)):.2e}")

# dampers attach a quadratic dissipation and switch kappa on
p = preset("strong-damping-on-top-of(nlw(4))")
print(f"kappa = {p.kappa}, D(sin x) = {eval_dissipation(p.dissipation, u):.6f}")
