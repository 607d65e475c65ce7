"""
Nonlinear presets against a leapfrog integrator
===============================================

For sine-Gordon and the defocusing quartic wave equation there is no closed
form, so the minimizer is compared with a fine-step leapfrog solution built
on the same spatial operators.
"""

import numpy as np

from wide_solver import (
    ConstraintSet,
    SpatialField,
    SpatialGrid,
    TimeGrid,
    WeightedFunctional,
    compare,
    energy_trace,
    leapfrog,
    minimize,
    preset,
)

grid = SpatialGrid(2 * np.pi, 64)
w0, w1 = SpatialField(grid, np.sin(grid.x)), SpatialField(grid, np.zeros(64))

for name in ("sine-gordon", "nlw(4)"):
    p = preset(name)
    oracle = leapfrog(p.energy, p.dissipation, w0, w1, 1e-3, 1.0)
    e = energy_trace(oracle, p.energy).total
    print(f"{name}: leapfrog energy drift {np.max(np.abs(e - e[0])) / e[0]:.1e}")
    for eps in (0.2, 0.1, 0.05):
        F = WeightedFunctional(eps, p.energy, p.dissipation, p.kappa, TimeGrid(1.0, 400))
        w, stats = minimize(F, ConstraintSet(w0, w1))
        c = compare(w, oracle, 0.5)
        print(f"  eps={eps:<5g} relative distance on [0, 0.5]: {c.relative:.4f}")
