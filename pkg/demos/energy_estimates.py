"""
Energy inequality, approximate energy and a priori bounds
=========================================================

Checks on the minimizers themselves: the physical energy stays below its
initial value, the approximate energy built with the averaging operator
decreases, and the a priori constants are reported for each eps.
"""

import numpy as np

from wide_solver import (
    ConstraintSet,
    SolveOptions,
    SpatialField,
    SpatialGrid,
    TimeGrid,
    WeightedFunctional,
    apriori_checks,
    approx_energy_trace,
    check_energy_inequality,
    check_F_monotone,
    energy_trace,
    minimize,
    preset,
)

grid = SpatialGrid(2 * np.pi, 64)
data = ConstraintSet(SpatialField(grid, np.sin(grid.x)), SpatialField(grid, np.zeros(64)))
window = 0.75

for name in ("wave", "telegraph"):
    p = preset(name)
    print(name)
    for eps in (0.4, 0.2, 0.1, 0.05):
        F = WeightedFunctional(eps, p.energy, p.dissipation, p.kappa, TimeGrid(1.0, 400))
        w, stats = minimize(F, data, opts=SolveOptions(tol=1e-10))
        et = check_energy_inequality(energy_trace(w, p.energy, p.dissipation, p.kappa), window)
        mono = check_F_monotone(approx_energy_trace(w, F, stats.converged), window)
        rep = apriori_checks(w, F, window)
        diss = "" if rep.dissipation is None else f" int D {rep.dissipation:.3f}"
        print(f"  eps={eps:<5g} E/E0 max {et.detail['max_ratio']:.5f}  F monotone {mono.passed}"
              f" (C_fit {mono.detail['C_fit']:.2g})  potential {rep.potential:.3f}"
              f" kinetic {rep.kinetic:.3f}{diss}")

# the kinetic constant grows toward its eps -> 0 value: large-eps minimizers
# move more slowly than the true solution
