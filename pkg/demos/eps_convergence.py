"""
Convergence as eps goes to zero
===============================

A warm-started sweep over a halving schedule of eps, with the space-time
distance to the exact solution and the fitted convergence rate.
"""

import numpy as np

from wide_solver import (
    ConstraintSet,
    ProblemSpec,
    SpatialField,
    SpatialGrid,
    SweepPlan,
    TimeGrid,
    compare,
    convergence_slope,
    modal_trajectory,
    preset,
    sweep,
)

grid = SpatialGrid(2 * np.pi, 64)
data = ConstraintSet(SpatialField(grid, np.sin(grid.x)), SpatialField(grid, np.zeros(64)))
plan = SweepPlan.geometric(0.4, 4)

for name in ("wave", "telegraph"):
    p = preset(name)
    problem = ProblemSpec(p.energy, p.dissipation, p.kappa, TimeGrid(1.0, 400), data, plan.schedule, name)
    # the continuum single-mode evolution is the oracle for linear presets
    oracle = modal_trajectory(p, data.w0, data.w1, problem.time, discrete=False)
    entries = sweep(plan, problem)
    errors = [compare(e.minimizer, oracle, 0.75).spacetime for e in entries]
    print(name)
    for e, err in zip(entries, errors):
        print(f"  eps={e.eps:<6g} iterations={e.stats.iterations:<3d} error={err:.5f}")
    print(f"  slope {convergence_slope(plan.schedule, errors):.3f}")
