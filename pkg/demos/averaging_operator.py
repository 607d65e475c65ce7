"""
The exponential averaging operator
==================================

``Af(s) = int_s^inf exp(-(t - s)) f(t) dt`` on a uniform grid, its square,
and the identity ``(Af)' = Af - f``.
"""

import numpy as np

from wide_solver import avg_op, avg_op2, avg_tail_bound
from wide_solver.diagnostics import derivative_identity_residual

ds = 0.05
s = ds * np.arange(801)
one = np.ones_like(s)

print(f"A1 at s=0: {avg_op(one, ds)[0]:.12f}, tail bound {avg_tail_bound(one, ds)[0]:.1e}")
a2 = avg_op2(one, ds)
print(f"A^2 1 at s=0: {a2[0]:.12f}")
print(f"iterated vs kernel A^2: {np.max(np.abs(a2 - avg_op2(one, ds, route='kernel'))):.1e}")
print(f"A t at s=10: {avg_op(s, ds)[200]:.6f}   (exact 11)")

# the derivative identity holds to second order in ds
prev = None
for h in (0.1, 0.05, 0.025):
    x = h * np.arange(int(20 / h) + 1)
    r = np.max(np.abs(derivative_identity_residual(2 + np.sin(x), h)))
    note = "" if prev is None else f"  order {np.log2(prev / r):.2f}"
    print(f"ds={h:<6g} residual {r:.2e}{note}")
    prev = r
