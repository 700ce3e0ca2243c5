"""
Inverses in the Wiener algebra
==============================

An exponential sum that never vanishes has a reciprocal with absolutely
summable coefficients. When it does get small, the eps-inverse agrees with
the reciprocal where the modulus is at least eps and vanishes where it is
below eps/2.
"""

import matplotlib.pyplot as plt
import numpy as np

from quasiwiener import ExpSum, HolomorphicSymbol, compose, eps_inverse, torus_residuals

# two incommensurate frequencies, bounded away from zero
f = ExpSum([1.0, 0.4, -0.3j], [0.0, 1.0, np.sqrt(2)])
comp = compose(HolomorphicSymbol.reciprocal(), f)
g = comp.g
print(f"{len(g)} terms, W-norm {g.w_norm:.4f}, grid residual {comp.grid_residual:.1e}")

x = np.linspace(-10, 10, 2001).reshape(-1, 1)
print("max |f g - 1| on the line:", np.max(np.abs(f(x) * g(x) - 1)))

# a sum touching zero: only an eps-inverse exists
h = ExpSum([1.0, 0.95], [0.0, 0.7])
inv = eps_inverse(h, 0.5)
on, off = torus_residuals(h, inv, 0.5)
print(f"eps-inverse residuals: {on:.1e} where |h| >= eps, {off:.1e} where |h| <= eps/2")

fig, axes = plt.subplots(nrows=2, figsize=(7, 5), sharex=True)
axes[0].plot(x, np.abs(h(x)), label="|h|")
axes[0].axhline(0.5, color="gray", ls="--", lw=0.8)
axes[0].axhline(0.25, color="gray", ls=":", lw=0.8)
axes[0].legend()
axes[1].plot(x, np.abs(h(x) * inv.g(x)), label="|h g|")
axes[1].legend()
axes[1].set_xlabel("x")
plt.tight_layout()
