"""
A coherence certificate for the integers
========================================

For the comb on Z the certificate gives constants (C, r) such that every
exponential sum with frequencies in Z satisfies
``sup |P| <= 2 C sup_{|y| <= r} |P(y)|``. The constants do not depend on
the translation used to build them.
"""

import matplotlib.pyplot as plt
import numpy as np

from quasiwiener import Coset, Lattice, certify, inequality_trials, pair_from_comb

Z = Coset(Lattice.integer(1))
ts = np.array([[0.0], [1.3], [-2.7]])
cert = certify(lambda R: pair_from_comb(Z, 30.0, R), 0.5, 600.0, t_samples=ts)
print(f"C = {cert.C:.4f}, r = {cert.r:.4f}, interpolation residual {cert.interpolation_residual:.1e}")

rows = inequality_trials(cert, 40, np.random.default_rng(1), radius=10.0)
lhs = np.array([r[1] for r in rows])
rhs = np.array([r[2] for r in rows])
print("all trials satisfied:", all(r[3] for r in rows))

fig, ax = plt.subplots(figsize=(5, 4))
ax.loglog(lhs, rhs, "o", ms=4)
lim = [lhs.min() / 2, rhs.max() * 2]
ax.plot(lim, lim, "k--", lw=0.8)
ax.set_xlabel("sup of |P| over all translations")
ax.set_ylabel("2 C sup over the ball of radius r")
plt.tight_layout()
