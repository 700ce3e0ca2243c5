"""
Recovering a union of lattice cosets
====================================

Points from the integers together with a shifted copy of sqrt(2) Z are
split back into their two cosets. Random points have no such structure,
and detection reports a structured failure instead of a guess.
"""

import matplotlib.pyplot as plt
import numpy as np

from quasiwiener import DetectionFailure, detect_lattice_union
from quasiwiener.decompose import coset_labels

P = np.concatenate([np.arange(-20, 21.0), np.sqrt(2) * np.arange(-15, 16) + 1 / 3])
P = P[np.abs(P) <= 20].reshape(-1, 1)
cosets = detect_lattice_union(P)
for c in cosets:
    print(f"generator {c.lattice.basis[0, 0]:.12f}, shift {c.shift[0]:.12f}")

try:
    detect_lattice_union(np.random.default_rng(0).uniform(0, 10, (200, 2)))
except DetectionFailure as exc:
    print("random points:", exc)

labels = coset_labels(cosets, P)
fig, ax = plt.subplots(figsize=(8, 1.8))
for j in range(len(cosets)):
    on = labels == j
    ax.plot(P[on, 0], np.full(on.sum(), j), "o", ms=4, label=f"coset {j}")
ax.set_yticks([])
ax.legend(loc="upper right")
plt.tight_layout()
