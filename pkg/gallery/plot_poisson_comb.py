"""
Dirac combs and their spectra
=============================

A shifted comb on a lattice has a comb on the dual lattice as its
transform, with unimodular phases. Pairing both sides with a Gaussian
reproduces the Poisson summation formula.
"""

import matplotlib.pyplot as plt
import numpy as np

from quasiwiener import Coset, Gaussian, Lattice, pair_from_comb, poisson_sums, verify_pairing

# comb on 2Z + 1/2, seen on both sides
coset = Coset(Lattice.scaled(2.0), [0.5])
pair = pair_from_comb(coset, 10.0, 8.0)

for sigma in (0.6, 1.0, 1.8):
    phi = Gaussian.standard(1, sigma, [0.3])
    print(f"sigma={sigma}: pairing residual {verify_pairing(pair, phi):.2e}")

# Poisson sums on a hexagonal lattice
hexa = Lattice(np.array([[1.0, 0.5], [0.0, np.sqrt(3) / 2]]))
sums = poisson_sums(Gaussian.standard(2, 0.9), hexa, 8.0)
print(f"lattice sum {sums.lattice_sum.real:.12f}, dual sum {sums.dual_sum.real:.12f}")

fig, axes = plt.subplots(nrows=2, figsize=(7, 4))
axes[0].stem(pair.time.points[:, 0], pair.time.masses.real)
axes[0].set_title("time side: unit masses on 2Z + 1/2")
spectrum = pair.freq.restrict(3.0)
y = spectrum.points[:, 0]
axes[1].stem(y, spectrum.masses.real, linefmt="C0-", markerfmt="C0o", label="real part")
axes[1].stem(y, spectrum.masses.imag, linefmt="C1-", markerfmt="C1s", label="imaginary part")
axes[1].set_title("frequency side: phases on Z/2")
axes[1].legend()
plt.tight_layout()
