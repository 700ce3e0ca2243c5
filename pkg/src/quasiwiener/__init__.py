"""Wiener-algebra tools for measures with discrete support and spectrum.

The package covers exponential sums and their algebra, lattices and combs,
windowed atomic measures, Fourier pairs with truncation bookkeeping, the
holomorphic calculus and eps-inverses in the Wiener algebra, lattice-coset
decomposition of crystalline measures and coherence certificates for
frequency sets.
"""

from .coherence import (
    CoherenceCertificate,
    build_certificate,
    certify,
    inequality_trials,
    select_U,
    verify_inequality,
)
from .decompose import (
    Decomposition,
    detect_lattice_union,
    factor_measure,
    pair_from_points,
    spectral_parts,
    synthesize,
)
from .errors import (
    BoundViolation,
    CertificationError,
    DetectionFailure,
    DimensionError,
    DomainGuardError,
    EnumerationCapError,
    QuasiWienerError,
    SingularLatticeError,
    WindowError,
)
from .expsum import ExpSum, combine, modulate, reduce_mod_dual, w_norm
from .fourier_pair import (
    FourierPair,
    add_pairs,
    convolve_bump,
    mass_sup_check,
    multiply_pair,
    pair_from_comb,
    pair_from_expsum,
    poisson_check,
    poisson_sums,
    scale_pair,
    schwartz_mass_report,
    verify_pairing,
)
from .lattice import Coset, Lattice, enumerate_in_ball
from .measure import (
    AtomicMeasure,
    comb,
    growth_fit,
    min_separation,
    pairing,
    translate,
    translation_bound,
)
from .testfunctions import BumpFunction, Gaussian
from .wiener_calculus import (
    FrequencyBasis,
    HolomorphicSymbol,
    compose,
    eps_inverse,
    find_basis,
    torus_residuals,
)

__version__ = "0.1.0"
