"""Closed-form pairwise interaction energies.

These functions are the single definition of the model chemistry: grid-map
construction, the scoring backends, and the test oracles all derive from the
formulas here. They are written with NumPy ufuncs so they accept scalars or
arrays and work in float64 (grid build, oracles). The float32 hot-loop
variants inside the scoring backends mirror the exact operation sequences
documented in `scoring/`.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# Coulomb constant in kcal/mol per squared elementary charge per Angstrom.
ELEC_SCALE = 332.06363

# Sigmoidal distance-dependent dielectric (Mehler-Solmajer parametrization).
DIEL_A = -8.5525
DIEL_B = 78.4 - DIEL_A
DIEL_K = 7.7839
DIEL_LAMBDA = 0.003627

# Gaussian desolvation: width sigma (A) and charge-based solvation weight.
DESOLV_SIGMA = 3.6
DESOLV_DENOM = 2.0 * DESOLV_SIGMA * DESOLV_SIGMA
QASP = 0.01097

# Squared-distance floor applied before any reciprocal; removes the r -> 0
# singularity without branching.
MIN_R2 = 0.01
MIN_R = 0.1


@dataclass(frozen=True)
class TermWeights:
    """Dimensionless multipliers for the scoring-function terms.

    Defaults are the AutoDock4 free-energy coefficients.
    """

    vdw: float = 0.1662
    hbond: float = 0.1209
    elec: float = 0.1406
    desolv: float = 0.1322
    tors: float = 0.2983

    def __post_init__(self):
        for name in ("vdw", "hbond", "elec", "desolv", "tors"):
            v = getattr(self, name)
            if not np.isfinite(v) or v < 0:
                raise ValueError(f"term weight {name!r} must be finite and >= 0, got {v}")


def lj_coefficients(r_eq, eps):
    """12-6 coefficients (A, B) with the well minimum -eps at r_eq."""
    a12 = eps * r_eq**12
    b6 = 2.0 * eps * r_eq**6
    return a12, b6


def hb_coefficients(r_eq, eps):
    """12-10 coefficients (C, D) with the well minimum -eps at r_eq."""
    c12 = 5.0 * eps * r_eq**12
    d10 = 6.0 * eps * r_eq**10
    return c12, d10


def vdw_energy(r2, a12, b6):
    """12-6 Lennard-Jones energy A/r^12 - B/r^6 from squared distance."""
    inv = 1.0 / np.maximum(r2, MIN_R2)
    i3 = inv * inv * inv
    return a12 * (i3 * i3) - b6 * i3


def hbond_energy(r2, c12, d10):
    """12-10 hydrogen-bond well C/r^12 - D/r^10 from squared distance."""
    inv = 1.0 / np.maximum(r2, MIN_R2)
    i2 = inv * inv
    i3 = i2 * inv
    return c12 * (i3 * i3) - d10 * (i3 * i2)


def distance_dielectric(r):
    """Sigmoidal dielectric epsilon(r); ~1.3 at contact, -> 78.4 in bulk."""
    return DIEL_A + DIEL_B / (1.0 + DIEL_K * np.exp(-DIEL_LAMBDA * DIEL_B * np.asarray(r, dtype=np.float64)))


def electrostatic_energy(r, q_i, q_j):
    """Coulomb energy with the distance-dependent dielectric, r clamped at 0.1 A."""
    rc = np.maximum(np.asarray(r, dtype=np.float64), MIN_R)
    return ELEC_SCALE * q_i * q_j / (rc * distance_dielectric(rc))


def desolvation_coefficient(solpar_i, volume_i, q_i, solpar_j, volume_j, q_j):
    """Distance-independent prefactor of the pairwise desolvation term."""
    return (
        solpar_i * volume_j
        + solpar_j * volume_i
        + QASP * (np.abs(q_i) * volume_j + np.abs(q_j) * volume_i)
    )


def desolvation_energy(r2, solpar_i, volume_i, q_i, solpar_j, volume_j, q_j):
    """Volume-weighted Gaussian desolvation term from squared distance."""
    coeff = desolvation_coefficient(solpar_i, volume_i, q_i, solpar_j, volume_j, q_j)
    return coeff * np.exp(-np.asarray(r2, dtype=np.float64) / DESOLV_DENOM)
