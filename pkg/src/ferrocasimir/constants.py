"""Physical constants and unit conversions.

Frequencies are carried as photon energies hbar*xi in eV, lengths in nm and
pressures in Pa.
"""

from __future__ import annotations

import math

HBAR_C_EV_NM = 197.3269804
K_B_EV_PER_K = 8.617333262e-5

# SI values used only by the static permeability (exact in the 2019 SI except MU_0).
K_B_J_PER_K = 1.380649e-23
MU_0 = 1.25663706212e-6
ELEMENTARY_CHARGE = 1.602176634e-19

# 1 eV/nm^3 expressed in Pa.
EV_PER_NM3_TO_PA = ELEMENTARY_CHARGE * 1e27


def thermal_energy_ev(temperature_k: float) -> float:
    return K_B_EV_PER_K * temperature_k


def perfect_conductor_pressure(ell: float) -> float:
    """Ideal-mirror Casimir pressure -pi^2 hbar c / (240 ell^4) in Pa (ell in nm)."""
    if ell <= 0:
        raise ValueError(f"separation must be positive, got {ell!r}")
    return -(math.pi**2) * HBAR_C_EV_NM / (240.0 * ell**4) * EV_PER_NM3_TO_PA
