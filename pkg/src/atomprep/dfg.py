"""Ground-level occupancy estimates for a weakly attractive degenerate Fermi gas.

All quantities are in Fermi units: energies in units of the Fermi energy,
temperatures in units of the Fermi temperature.  The estimates quantify how
close the lowest trap level is to unit occupancy before a single atom is
carved out of the cloud.

Two numeric facts worth keeping straight when comparing against commonly
quoted magnitudes (see FORMULA_NOTES; both are properties of the formulas
below and are deliberately left unreconciled):

* thermal_ground_occupation falls steeply with t: at t = 0.1 it is
  1 - 4.54e-5, while at t = 0.05 it is 1 - 2.06e-9.  A quoted depletion of
  4e-5 therefore corresponds to t = 0.1, not 0.05.
* at kf_a = -0.3 the weak-coupling gap is 0.00266, giving a pairing
  depletion of 1.77e-6; a quoted depletion of 4e-6 would need a gap near
  0.004.
"""

from __future__ import annotations

import math

from .errors import DomainError

FORMULA_NOTES = (
    "thermal occupancy 1/(exp(-1/t)+1): 1 - 4.54e-5 at t = 0.10 but "
    "1 - 2.06e-9 at t = 0.05; a 4e-5 depletion implies t = 0.1",
    "weak-coupling gap at kf_a = -0.3 is 2.661e-3, giving BCS depletion "
    "1.77e-6; a 4e-6 depletion would require a gap near 4e-3",
)


def pairing_gap(kf_a: float) -> float:
    """Weak-coupling pairing gap (units of Fermi energy) for attractive kf_a < 0.

    gap = 0.5 * exp(pi / (2 kf_a)).  The exponent is negative for
    attraction, so the gap vanishes as kf_a -> 0-.
    """
    if not (math.isfinite(kf_a) and kf_a < 0.0):
        raise DomainError(f"kf_a must be negative (attractive), got {kf_a}")
    return 0.5 * math.exp(math.pi / (2.0 * kf_a))


def bcs_ground_occupation(gap: float) -> float:
    """Zero-temperature occupation of the lowest level at given pairing gap.

    n = (1 + 1/sqrt(gap^2 + 1)) / 2, in (1/2, 1]; equals 1 at gap = 0 and
    decreases monotonically as pairing smears the Fermi surface.
    """
    if not (math.isfinite(gap) and gap >= 0.0):
        raise DomainError(f"gap must be >= 0, got {gap}")
    return 0.5 * (1.0 + 1.0 / math.sqrt(gap * gap + 1.0))


def thermal_ground_occupation(t_over_tf: float) -> float:
    """Fermi-Dirac occupancy of the lowest level at reduced temperature t.

    n = 1 / (exp(-1/t) + 1) for t > 0, in (1/2, 1); t = 0 returns the
    limit value exactly 1.
    """
    t = t_over_tf
    if not (math.isfinite(t) and t >= 0.0):
        raise DomainError(f"t_over_tf must be nonnegative, got {t}")
    if t == 0.0:
        return 1.0
    return 1.0 / (math.exp(-1.0 / t) + 1.0)
