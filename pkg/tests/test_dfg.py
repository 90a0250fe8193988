"""Fermi-gas occupancy estimates: closed-form checks and the recorded notes."""

import math

import pytest

from atomprep.dfg import (
    FORMULA_NOTES,
    bcs_ground_occupation,
    pairing_gap,
    thermal_ground_occupation,
)
from atomprep.errors import DomainError


class TestPairingGap:
    def test_reference_attraction(self):
        # 0.5 * exp(pi / (2 * -0.3)), evaluated independently
        assert pairing_gap(-0.3) == pytest.approx(
            0.5 * math.exp(-math.pi / 0.6), rel=1e-14
        )
        assert pairing_gap(-0.3) == pytest.approx(0.002661, abs=1e-6)

    def test_vanishes_at_weak_attraction(self):
        assert pairing_gap(-1e-3) == 0.0  # exp underflows cleanly

    def test_unit_exponent(self):
        assert pairing_gap(-math.pi / 2.0) == pytest.approx(0.5 / math.e, rel=1e-14)

    def test_monotone_in_kf_a(self):
        # weaker attraction (k_F a closer to zero from below) -> smaller gap
        vals = [pairing_gap(k) for k in (-2.0, -1.0, -0.5, -0.3, -0.1)]
        assert all(a > b for a, b in zip(vals[:-1], vals[1:]))

    def test_domain(self):
        with pytest.raises(DomainError):
            pairing_gap(0.0)
        with pytest.raises(DomainError):
            pairing_gap(0.3)


class TestBcsOccupation:
    def test_no_pairing(self):
        assert bcs_ground_occupation(0.0) == 1.0

    def test_reference_gap(self):
        n = bcs_ground_occupation(0.002661)
        assert n == pytest.approx(1.0 - 1.770e-6, abs=2e-9)

    def test_unit_gap(self):
        assert bcs_ground_occupation(1.0) == pytest.approx(
            0.5 * (1.0 + 1.0 / math.sqrt(2.0)), rel=1e-14
        )

    def test_small_gap_expansion(self):
        # n(d) = 1 - d^2/4 + 3d^4/16 + ...; test to the d^4 scale
        for d in (1e-2, 3e-3, 1e-3, 1e-4):
            assert bcs_ground_occupation(d) == pytest.approx(
                1.0 - 0.25 * d * d, abs=max(0.25 * d**4, 5e-16)
            )

    def test_monotone_decreasing(self):
        vals = [bcs_ground_occupation(d) for d in (0.0, 0.01, 0.1, 0.5, 1.0)]
        assert all(a > b for a, b in zip(vals[:-1], vals[1:]))

    def test_domain(self):
        with pytest.raises(DomainError):
            bcs_ground_occupation(-0.1)


class TestThermalOccupation:
    def test_zero_temperature_limit(self):
        assert thermal_ground_occupation(0.0) == 1.0

    def test_reference_temperature(self):
        assert thermal_ground_occupation(0.1) == pytest.approx(
            1.0 - 4.54e-5, abs=1e-7
        )
        assert thermal_ground_occupation(0.1) == pytest.approx(
            1.0 / (math.exp(-10.0) + 1.0), rel=1e-15
        )

    def test_colder_point(self):
        # the formula value at t = 0.05 is 1 - 2.06e-9, far from 1 - 4e-5
        assert thermal_ground_occupation(0.05) == pytest.approx(
            1.0 - 2.06e-9, abs=1e-11
        )

    def test_monotone_decreasing(self):
        vals = [thermal_ground_occupation(t) for t in (0.02, 0.05, 0.1, 0.3, 1.0)]
        assert all(a > b for a, b in zip(vals[:-1], vals[1:]))

    def test_domain(self):
        with pytest.raises(DomainError):
            thermal_ground_occupation(-0.1)


def test_formula_notes_record_both_discrepancies():
    # commonly quoted magnitudes that the formulas do not reproduce are
    # recorded as notes, not silently adjusted
    assert len(FORMULA_NOTES) == 2
    thermal_note, bcs_note = FORMULA_NOTES
    assert "0.05" in thermal_note and "4e-5" in thermal_note
    assert "1.77e-6" in bcs_note and "4e-6" in bcs_note
