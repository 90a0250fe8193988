"""Shared fixtures: the expensive scans and fits are computed once per session."""

import pytest

from atomprep.potential import TrapSpec
from atomprep.resonance import fit_lorentzian
from atomprep.scattering import scan_spectrum


@pytest.fixture(scope="session")
def fig_trap():
    """Reference shallow culling trap with two quasi-bound levels."""
    return TrapSpec(4.4, 0.5)


@pytest.fixture(scope="session")
def fig_spectrum(fig_trap):
    return scan_spectrum(fig_trap, 0.05, 1.5)


@pytest.fixture(scope="session")
def ground_res(fig_spectrum):
    return fit_lorentzian(fig_spectrum, 0)


@pytest.fixture(scope="session")
def excited_res(fig_spectrum):
    return fit_lorentzian(fig_spectrum, 1)


@pytest.fixture(scope="session")
def deep_spectrum():
    """Deep near-harmonic trap; widths sit below the resolution floor."""
    return scan_spectrum(TrapSpec(12.0, 0.01), 0.3, 3.0)
