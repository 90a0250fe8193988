"""Stationary-state machinery: interior solutions, edge matching, scans.

Oracles: closed-form harmonic solutions at zero tilt, direct Runge-Kutta
integration of the interior equation, and an independently constructed
bound-state proxy (hard wall at the outer classical turning point, where
the exterior ramp admits an exact Airy solution).
"""

import math

import numpy as np
import pytest
from scipy.integrate import solve_ivp
from scipy.optimize import brentq

from atomprep.errors import DomainError
from atomprep.potential import TrapSpec, trap_geometry
from atomprep.scattering import (
    energy_cap,
    exterior_wave,
    interior_wave,
    match_amplitude,
    scan_spectrum,
)
from atomprep.specfun import airy

FIG = TrapSpec(4.4, 0.5)


class TestInteriorWave:
    def test_zero_tilt_ground_is_gaussian(self):
        # E = 1/2 at f = 0: psi ~ exp(-x^2/2), log-derivative -x
        spec = TrapSpec(8.0, 0.0)
        for x in (-1.2, 0.3, 1.5):
            val, der = interior_wave(spec, 0.5, x)
            assert der / val == pytest.approx(-x, abs=1e-9)
        v1, _ = interior_wave(spec, 0.5, 0.5)
        v2, _ = interior_wave(spec, 0.5, 1.5)
        assert v2 / v1 == pytest.approx(math.exp(-1.0), rel=1e-9)

    def test_zero_tilt_first_excited(self):
        # E = 3/2 at f = 0: psi ~ x exp(-x^2/2), log-derivative 1/x - x
        spec = TrapSpec(8.0, 0.0)
        for x in (0.7, -1.3):
            val, der = interior_wave(spec, 1.5, x)
            assert der / val == pytest.approx(1.0 / x - x, rel=1e-9)

    def test_default_position_is_downhill_edge(self):
        got = interior_wave(FIG, 0.366)
        explicit = interior_wave(FIG, 0.366, FIG.edge)
        assert got == explicit

    def test_shooting_oracle(self):
        # integrate psi'' = (x^2 + 2 f x - 2E) psi from deep under the
        # uphill barrier down to the edge; compare log-derivatives
        e, f = 0.366, FIG.tilt

        def rhs(x, y):
            return [y[1], (x * x + 2.0 * f * x - 2.0 * e) * y[0]]

        x0 = 8.0
        kappa = math.sqrt(x0 * x0 + 2.0 * f * x0 - 2.0 * e)
        sol = solve_ivp(
            rhs,
            (x0, FIG.edge),
            [1.0, -kappa],
            rtol=1e-11,
            atol=1e-14,
            dense_output=True,
        )
        psi, dpsi = sol.y[0, -1], sol.y[1, -1]
        val, der = interior_wave(FIG, e, FIG.edge)
        assert der / val == pytest.approx(dpsi / psi, rel=1e-9)


class TestMatchAmplitude:
    @pytest.mark.parametrize("e", [0.1, 0.366, 0.8, 1.29, 1.5])
    def test_exterior_coefficients_on_unit_circle(self, e):
        m = match_amplitude(FIG, e)
        assert m.ai_coeff**2 + m.bi_coeff**2 == pytest.approx(1.0, abs=1e-12)

    @pytest.mark.parametrize("e", [0.2, 0.366, 1.1])
    def test_recomposition_continuous_at_edge(self, e):
        m = match_amplitude(FIG, e)
        inside, _ = interior_wave(FIG, e, FIG.edge)
        outside = exterior_wave(m, FIG, FIG.edge)
        assert outside == pytest.approx(inside, rel=1e-10)

    def test_response_is_exp_log_response(self):
        m = match_amplitude(FIG, 0.7)
        assert m.response == pytest.approx(math.exp(m.log_response), rel=1e-12)

    def test_on_resonance_response_dominates(self):
        on = match_amplitude(FIG, 0.366).response
        off = match_amplitude(FIG, 0.3).response
        assert on / off >= 1e3

    def test_far_tail_is_small_relative_to_peak(self):
        # ten widths off the ground resonance the response has fallen to
        # the percent scale of the peak (Lorentzian tail ~ 1/401)
        e0, gamma = 0.3655242, 1.6363e-3
        p0 = match_amplitude(FIG, e0).response
        for sgn in (-1.0, 1.0):
            tail = match_amplitude(FIG, e0 + sgn * 10.0 * gamma).response
            assert tail <= 0.02 * p0

    def test_exterior_wave_rejects_interior_points(self):
        m = match_amplitude(FIG, 0.7)
        with pytest.raises(DomainError):
            exterior_wave(m, FIG, FIG.edge + 0.5)


class TestScanSpectrum:
    def test_reference_trap_has_two_peaks(self, fig_spectrum):
        assert len(fig_spectrum.peaks) == 2
        g, x = fig_spectrum.peaks
        assert g.center == pytest.approx(0.366, abs=0.015)
        assert x.center == pytest.approx(1.29, abs=0.03)
        assert g.resolved and x.resolved

    def test_peak_metadata_nested(self, fig_spectrum):
        for pk in fig_spectrum.peaks:
            w_lo, w_hi = pk.window
            t_lo, t_hi = pk.territory
            assert t_lo <= w_lo < pk.center < w_hi <= t_hi
            assert pk.width_estimate > 0

    def test_samples_sorted_and_consistent(self, fig_spectrum):
        e = fig_spectrum.energies
        assert np.all(np.diff(e) > 0)
        assert len(fig_spectrum) == len(e)
        assert np.allclose(
            fig_spectrum.log_responses, np.log(fig_spectrum.responses), atol=1e-12
        )
        first = next(iter(fig_spectrum.rows()))
        assert first == (e[0], fig_spectrum.responses[0], fig_spectrum.phases[0])

    def test_window_slice(self, fig_spectrum):
        sl = fig_spectrum.window_slice(0.3, 0.45)
        e = fig_spectrum.energies[sl]
        assert e.min() >= 0.3 and e.max() <= 0.45
        assert len(e) > 50  # refinement concentrates samples near the peak

    def test_deep_trap_harmonic_ladder(self, deep_spectrum):
        # tilt f = 0.01 shifts each level by f^2/2 = 5e-5; centers stay
        # within 1e-3 of the harmonic ladder
        assert len(deep_spectrum.peaks) == 3
        for i, pk in enumerate(deep_spectrum.peaks):
            assert pk.center == pytest.approx(0.5 + i, abs=1e-3)

    def test_empty_window(self):
        sp = scan_spectrum(FIG, 0.55, 0.9)
        assert len(sp.peaks) == 0
        # no resonance: the scattering phase stays nearly flat
        assert np.max(np.abs(np.diff(sp.phases))) < 0.01

    def test_scan_above_cap_rejected(self):
        assert energy_cap(FIG) == pytest.approx(2.42, rel=1e-12)
        with pytest.raises(DomainError):
            scan_spectrum(FIG, 0.05, 5.0)

    def test_degenerate_window_rejected(self):
        with pytest.raises(DomainError):
            scan_spectrum(FIG, 0.9, 0.9)


class TestPhaseTheorem:
    def test_pi_rise_across_narrow_resonance(self, fig_spectrum):
        # Breit-Wigner: the scattering phase climbs by pi across a
        # resonance whose territory spans many widths
        pk = fig_spectrum.peaks[0]
        sl = fig_spectrum.window_slice(*pk.territory)
        phase = np.unwrap(fig_spectrum.phases[sl])
        rise = phase[-1] - phase[0]
        assert abs(math.pi - rise) < 0.05

    def test_barrier_top_resonance_rise_positive_but_truncated(self, fig_spectrum):
        # the upper resonance is within one width of the barrier top, so
        # its territory covers only ~1 width above center: the phase
        # rise is substantial but cannot complete the full pi
        pk = fig_spectrum.peaks[1]
        sl = fig_spectrum.window_slice(*pk.territory)
        phase = np.unwrap(fig_spectrum.phases[sl])
        rise = phase[-1] - phase[0]
        assert 1.5 < rise < math.pi + 0.05


class _Rescaled:
    """Spectrum view with responses multiplied by a smooth function."""

    def __init__(self, sp, fn):
        self.energies = sp.energies
        self.responses = sp.responses * fn(sp.energies)
        self.peaks = sp.peaks

    def window_slice(self, low, high):
        lo = int(np.searchsorted(self.energies, low, side="left"))
        hi = int(np.searchsorted(self.energies, high, side="right"))
        return slice(lo, hi)


def _fwhm_and_argmax(sp, idx):
    pk = sp.peaks[idx]
    sl = sp.window_slice(*pk.territory)
    e = sp.energies[sl]
    p = sp.responses[sl]
    i0 = int(np.argmax(p))
    half = 0.5 * (p[i0] + p.min())
    il = i0
    while il > 0 and p[il] > half:
        il -= 1
    ir = i0
    while ir < len(p) - 1 and p[ir] > half:
        ir += 1
    left = np.interp(half, [p[il], p[il + 1]], [e[il], e[il + 1]])
    right = np.interp(half, [p[ir], p[ir - 1]], [e[ir], e[ir - 1]])
    return right - left, e[i0]


class TestNormalizationInvariance:
    def test_smooth_rescale_leaves_peak_structure(self, fig_spectrum):
        # multiplying the response by a gentle linear-in-E factor must
        # not move argmax centers nor the FWHM ratio between peaks
        fn = lambda e: 1.0 + 0.02 * (e - 0.05) / 1.45  # noqa: E731
        scaled = _Rescaled(fig_spectrum, fn)
        w0a, c0a = _fwhm_and_argmax(fig_spectrum, 0)
        w1a, c1a = _fwhm_and_argmax(fig_spectrum, 1)
        w0b, c0b = _fwhm_and_argmax(scaled, 0)
        w1b, c1b = _fwhm_and_argmax(scaled, 1)
        assert c0b == c0a and c1b == c1a
        ratio_a, ratio_b = w1a / w0a, w1b / w0b
        assert abs(ratio_b - ratio_a) / ratio_a <= 1e-3


def _turning_point_wall_roots(spec, center, half_width):
    """Eigenvalues of the trap closed by a hard wall at the outer turning point.

    For x below the edge the ramp is linear, so the closed-problem
    solution is the Airy combination vanishing at the turning point;
    rooting the log-derivative match at the edge gives the bound levels
    with no discretization error.
    """
    geo = trap_geometry(spec)
    sigma = (2.0 * spec.tilt) ** (1.0 / 3.0)
    ai0, aip0, bi0, bip0 = airy(0.0)

    def mismatch(e):
        u_edge = sigma * (geo.edge_height - e) / spec.tilt
        pair = airy(u_edge)
        w = pair.ai * bi0 - pair.bi * ai0
        wp = pair.aip * bi0 - pair.bip * ai0
        val, der = interior_wave(spec, e, spec.edge)
        return der / val - sigma * wp / w

    es = np.linspace(center - half_width, center + half_width, 4001)
    vals = np.array([mismatch(e) for e in es])
    roots = []
    for i in range(len(es) - 1):
        a, b = vals[i], vals[i + 1]
        if np.isfinite(a) and np.isfinite(b) and a * b < 0:
            if min(abs(a), abs(b)) < 50.0:  # skip pole crossings
                roots.append(brentq(mismatch, es[i], es[i + 1], xtol=1e-15))
    return roots


class TestBoundStateProxy:
    @pytest.mark.parametrize(
        "z,f,e_min,e_max",
        [(4.4, 0.5, 0.05, 1.5), (6.0, 0.3, 0.1, 3.0)],
    )
    def test_wall_eigenvalues_match_resonance_centers(self, z, f, e_min, e_max):
        spec = TrapSpec(z, f)
        geo = trap_geometry(spec)
        sp = scan_spectrum(spec, e_min, e_max)
        assert sp.peaks
        checked = 0
        for pk in sp.peaks:
            width = pk.width_estimate
            if geo.edge_height - pk.center <= width:
                continue  # barrier-top resonance: no turning-point separation
            roots = _turning_point_wall_roots(
                spec, pk.center, max(5.0 * width, 1e-4)
            )
            assert roots, f"no wall eigenvalue near {pk.center}"
            best = min(roots, key=lambda r: abs(r - pk.center))
            assert abs(best - pk.center) <= 3.0 * width
            checked += 1
        assert checked >= 1
