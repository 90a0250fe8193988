"""Stationary scattering solutions of the truncated tilted trap.

At each energy the interior of the trap carries the decaying-at-+infinity
Hermite solution and the linear exterior ramp carries an Airy
superposition alpha*Ai + beta*Bi.  Requiring the wavefunction to be
continuous and differentiable at the trap edge fixes (alpha, beta) up to
normalization; with the exterior normalized to alpha^2 + beta^2 = 1 the
squared interior amplitude

    response(E) = interior_amplitude(E)^2

peaks sharply at the quasi-bound levels and plays the role of a
density-of-states measure.  The matching phase atan2(beta, alpha) rises
by ~pi across each resonance, which is what the adaptive scan keys on:
phase jumps are detectable at any linewidth, while response maxima on a
uniform grid are not.

All matching arithmetic runs in exp-scaled Airy variables so that deep
barriers (scaling exponents of order 1e4) neither overflow nor lose the
phase step.  Off-resonance response values may underflow to zero as
floats; ``log_response`` stays exact.
"""

from __future__ import annotations

import math
from bisect import insort
from dataclasses import dataclass, field

import numpy as np

from . import specfun
from .errors import DomainError, NumericalError
from .potential import TrapSpec, trap_geometry

# Scan window may extend this far above the barrier top.
SCAN_CAP_MARGIN = 5.0
# Refinement trigger: wrapped phase step between neighboring samples.
PHASE_JUMP = math.pi / 8
# Bisection floor in energy; a jump persisting at this spacing is
# reported as an unresolved-narrow peak instead of an error.
RESOLUTION_FLOOR = 1e-12
# Floored sub-jumps closer than this many floors are one peak.
_MARKER_MERGE = 4.0
# Minimum log-prominence for a response maximum to count as a peak.
# Generous: barrier-top resonances near a window edge can sit on a tail
# that has only fallen to half the peak; the phase-rise gate below does
# the real discrimination, prominence only rejects float-level ripple.
_MIN_PROMINENCE = math.log(2.0)
# Minimum phase rise (radians) between the bracketing minima.
_MIN_PHASE_RISE = 0.3 * math.pi
# Dense local grid per resolved peak: span in FWHM units, point count.
PEAK_GRID_SPAN = 8.0
PEAK_GRID_POINTS = 96


def energy_cap(spec: TrapSpec) -> float:
    """Upper edge of the usable scan window for this trap.

    The interior solver is restricted to energies below the exterior
    shelf value size^2/8 (where the linear-ramp turning point leaves the
    exterior), and the matcher to barrier + SCAN_CAP_MARGIN.
    """

    shelf = 0.125 * spec.size * spec.size
    return min(shelf, trap_geometry(spec).edge_height + SCAN_CAP_MARGIN)


def interior_wave(spec: TrapSpec, energy: float, x: float | None = None):
    """Value and derivative of the interior solution, default at the edge.

    The interior solution of the tilted parabola V = x^2/2 + f*x at
    energy E is exp(-u^2/2) * H_nu(u) with u = x + f and degree
    nu = E + f^2/2 - 1/2; it decays as x -> +infinity for every real nu.
    Energies must lie below the exterior shelf size^2/8.
    """

    energy = float(energy)
    if not math.isfinite(energy):
        raise DomainError("energy must be finite")
    if energy >= 0.125 * spec.size * spec.size:
        raise DomainError(
            f"energy {energy:g} at or above the exterior shelf "
            f"{0.125 * spec.size * spec.size:g}; interior solution capped there"
        )
    if x is None:
        x = spec.edge
    u = float(x) + spec.tilt
    nu = energy + 0.5 * spec.tilt * spec.tilt - 0.5
    h = specfun.hermite(nu, u)
    dh = specfun.hermite_deriv(nu, u)
    g = math.exp(-0.5 * u * u)
    return g * h, g * (dh - u * h)


@dataclass(frozen=True)
class MatchResult:
    """Matched solution at one energy.

    ai_coeff, bi_coeff are the exterior Airy coefficients normalized to
    ai_coeff^2 + bi_coeff^2 = 1; interior_amplitude is the (nonnegative)
    interior prefactor under that normalization, and phase is
    atan2(bi_coeff, ai_coeff) at this single energy (unwrapping happens
    along a scan).  log_response = 2*ln(interior_amplitude) stays finite
    when the amplitude itself underflows.
    """

    energy: float
    ai_coeff: float
    bi_coeff: float
    interior_amplitude: float
    phase: float
    log_response: float

    @property
    def response(self) -> float:
        """Squared interior amplitude, the density-of-states proxy."""
        return math.exp(self.log_response)


def match_amplitude(spec: TrapSpec, energy: float) -> MatchResult:
    """Match interior and exterior solutions at the trap edge.

    Solves [Ai(s_e), Bi(s_e); sigma Ai'(s_e), sigma Bi'(s_e)] (alpha, beta)^T
    = a (phi, phi')^T where s(x) = sigma*(x - x_t) is the Airy coordinate
    of the linear exterior, sigma = (2 f)^(1/3) and
    x_t = (E - size^2/8)/f its turning point, then rescales to
    alpha^2 + beta^2 = 1 with a >= 0.  Requires tilt > 0 (a flat shelf
    has no open channel) and 0 < E < barrier + SCAN_CAP_MARGIN; the
    interior solver additionally caps E below size^2/8.
    """

    energy = float(energy)
    if spec.tilt == 0.0:
        raise DomainError("zero tilt: exterior is flat, no open channel to match")
    geom = trap_geometry(spec)
    if not 0.0 < energy < geom.edge_height + SCAN_CAP_MARGIN:
        raise DomainError(
            f"energy {energy:g} outside the matching window "
            f"(0, {geom.edge_height + SCAN_CAP_MARGIN:g})"
        )

    value, deriv = interior_wave(spec, energy)

    sigma = (2.0 * spec.tilt) ** (1.0 / 3.0)
    shelf = 0.125 * spec.size * spec.size
    turning = (energy - shelf) / spec.tilt
    s_edge = sigma * (spec.edge - turning)
    ai_e, aip_e, bi_e, bip_e, chi = specfun.airy_scaled(s_edge)

    # Scaled Wronskian check; the exp factors cancel identically.
    wronskian = ai_e * bip_e - aip_e * bi_e
    if not math.isfinite(wronskian) or abs(wronskian * math.pi - 1.0) > 1e-6:
        raise NumericalError(
            f"Airy Wronskian lost at s={s_edge:g}: pi*W = {wronskian * math.pi:g}"
        )

    # Cramer's rule against the true (unscaled) pair, with the exp(chi)
    # factors carried symbolically: alpha = exp(chi)*alpha_s,
    # beta = exp(-chi)*beta_s.
    slope = deriv / sigma
    alpha_s = math.pi * (value * bip_e - slope * bi_e)
    beta_s = math.pi * (slope * ai_e - value * aip_e)
    if alpha_s == 0.0 and beta_s == 0.0:
        raise NumericalError(f"trivial interior solution at E={energy:g}")

    with np.errstate(divide="ignore"):
        log_alpha = float(np.log(abs(alpha_s))) + chi
        log_beta = float(np.log(abs(beta_s))) - chi

    # response = 1/(alpha^2 + beta^2) under unit interior amplitude.
    log_response = -float(np.logaddexp(2.0 * log_alpha, 2.0 * log_beta))
    amplitude = math.exp(0.5 * log_response)

    half = 0.5 * log_response
    ai_coeff = math.copysign(math.exp(log_alpha + half), alpha_s) if alpha_s else 0.0
    bi_coeff = math.copysign(math.exp(log_beta + half), beta_s) if beta_s else 0.0
    phase = math.atan2(bi_coeff, ai_coeff)

    return MatchResult(
        energy=energy,
        ai_coeff=ai_coeff,
        bi_coeff=bi_coeff,
        interior_amplitude=amplitude,
        phase=phase,
        log_response=log_response,
    )


def exterior_wave(result: MatchResult, spec: TrapSpec, x: float) -> float:
    """Exterior wavefunction alpha*Ai(s(x)) + beta*Bi(s(x)) for x <= edge.

    Only valid where the plain Airy pair is representable; intended for
    recomposition tests near the edge, not for deep-barrier points.
    """

    if x > spec.edge:
        raise DomainError(f"x={x:g} is inside the trap (edge {spec.edge:g})")
    sigma = (2.0 * spec.tilt) ** (1.0 / 3.0)
    shelf = 0.125 * spec.size * spec.size
    turning = (result.energy - shelf) / spec.tilt
    ai, _, bi, _ = specfun.airy(sigma * (x - turning))
    scale = 1.0 / result.interior_amplitude
    return scale * (result.ai_coeff * ai + result.bi_coeff * bi)


@dataclass(frozen=True)
class Peak:
    """One detected resonance candidate in a scanned spectrum.

    resolved peaks carry a half-max FWHM estimate and the span of their
    dense local sample grid; unresolved-narrow peaks (phase jump still
    above pi/2 at the bisection floor) carry the floor bracket width as
    an upper bound on the linewidth.  territory spans the bracketing
    response minima: the energy range this peak dominates, which
    lineshape fits must not leave (the neighboring peak may be orders of
    magnitude taller).
    """

    center: float
    resolved: bool
    width_estimate: float
    window: tuple[float, float]
    territory: tuple[float, float]


@dataclass(frozen=True)
class Spectrum:
    """Adaptively sampled response spectrum of one trap.

    energies are strictly increasing; phases are unwrapped so that
    adjacent samples differ by less than pi/2 except across flagged
    unresolved-narrow peaks.  Peaks are ordered by center.
    """

    trap: TrapSpec
    energies: np.ndarray
    responses: np.ndarray
    log_responses: np.ndarray
    phases: np.ndarray
    peaks: tuple[Peak, ...]

    def __len__(self) -> int:
        return len(self.energies)

    def window_slice(self, low: float, high: float) -> slice:
        """Index slice of samples with low <= energy <= high."""
        lo = int(np.searchsorted(self.energies, low, side="left"))
        hi = int(np.searchsorted(self.energies, high, side="right"))
        return slice(lo, hi)

    def rows(self):
        """Iterate (energy, response, phase) triples in energy order."""
        yield from zip(self.energies, self.responses, self.phases)


def _wrap(delta: float) -> float:
    """Wrap a phase difference into (-pi, pi]."""
    return math.remainder(delta, 2.0 * math.pi)


def _unwrap(raw: np.ndarray) -> np.ndarray:
    out = np.empty_like(raw)
    if len(raw):
        out[0] = raw[0]
        for i in range(1, len(raw)):
            out[i] = out[i - 1] + _wrap(raw[i] - raw[i - 1])
    return out


class _Scan:
    """Mutable sample store for one adaptive scan."""

    def __init__(self, spec: TrapSpec):
        self.spec = spec
        self.energies: list[float] = []
        self.results: dict[float, MatchResult] = {}

    def sample(self, energy: float) -> MatchResult:
        found = self.results.get(energy)
        if found is None:
            found = match_amplitude(self.spec, energy)
            self.results[energy] = found
            insort(self.energies, energy)
        return found

    def arrays(self):
        e = np.array(self.energies)
        log_r = np.array([self.results[x].log_response for x in self.energies])
        raw = np.array([self.results[x].phase for x in self.energies])
        return e, log_r, _unwrap(raw)


def _refine(scan: _Scan, e_lo: float, e_hi: float, floor: float, markers: list):
    """Bisect [e_lo, e_hi] until phase steps drop below PHASE_JUMP.

    Intervals reaching the floor with a surviving jump are recorded in
    markers as (e_lo, e_hi, wrapped_step).
    """

    stack = [(e_lo, e_hi)]
    while stack:
        lo, hi = stack.pop()
        step = _wrap(scan.sample(hi).phase - scan.sample(lo).phase)
        if abs(step) <= PHASE_JUMP:
            continue
        if hi - lo <= floor:
            if abs(step) > PHASE_JUMP:
                markers.append((lo, hi, step))
            continue
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:  # spacing hit machine epsilon
            markers.append((lo, hi, step))
            continue
        stack.append((lo, mid))
        stack.append((mid, hi))


def _merge_markers(markers: list, floor: float) -> list[Peak]:
    """Cluster floored sub-jumps into unresolved-narrow peaks."""

    peaks = []
    for lo, hi, step in sorted(markers):
        if peaks and lo - peaks[-1][1] <= _MARKER_MERGE * floor:
            peaks[-1][1] = hi
            peaks[-1][2] += step
        else:
            peaks.append([lo, hi, step])
    out = []
    for lo, hi, total in peaks:
        if abs(total) > 0.5 * math.pi:
            out.append(
                Peak(
                    center=0.5 * (lo + hi),
                    resolved=False,
                    width_estimate=hi - lo,
                    window=(lo, hi),
                    territory=(lo, hi),
                )
            )
    return out


def _half_max_cross(e, log_r, i, direction, target):
    """Interpolated energy where log_r crosses target walking from i."""

    j = i
    while 0 <= j + direction < len(e) and log_r[j + direction] > target:
        j += direction
    k = j + direction
    if not 0 <= k < len(e):
        return e[j]  # ran off the sampled window; report its edge
    t = (target - log_r[j]) / (log_r[k] - log_r[j])
    return e[j] + t * (e[k] - e[j])


def _detect_resolved(e, log_r, phases, blocked):
    """Local response maxima with enough prominence and phase rise.

    blocked holds centers of unresolved-narrow peaks; maxima within one
    sample of those are skipped.  Returns (center, fwhm, lo, hi) tuples.
    """

    found = []
    for i in range(1, len(e) - 1):
        if not (log_r[i] > log_r[i - 1] and log_r[i] >= log_r[i + 1]):
            continue
        left = i
        while left > 0 and log_r[left - 1] <= log_r[left]:
            left -= 1
        right = i
        while right < len(e) - 1 and log_r[right + 1] <= log_r[right]:
            right += 1
        saddle = max(log_r[left], log_r[right])
        if log_r[i] - saddle < _MIN_PROMINENCE:
            continue
        if phases[right] - phases[left] < _MIN_PHASE_RISE:
            continue
        if any(abs(e[i] - b) < 64.0 * RESOLUTION_FLOOR for b in blocked):
            continue
        # Half-max level halfway to the higher bracketing saddle, in the
        # linear response; tiny background makes this ~ peak/2.
        half = log_r[i] + math.log(0.5 * (1.0 + math.exp(saddle - log_r[i])))
        lo = _half_max_cross(e, log_r, i, -1, half)
        hi = _half_max_cross(e, log_r, i, +1, half)
        found.append((e[i], hi - lo, lo, hi, e[left], e[right]))
    return found


def scan_spectrum(
    spec: TrapSpec,
    e_min: float,
    e_max: float,
    base_points: int = 160,
) -> Spectrum:
    """Scan the response over [e_min, e_max] with adaptive refinement.

    A uniform base grid is bisected wherever the wrapped phase step
    between neighbors exceeds pi/8, down to a floor of 1e-12 in energy;
    jumps surviving at the floor become unresolved-narrow peaks.  Each
    resolved peak then receives a dense uniform local grid spanning
    PEAK_GRID_SPAN half-widths on each side for later lineshape fitting.

    The base grid must be fine enough to separate neighboring
    resonances (one phase jump per interval); level spacing in this trap
    family is of order 1, so the default is ample for windows a few
    units wide.
    """

    if not (math.isfinite(e_min) and math.isfinite(e_max)):
        raise DomainError("scan window must be finite")
    if not 0.0 < e_min < e_max:
        raise DomainError(f"need 0 < e_min < e_max, got [{e_min:g}, {e_max:g}]")
    cap = energy_cap(spec)
    if e_max >= cap:
        raise DomainError(
            f"e_max {e_max:g} at or above the usable cap {cap:g} "
            f"for size={spec.size:g}, tilt={spec.tilt:g}"
        )
    if base_points < 2:
        raise DomainError("base_points must be at least 2")

    scan = _Scan(spec)
    base = np.linspace(e_min, e_max, base_points)
    for x in base:
        scan.sample(float(x))

    markers: list = []
    for lo, hi in zip(base[:-1], base[1:]):
        _refine(scan, float(lo), float(hi), RESOLUTION_FLOOR, markers)

    narrow = _merge_markers(markers, RESOLUTION_FLOOR)
    blocked = [p.center for p in narrow]

    # First detection pass on the refined grid, then a dense local grid
    # around each candidate so the fit window is well sampled.
    e, log_r, phases = scan.arrays()
    for center, width, _, _, _, _ in _detect_resolved(e, log_r, phases, blocked):
        width = max(width, 8.0 * RESOLUTION_FLOOR)
        lo = max(center - PEAK_GRID_SPAN * width, e_min)
        hi = min(center + PEAK_GRID_SPAN * width, e_max)
        for x in np.linspace(lo, hi, PEAK_GRID_POINTS):
            scan.sample(float(x))

    e, log_r, phases = scan.arrays()
    resolved = [
        Peak(
            center=c,
            resolved=True,
            width_estimate=w,
            window=(lo, hi),
            territory=(t_lo, t_hi),
        )
        for c, w, lo, hi, t_lo, t_hi in _detect_resolved(e, log_r, phases, blocked)
    ]

    responses = np.exp(log_r)
    peaks = tuple(sorted(resolved + narrow, key=lambda p: p.center))
    return Spectrum(
        trap=spec,
        energies=e,
        responses=responses,
        log_responses=log_r,
        phases=phases,
        peaks=peaks,
    )
