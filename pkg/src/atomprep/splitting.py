"""Eigenlevels of the spliced double well and adiabatic split planning.

The well pair shares one trapping frequency; the cusp between the two
parabolic halves rises as separation^2/8, so pulling the wells apart
turns one oscillator spectrum into near-degenerate left/right doublets.
A linear tilt breaks the degeneracy and decides which well the atom
follows.  Everything here is stationary: a three-point finite-difference
eigensolver on a hard-walled grid, a (separation, tilt) gap survey, a
widest-gap path search across that survey, and a ramp generator that
spends time where the gap is smallest (local adiabaticity, speed
proportional to gap^2).

Only one tilt sign is treated; the mirror problem (opposite
field-seeking state) is the reflection x -> -x, tilt -> -tilt of this
one and is not solved separately.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import eigh_tridiagonal

from .errors import ConfigurationError, DomainError, PathNotFoundError
from .potential import eval_double_well

# Default finite-difference spacing: the three-point stencil error per
# level is (h^2/24) <p^4>, about 1e-7..1e-6 for the lowest levels here.
DEFAULT_SPACING = 0.0015
# Hard walls at least this far beyond both well minima.
GRID_MARGIN = 8.0
# Coarsest spacing accepted; production solves should stay at 0.02 or
# below, but convergence-order checks need one octave above that.
MAX_SPACING = 0.04


@dataclass(frozen=True)
class GridSpec:
    """Uniform hard-walled solver grid: half width and spacing."""

    half_width: float
    spacing: float = DEFAULT_SPACING

    def __post_init__(self):
        if not (math.isfinite(self.half_width) and self.half_width > 0.0):
            raise ConfigurationError(f"bad half_width {self.half_width}")
        if not 0.0 < self.spacing <= MAX_SPACING:
            raise ConfigurationError(
                f"spacing must be in (0, {MAX_SPACING}], got {self.spacing}"
            )

    def points(self) -> np.ndarray:
        """Interior nodes; the walls themselves carry zero amplitude."""
        count = int(round(2.0 * self.half_width / self.spacing))
        return -self.half_width + self.spacing * np.arange(1, count)


def default_grid(separation: float, tilt: float) -> GridSpec:
    """Grid covering both (tilt-shifted) minima with the standard margin."""
    return GridSpec(half_width=0.5 * separation + abs(tilt) + GRID_MARGIN)


@dataclass(frozen=True)
class WellLevels:
    """Lowest eigenpairs of one double-well configuration.

    wavefunctions has one state per row, normalized under the
    grid-trapezoid inner product.
    """

    separation: float
    tilt: float
    grid: np.ndarray
    energies: np.ndarray
    wavefunctions: np.ndarray

    @property
    def gap(self) -> float:
        return float(self.energies[1] - self.energies[0])

    @property
    def ground_centroid(self) -> float:
        """Position expectation <x> of the ground state."""
        density = np.abs(self.wavefunctions[0]) ** 2
        return float(np.trapezoid(self.grid * density, self.grid))


def solve_double_well(
    separation: float,
    tilt: float,
    n_states: int = 2,
    grid_spec: GridSpec | None = None,
) -> WellLevels:
    """Lowest n_states of the spliced double well by finite differences.

    Second-order three-point kinetic stencil with hard walls; the
    default grid reaches GRID_MARGIN beyond both minima, which the
    convergence properties (h^2 scaling, wall insensitivity) validate.
    """

    if separation < 0.0:
        raise DomainError(f"separation must be nonnegative, got {separation}")
    if n_states < 1:
        raise DomainError("n_states must be at least 1")
    spec = grid_spec if grid_spec is not None else default_grid(separation, tilt)
    need = 0.5 * separation + abs(tilt) + GRID_MARGIN
    if spec.half_width < need - 1e-12:
        raise ConfigurationError(
            f"half_width {spec.half_width:g} leaves less than {GRID_MARGIN:g} "
            f"beyond the well minima (need {need:g})"
        )

    x = spec.points()
    if n_states > len(x):
        raise ConfigurationError("more states requested than grid points")
    h = spec.spacing
    diag = 1.0 / (h * h) + eval_double_well(separation, tilt, x)
    off = np.full(len(x) - 1, -0.5 / (h * h))
    energies, vecs = eigh_tridiagonal(
        diag, off, select="i", select_range=(0, n_states - 1)
    )
    # LAPACK returns unit l2 columns; rescale to the grid inner product.
    waves = (vecs / math.sqrt(h)).T.copy()
    # Fix the sign convention: positive integral weight.
    for row in waves:
        if np.trapezoid(row, x) < 0.0:
            row *= -1.0
    return WellLevels(
        separation=separation,
        tilt=tilt,
        grid=x,
        energies=energies,
        wavefunctions=waves,
    )


@dataclass(frozen=True)
class GapMap:
    """Gap survey over a (separation, tilt) grid.

    Arrays are indexed [i_separation, j_tilt]; failed points carry NaN
    entries and the error text in notes.
    """

    separations: np.ndarray
    tilts: np.ndarray
    e0: np.ndarray
    e1: np.ndarray
    gaps: np.ndarray
    centroids: np.ndarray
    notes: tuple[tuple[str, ...], ...]

    def rows(self):
        """Iterate (d, f, e0, e1, gap, centroid) in grid order.

        Failed cells show as NaN; the reason stays in notes.
        """
        for i, d in enumerate(self.separations):
            for j, f in enumerate(self.tilts):
                yield (
                    float(d),
                    float(f),
                    float(self.e0[i, j]),
                    float(self.e1[i, j]),
                    float(self.gaps[i, j]),
                    float(self.centroids[i, j]),
                )


def gap_map(
    d_range: tuple[float, float],
    f_range: tuple[float, float],
    nd: int,
    nf: int,
    spacing: float = 0.01,
) -> GapMap:
    """Survey gap and ground centroid over a (separation, tilt) grid.

    A deliberately coarser default spacing than solve_double_well's:
    the survey feeds path planning, where 1e-4-level gap accuracy is
    ample.  Per-point failures are recorded in notes, never raised.
    """

    if nd < 1 or nf < 1:
        raise DomainError("grid counts must be positive")
    if d_range[0] < 0.0 or d_range[1] < d_range[0] or f_range[1] < f_range[0]:
        raise DomainError(f"bad ranges {d_range}, {f_range}")
    seps = np.linspace(d_range[0], d_range[1], nd)
    tilts = np.linspace(f_range[0], f_range[1], nf)
    e0 = np.full((nd, nf), math.nan)
    e1 = np.full((nd, nf), math.nan)
    gaps = np.full((nd, nf), math.nan)
    cents = np.full((nd, nf), math.nan)
    notes: list[tuple[str, ...]] = []
    for i, d in enumerate(seps):
        row_notes = []
        for j, f in enumerate(tilts):
            try:
                spec = GridSpec(
                    half_width=0.5 * float(d) + abs(float(f)) + GRID_MARGIN,
                    spacing=spacing,
                )
                levels = solve_double_well(float(d), float(f), 2, spec)
            except Exception as exc:  # recorded in-map, sweep continues
                row_notes.append(f"{type(exc).__name__}: {exc}")
                continue
            e0[i, j] = levels.energies[0]
            e1[i, j] = levels.energies[1]
            gaps[i, j] = levels.gap
            cents[i, j] = levels.ground_centroid
            row_notes.append("ok")
        notes.append(tuple(row_notes))
    return GapMap(
        separations=seps,
        tilts=tilts,
        e0=e0,
        e1=e1,
        gaps=gaps,
        centroids=cents,
        notes=tuple(notes),
    )


def plan_split_path(
    survey: GapMap,
    d_target: float,
    min_gap: float,
    f_bias: float = 0.12,
) -> list[tuple[float, float]]:
    """Widest-gap path from separation 0 to d_target at the bias tilt.

    Nodes are survey grid points; moves increase the separation index by
    one (tilt index changing by at most one) or step the tilt index at
    fixed separation, so the separation never decreases.  The returned
    path maximizes the minimum gap encountered; if that bottleneck is
    below min_gap, PathNotFoundError reports it.
    """

    if d_target < 0.0:
        raise DomainError("d_target must be nonnegative")
    if survey.separations[0] > 1e-9:
        raise DomainError("survey must start at separation 0")
    if d_target > survey.separations[-1] + 1e-9:
        raise DomainError(
            f"survey covers separations up to {survey.separations[-1]:g}, "
            f"target {d_target:g} beyond it"
        )
    # March to the last survey node at or below the target, then append
    # the exact target point so the ramp ends where the caller asked.
    i_end = int(np.searchsorted(survey.separations, d_target + 1e-9) - 1)
    i_end = max(i_end, 0)
    j_bias = int(np.argmin(np.abs(survey.tilts - f_bias)))
    nd, nf = survey.gaps.shape

    if i_end == 0 and d_target <= survey.separations[0] + 1e-9:
        return [(float(survey.separations[0]), float(survey.tilts[j_bias]))]

    # Bottleneck shortest path (maximize the minimum node gap) by a
    # priority queue over (i, j) nodes; d monotone by construction.
    import heapq

    def node_gap(i, j):
        g = survey.gaps[i, j]
        return -math.inf if math.isnan(g) else float(g)

    best = np.full((nd, nf), -math.inf)
    prev: dict[tuple[int, int], tuple[int, int]] = {}
    start = (0, j_bias)
    best[start] = node_gap(*start)
    heap = [(-best[start], start)]
    while heap:
        neg, (i, j) = heapq.heappop(heap)
        width = -neg
        if width < best[i, j]:
            continue
        moves = [(i + 1, j), (i + 1, j - 1), (i + 1, j + 1), (i, j - 1), (i, j + 1)]
        for ni, nj in moves:
            if not (0 <= ni <= i_end and 0 <= nj < nf):
                continue
            cand = min(width, node_gap(ni, nj))
            if cand > best[ni, nj]:
                best[ni, nj] = cand
                prev[(ni, nj)] = (i, j)
                heapq.heappush(heap, (-cand, (ni, nj)))

    goal = (i_end, j_bias)
    bottleneck = best[goal]
    if not math.isfinite(bottleneck) or bottleneck < min_gap:
        raise PathNotFoundError(
            f"best path bottleneck gap {bottleneck:g} below requested {min_gap:g}",
            bottleneck_gap=float(bottleneck),
        )
    path = [goal]
    while path[-1] != start:
        path.append(prev[path[-1]])
    path.reverse()
    points = [
        (float(survey.separations[i]), float(survey.tilts[j])) for i, j in path
    ]
    if d_target > points[-1][0] + 1e-9:
        points.append((float(d_target), float(survey.tilts[j_bias])))
    return points


def path_gap(survey: GapMap, point: tuple[float, float]) -> float:
    """Survey gap at the grid node nearest to (separation, tilt)."""
    i = int(np.argmin(np.abs(survey.separations - point[0])))
    j = int(np.argmin(np.abs(survey.tilts - point[1])))
    return float(survey.gaps[i, j])


def gap_adaptive_ramp(
    survey: GapMap,
    path: list[tuple[float, float]],
    duration: float,
    samples: int = 400,
) -> list[tuple[float, float, float]]:
    """Timetable (t, separation, tilt) along a planned path.

    Progress speed along the path is proportional to the local gap
    squared (local-adiabaticity heuristic), then mapped through a
    smoothstep so the ramp starts and ends at rest.  The rows are dense
    enough for linear interpolation during propagation.
    """

    if duration <= 0.0:
        raise DomainError("duration must be positive")
    if len(path) < 2:
        d, f = path[0]
        return [(0.0, d, f), (duration, d, f)]
    if samples < len(path):
        raise DomainError("samples must be at least the path length")

    pts = np.asarray(path, dtype=float)
    # Arc position along the path in (d, f) space.
    seg = np.hypot(np.diff(pts[:, 0]), np.diff(pts[:, 1]))
    if np.any(seg == 0.0):
        raise DomainError("path repeats a waypoint")
    arc = np.concatenate(([0.0], np.cumsum(seg)))

    interp = lambda s: (  # noqa: E731  (local shorthand)
        float(np.interp(s, arc, pts[:, 0])),
        float(np.interp(s, arc, pts[:, 1])),
    )

    def local_gap(d, f):
        g = path_gap(survey, (d, f))
        if math.isnan(g):
            raise DomainError(f"path crosses a failed survey point at ({d:g}, {f:g})")
        return g

    # Pseudo-time along the arc: dp proportional to ds / gap^2, so equal
    # pseudo-time steps move slowly where the gap is small.
    s_fine = np.linspace(0.0, arc[-1], samples)
    inv = np.array([1.0 / local_gap(*interp(s)) ** 2 for s in s_fine])
    pseudo = np.concatenate(
        ([0.0], np.cumsum(0.5 * (inv[1:] + inv[:-1]) * np.diff(s_fine)))
    )
    # Uniform wall-clock times; progress through pseudo-time follows a
    # smoothstep, so the ramp also starts and ends at rest.
    times = np.linspace(0.0, duration, samples)
    u = times / duration
    progress = (u * u * (3.0 - 2.0 * u)) * pseudo[-1]
    s_of_t = np.interp(progress, pseudo, s_fine)
    rows = []
    for t, s in zip(times, s_of_t):
        d, f = interp(float(s))
        rows.append((float(t), d, f))
    return rows
