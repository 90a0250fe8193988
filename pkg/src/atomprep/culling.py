"""Holding-time selection and the ground-state fidelity-loss map.

The culling step lowers the trap to a shallow shape, waits while unwanted
population tunnels out, then restores the depth.  For a trap shape (size,
tilt) the two lowest quasi-bound widths fix the whole budget: the excited
width sets the holding time needed to push the excited residual below a
target probability, the ground width sets the loss paid during that hold,
and their ratio alone bounds the attainable single-atom fidelity.

A sweep over (size, tilt) produces a loss map whose cells carry an explicit
status instead of clipped values: shapes whose first excited level sits
above the escape barrier are flagged out of range rather than scanned, and
per-cell failures are recorded without aborting the sweep.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, TrapShapeError, WidthUnresolvedError
from .potential import TrapSpec, trap_geometry
from .resonance import Resonance, fit_lorentzian
from .scattering import energy_cap, scan_spectrum
from .units import UnitSystem

RESIDUAL_DEFAULT = 1e-5

# Scan window for the two lowest peaks: start below the most tilted ground
# level the valid parameter region can produce, stop a fixed margin above
# the barrier edge so the broadest excited peak keeps background on its
# high side without dragging deeper structure into the fit windows.
SCAN_FLOOR = 0.02
SCAN_HEADROOM = 0.25

STATUS_OK = "ok"
STATUS_OUT_OF_RANGE = "out-of-range"
STATUS_ERROR = "error"

# Passed through reports; restoring the depth is modeled as a static
# endpoint, trusted while the lowered trap still holds this much energy.
RESTORE_DEPTH_THRESHOLD = 1.5


@dataclass(frozen=True)
class CullingPoint:
    """Lifetimes and fidelity budget of one trap shape.

    gamma0 and gamma1 are the fitted widths of the two lowest quasi-bound
    states, tau0_over_tau1 their lifetime ratio, t_hold the wait that
    brings the excited survival down to the residual target, and
    ground_loss the ground-state population lost over that wait.
    """

    size: float
    tilt: float
    gamma0: float
    gamma1: float
    tau0_over_tau1: float
    t_hold: float
    ground_loss: float
    log10_loss: float

    def __post_init__(self):
        if not (self.gamma0 > 0.0 and self.gamma1 > 0.0):
            raise DomainError("widths must be positive")
        if not self.tau0_over_tau1 >= 1.0:
            raise DomainError(
                f"ground state must outlive the excited state, got lifetime "
                f"ratio {self.tau0_over_tau1}"
            )
        if not 0.0 <= self.ground_loss <= 1.0:
            raise DomainError(f"ground_loss {self.ground_loss} outside [0, 1]")

    @property
    def fidelity(self) -> float:
        return 1.0 - self.ground_loss

    @property
    def first_order_loss(self) -> float:
        """Small-loss approximation gamma0 * t_hold.

        Satisfies first_order_loss * tau0_over_tau1 = -ln(residual) exactly,
        which the full exponential loss only approaches from below.
        """
        return self.gamma0 * self.t_hold


def excited_level_estimate(tilt: float) -> float:
    """Harmonic estimate of the first excited level, 3/2 shifted by the tilt."""
    return 1.5 - 0.5 * tilt * tilt


def excited_state_bound(spec: TrapSpec) -> bool:
    """Whether the estimated first excited level sits below the barrier top."""
    return trap_geometry(spec).edge_height >= excited_level_estimate(spec.tilt)


def scan_window(spec: TrapSpec) -> tuple[float, float]:
    """Energy window that brackets the two lowest resonances."""
    cap = energy_cap(spec)
    hi = trap_geometry(spec).edge_height + SCAN_HEADROOM
    # scan_spectrum requires e_max strictly below the usable cap
    hi = min(hi, cap * (1.0 - 1e-9))
    return SCAN_FLOOR, hi


def _assemble(size, tilt, gamma0, gamma1, residual_target) -> CullingPoint:
    t_hold = -math.log(residual_target) / gamma1
    ground_loss = -math.expm1(-gamma0 * t_hold)
    return CullingPoint(
        size=size,
        tilt=tilt,
        gamma0=gamma0,
        gamma1=gamma1,
        tau0_over_tau1=gamma1 / gamma0,
        t_hold=t_hold,
        ground_loss=ground_loss,
        log10_loss=math.log10(ground_loss),
    )


def culling_point(
    size: float, tilt: float, residual_target: float = RESIDUAL_DEFAULT
) -> CullingPoint:
    """Scan one trap shape and derive its holding time and fidelity loss.

    Runs the resonance scan over the two lowest peaks, fits both widths,
    and assembles the holding-time budget for the requested excited-state
    residual.

    Raises
    ------
    TrapShapeError
        If the scan does not yield two resolved resonances: the trap is
        too shallow (excited level above the barrier) or too deep (a width
        below the scan's resolution floor).
    DomainError
        If residual_target is outside (0, 0.1) or the trap parameters are
        invalid.
    """
    if not (0.0 < residual_target < 0.1):
        raise DomainError(
            f"residual_target must lie in (0, 0.1), got {residual_target}"
        )
    spec = TrapSpec(size, tilt)
    lo, hi = scan_window(spec)
    spectrum = scan_spectrum(spec, lo, hi)
    if len(spectrum.peaks) < 2:
        raise TrapShapeError(
            f"trap (size={size}, tilt={tilt}) shows {len(spectrum.peaks)} "
            f"resonance(s) in ({lo:.3g}, {hi:.3g}); need the two lowest"
        )
    try:
        r0: Resonance = fit_lorentzian(spectrum, 0)
        r1: Resonance = fit_lorentzian(spectrum, 1)
    except WidthUnresolvedError as exc:
        raise TrapShapeError(
            f"trap (size={size}, tilt={tilt}) has a width below the scan "
            f"resolution floor (upper bound {exc.width_upper_bound:.3g})"
        ) from exc
    return _assemble(size, tilt, r0.gamma, r1.gamma, residual_target)


@dataclass(frozen=True)
class FidelityMap:
    """Grid of culling points over trap size and tilt.

    points[i][j] corresponds to (z_grid[i], f_grid[j]) and is None wherever
    status[i][j] is not "ok".  notes carries the error message for every
    "error" cell, keyed by (i, j).
    """

    z_grid: np.ndarray
    f_grid: np.ndarray
    points: list
    status: list
    notes: dict
    residual_target: float

    def __post_init__(self):
        nz, nf = len(self.z_grid), len(self.f_grid)
        if len(self.points) != nz or any(len(r) != nf for r in self.points):
            raise DomainError("points matrix shape must match the grids")
        if len(self.status) != nz or any(len(r) != nf for r in self.status):
            raise DomainError("status matrix shape must match the grids")

    def ok_points(self):
        """Yield (i, j, CullingPoint) for every successfully scanned cell."""
        for i in range(len(self.z_grid)):
            for j in range(len(self.f_grid)):
                if self.status[i][j] == STATUS_OK:
                    yield i, j, self.points[i][j]

    def rows(self):
        """Yield per-cell rows: (z, f, gamma0, gamma1, ratio, t_hold,
        log10_loss, status), with NaN numerics for non-ok cells."""
        nan = float("nan")
        for i, z in enumerate(self.z_grid):
            for j, f in enumerate(self.f_grid):
                p = self.points[i][j]
                if p is None:
                    yield (float(z), float(f), nan, nan, nan, nan, nan,
                           self.status[i][j])
                else:
                    yield (float(z), float(f), p.gamma0, p.gamma1,
                           p.tau0_over_tau1, p.t_hold, p.log10_loss,
                           self.status[i][j])

    def as_document(self) -> dict:
        """JSON-ready document: grid metadata plus per-cell records."""
        cells = []
        for i, z in enumerate(self.z_grid):
            for j, f in enumerate(self.f_grid):
                cell = {"z": float(z), "f": float(f),
                        "status": self.status[i][j]}
                p = self.points[i][j]
                if p is not None:
                    cell.update(
                        gamma0=p.gamma0, gamma1=p.gamma1,
                        tau0_over_tau1=p.tau0_over_tau1, t_hold=p.t_hold,
                        ground_loss=p.ground_loss, log10_loss=p.log10_loss,
                    )
                note = self.notes.get((i, j))
                if note is not None:
                    cell["note"] = note
                cells.append(cell)
        return {
            "z_grid": [float(z) for z in self.z_grid],
            "f_grid": [float(f) for f in self.f_grid],
            "residual_target": self.residual_target,
            "cells": cells,
        }


def _point_task(args):
    """Evaluate one map cell; exceptions become data so sweeps never abort."""
    size, tilt, residual_target = args
    spec = TrapSpec(size, tilt)
    if not excited_state_bound(spec):
        return STATUS_OUT_OF_RANGE, None, None
    try:
        return STATUS_OK, culling_point(size, tilt, residual_target), None
    except (DomainError, ArithmeticError, RuntimeError) as exc:
        return STATUS_ERROR, None, f"{type(exc).__name__}: {exc}"


def fidelity_map(
    z_range: tuple[float, float],
    f_range: tuple[float, float],
    nz: int,
    nf: int,
    residual_target: float = RESIDUAL_DEFAULT,
    workers: int = 1,
) -> FidelityMap:
    """Sweep culling_point over a (size, tilt) grid.

    Cells whose estimated excited level is unbound are flagged out of range
    without scanning; cells where the scan or the fits fail carry an error
    status and the message, and the sweep always completes.  Results are
    assembled in grid order, so the output is identical for any worker
    count.

    Parameters
    ----------
    z_range, f_range : (float, float)
        Inclusive parameter ranges; every (z, f) combination must satisfy
        the trap validity constraint tilt < size/2.
    nz, nf : int
        Grid sizes, >= 1.
    residual_target : float
        Excited-state residual the holding time is chosen against.
    workers : int
        Process count for the sweep; 1 runs in-process.
    """
    if nz < 1 or nf < 1:
        raise DomainError(f"grid sizes must be >= 1, got {nz} x {nf}")
    if not (0.0 < residual_target < 0.1):
        raise DomainError(
            f"residual_target must lie in (0, 0.1), got {residual_target}"
        )
    z_grid = np.linspace(float(z_range[0]), float(z_range[1]), nz)
    f_grid = np.linspace(float(f_range[0]), float(f_range[1]), nf)
    # validate the whole grid up front: the worst case is smallest z, largest f
    for z in (z_grid[0], z_grid[-1]):
        for f in (f_grid[0], f_grid[-1]):
            TrapSpec(float(z), float(f))

    tasks = [
        (float(z), float(f), residual_target) for z in z_grid for f in f_grid
    ]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_point_task, tasks, chunksize=4))
    else:
        results = [_point_task(t) for t in tasks]

    points, status, notes = [], [], {}
    k = 0
    for i in range(nz):
        prow, srow = [], []
        for j in range(nf):
            st, pt, note = results[k]
            k += 1
            prow.append(pt)
            srow.append(st)
            if note is not None:
                notes[(i, j)] = note
        points.append(prow)
        status.append(srow)
    return FidelityMap(
        z_grid=z_grid,
        f_grid=f_grid,
        points=points,
        status=status,
        notes=notes,
        residual_target=residual_target,
    )


def hold_and_restore_report(point: CullingPoint, units: UnitSystem) -> dict:
    """SI summary of one culling point's hold-and-restore budget.

    Converts the holding time and both lifetimes to seconds and attaches
    the static restore-stage bookkeeping: the lowered trap's depth against
    the threshold below which the slow-lowering treatment stops being
    trusted.  No dynamics is simulated for the raise.
    """
    geo = trap_geometry(TrapSpec(point.size, point.tilt))
    tau0 = 1.0 / point.gamma0
    tau1 = 1.0 / point.gamma1
    return {
        "z": point.size,
        "f": point.tilt,
        "gamma0": point.gamma0,
        "gamma1": point.gamma1,
        "lifetime_ratio": point.tau0_over_tau1,
        "t_hold": point.t_hold,
        "t_hold_si": units.time_to_si(point.t_hold),
        "tau0": tau0,
        "tau0_si": units.time_to_si(tau0),
        "tau1": tau1,
        "tau1_si": units.time_to_si(tau1),
        "excited_residual": math.exp(-point.gamma1 * point.t_hold),
        "ground_loss": point.ground_loss,
        "fidelity": point.fidelity,
        "log10_loss": point.log10_loss,
        "trap_depth": geo.depth,
        "restore_depth_threshold": RESTORE_DEPTH_THRESHOLD,
        "depth_above_restore_threshold": geo.depth > RESTORE_DEPTH_THRESHOLD,
        "restore_note": (
            "restore stage modeled statically: the depth is raised after the "
            "hold with no extra loss booked while the lowered depth stays "
            "above the threshold"
        ),
    }
