"""Command-line entry point.

Each pipeline is a subcommand writing CSV or JSON data files with a
run-manifest JSON beside them.  All computations are deterministic, so
re-running a subcommand with the same configuration reproduces the data
files byte for byte; only the manifest timestamp differs.

Exit codes: 0 success, 2 validation error, 3 numerical failure, 64 unknown
subcommand.
"""

from __future__ import annotations

import argparse
import datetime
import json
import math
import platform
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy

from . import __version__, culling, dfg, resonance, scattering, splitting, tdse, units
from .errors import ConfigurationError, DomainError, NumericalError
from .potential import TrapSpec

# 12 significant digits, scientific: reproducible diffs
FLOAT_FMT = "%.11e"

SUBCOMMANDS = (
    "spectrum",
    "resonances",
    "survival",
    "fidelity-map",
    "dfg-estimates",
    "split-gap",
    "split-fidelity",
    "units-convert",
)

_USAGE = (
    "usage: atomprep <subcommand> [options]\n"
    "subcommands: " + " | ".join(SUBCOMMANDS) + "\n"
    "run 'atomprep <subcommand> --help' for options\n"
)


@dataclass
class RunConfig:
    """Resolved parameters of one CLI run.

    Values come from hard defaults, then the --config JSON file, then
    explicit flags, later sources overriding earlier ones.
    """

    subcommand: str
    params: dict = field(default_factory=dict)
    out: Path = Path(".")
    fmt: str = "csv"
    plot: bool = False
    out_given: bool = False

    def __getitem__(self, key):
        return self.params[key]


# ---------------------------------------------------------------- output

def _fmt_cell(value) -> str:
    if isinstance(value, str):
        return value
    return FLOAT_FMT % float(value)


def write_csv(path: Path, header: str, rows) -> None:
    """Write rows under a single '#' header line naming columns and units."""
    with open(path, "w", newline="\n") as fh:
        fh.write("# " + header + "\n")
        for row in rows:
            fh.write(",".join(_fmt_cell(v) for v in row) + "\n")


def write_json(path: Path, document: dict) -> None:
    with open(path, "w", newline="\n") as fh:
        json.dump(document, fh, indent=2, sort_keys=True)
        fh.write("\n")


def write_manifest(out_path: Path, cfg: RunConfig, outputs, results,
                   started, t0) -> None:
    manifest = {
        "subcommand": cfg.subcommand,
        "inputs": {k: v for k, v in sorted(cfg.params.items())},
        "outputs": [str(p) for p in outputs],
        "results": results,
        "versions": {
            "atomprep": __version__,
            "python": platform.python_version(),
            "numpy": np.__version__,
            "scipy": scipy.__version__,
        },
        "started_at": started,
        "wall_seconds": round(time.perf_counter() - t0, 3),
    }
    path = out_path.with_name(out_path.stem + ".manifest.json")
    write_json(path, manifest)


def _plot_path(out: Path) -> Path:
    return out.with_name(out.stem + ".gp")


# ------------------------------------------------------------ config merge

def _load_config(path) -> dict:
    if path is None:
        return {}
    try:
        with open(path) as fh:
            raw = json.load(fh)
    except OSError as exc:
        raise ConfigurationError(f"cannot read config file {path}: {exc}")
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"config file {path} is not valid JSON: {exc}")
    if not isinstance(raw, dict):
        raise ConfigurationError(f"config file {path} must hold a JSON object")
    return {str(k).replace("-", "_"): v for k, v in raw.items()}


def _resolve(ns, config: dict, name: str, default=None, required=False):
    value = getattr(ns, name, None)
    if value is None:
        value = config.get(name, default)
    if value is None and required:
        raise ConfigurationError(f"missing required parameter --{name.replace('_', '-')}")
    return value


def _number(value, name: str) -> float:
    try:
        out = float(value)
    except (TypeError, ValueError):
        raise ConfigurationError(f"parameter {name} must be a number, got {value!r}")
    if not math.isfinite(out):
        raise ConfigurationError(f"parameter {name} must be finite, got {value!r}")
    return out


def _integer(value, name: str) -> int:
    num = _number(value, name)
    if num != int(num):
        raise ConfigurationError(f"parameter {name} must be an integer, got {value!r}")
    return int(num)


# ------------------------------------------------------------- subcommands

def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", default=None, help="JSON config file; flags override")
    parser.add_argument("--out", default=None, help="output file path")
    parser.add_argument("--format", dest="fmt", choices=("csv", "json"), default=None)
    parser.add_argument("--plot", action="store_true", default=None,
                        help="emit a gnuplot script beside the data file")


def _parser(name: str) -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog=f"atomprep {name}", allow_abbrev=False)
    _add_common(p)
    flags = {
        "spectrum": ("z", "f", "emin", "emax", "base-points"),
        "resonances": ("z", "f", "emin", "emax", "base-points"),
        "survival": ("z", "f", "emin", "emax", "base-points", "peak",
                     "tmax", "points", "window"),
        "fidelity-map": ("zmin", "zmax", "fmin", "fmax", "nz", "nf",
                         "residual", "workers"),
        "dfg-estimates": ("kfa", "t-over-tf"),
        "split-gap": ("dmin", "dmax", "fmin", "fmax", "nd", "nf", "spacing"),
        "split-fidelity": ("d-target", "f-bias", "duration", "min-gap",
                           "dmin", "dmax", "nd", "fmin", "fmax", "nf",
                           "samples", "dt", "sudden"),
        "units-convert": ("omega-hz", "mass", "moment-bohr", "length-um",
                          "time-ms", "gradient-gcm", "length-osc", "time-osc"),
    }[name]
    for flag in flags:
        if flag == "sudden":
            p.add_argument("--sudden", action="store_true", default=None,
                           help="replace the ramp by a single-step quench")
        elif flag == "mass":
            p.add_argument("--mass", default=None,
                           help="'li6' or a particle mass in kg")
        else:
            p.add_argument("--" + flag, default=None)
    return p


def _cmd_spectrum(cfg: RunConfig):
    spec = TrapSpec(_number(cfg["z"], "z"), _number(cfg["f"], "f"))
    sp = scattering.scan_spectrum(
        spec,
        _number(cfg["emin"], "emin"),
        _number(cfg["emax"], "emax"),
        base_points=_integer(cfg["base_points"], "base-points"),
    )
    out = cfg.out
    write_csv(out, "energy [hbar*omega], p_value [arb], phase [rad]", sp.rows())
    peaks = [
        {"center": pk.center, "width_estimate": pk.width_estimate,
         "resolved": pk.resolved}
        for pk in sp.peaks
    ]
    if cfg.plot:
        script = [
            f'set datafile separator ","',
            'set logscale y',
            'set xlabel "energy (hbar*omega)"',
            'set ylabel "P(E) (arb)"',
        ]
        for k, pk in enumerate(sp.peaks):
            script.append(
                f"set arrow {k + 1} from {FLOAT_FMT % pk.center}, graph 0 "
                f"to {FLOAT_FMT % pk.center}, graph 1 nohead dt 2"
            )
        script.append(f'plot "{out.name}" using 1:2 with lines title "P(E)"')
        _plot_path(out).write_text("\n".join(script) + "\n")
    print(f"wrote {out} ({len(sp)} samples, {len(peaks)} peaks)")
    return {"peaks": peaks, "samples": len(sp)}, [out]


def _cmd_resonances(cfg: RunConfig):
    spec = TrapSpec(_number(cfg["z"], "z"), _number(cfg["f"], "f"))
    sp = scattering.scan_spectrum(
        spec,
        _number(cfg["emin"], "emin"),
        _number(cfg["emax"], "emax"),
        base_points=_integer(cfg["base_points"], "base-points"),
    )
    rows, meta = [], []
    for k, pk in enumerate(sp.peaks):
        if pk.resolved:
            res = resonance.fit_lorentzian(sp, k)
        else:
            res = resonance.from_phase_only(sp, k)
        rows.append((res.e0, res.gamma, res.tau, res.gamma_phase,
                     res.fit_residual_lorentz, res.fit_residual_gauss))
        meta.append({"e0": res.e0, "gamma": res.gamma, "resolved": res.resolved})
    out = cfg.out
    write_csv(
        out,
        "e0 [hbar*omega], gamma [hbar*omega], tau [1/omega], "
        "gamma_phase [hbar*omega], residual_lorentz [rel], residual_gauss [rel]",
        rows,
    )
    print(f"wrote {out} ({len(rows)} resonances)")
    return {"resonances": meta}, [out]


def _cmd_survival(cfg: RunConfig):
    spec = TrapSpec(_number(cfg["z"], "z"), _number(cfg["f"], "f"))
    lo, hi = culling.scan_window(spec)
    if cfg["emin"] is not None:
        lo = _number(cfg["emin"], "emin")
    if cfg["emax"] is not None:
        hi = _number(cfg["emax"], "emax")
    sp = scattering.scan_spectrum(
        spec, lo, hi, base_points=_integer(cfg["base_points"], "base-points")
    )
    res = resonance.fit_lorentzian(sp, _integer(cfg["peak"], "peak"))
    tmax = (2.0 * res.tau if cfg["tmax"] is None
            else _number(cfg["tmax"], "tmax"))
    n = _integer(cfg["points"], "points")
    window = _number(cfg["window"], "window")
    times = np.linspace(0.0, tmax, n)
    s_exp = resonance.survival_exponential(res, times)
    s_spec = np.array(
        [resonance.survival_from_spectrum(spec, res, t, window=window)
         for t in times]
    )
    out = cfg.out
    write_csv(
        out,
        "time [1/omega], survival_exponential [prob], survival_spectral [prob]",
        zip(times, s_exp, s_spec),
    )
    print(f"wrote {out} ({n} times, tau = {res.tau:.6g})")
    return {"e0": res.e0, "gamma": res.gamma, "tau": res.tau,
            "tmax": float(tmax)}, [out]


def _cmd_fidelity_map(cfg: RunConfig):
    fmap = culling.fidelity_map(
        (_number(cfg["zmin"], "zmin"), _number(cfg["zmax"], "zmax")),
        (_number(cfg["fmin"], "fmin"), _number(cfg["fmax"], "fmax")),
        _integer(cfg["nz"], "nz"),
        _integer(cfg["nf"], "nf"),
        residual_target=_number(cfg["residual"], "residual"),
        workers=_integer(cfg["workers"], "workers"),
    )
    out = cfg.out
    outputs = [out]
    if cfg.fmt == "json":
        write_json(out, fmap.as_document())
    else:
        write_csv(
            out,
            "z [x0], f [hbar*omega/x0], gamma0 [hbar*omega], "
            "gamma1 [hbar*omega], ratio [tau0/tau1], t_hold [1/omega], "
            "log10_loss [1], status",
            fmap.rows(),
        )
        if cfg.plot:
            script = [
                'set datafile separator ","',
                'set xlabel "tilt f"',
                'set ylabel "trap size z"',
                'set cblabel "log10 ground-state loss"',
                f'splot "{out.name}" using 2:1:7 with points pt 5 ps 3 palette',
                "pause -1",
            ]
            _plot_path(out).write_text("\n".join(script) + "\n")
    n_ok = sum(1 for _ in fmap.ok_points())
    print(f"wrote {out} ({len(fmap.z_grid)}x{len(fmap.f_grid)} cells, {n_ok} ok)")
    return {"cells": len(fmap.z_grid) * len(fmap.f_grid), "ok": n_ok}, outputs


def _cmd_dfg(cfg: RunConfig):
    kfa = _number(cfg["kfa"], "kfa")
    t_rel = _number(cfg["t_over_tf"], "t-over-tf")
    gap = dfg.pairing_gap(kfa)
    occ_bcs = dfg.bcs_ground_occupation(gap)
    occ_thermal = dfg.thermal_ground_occupation(t_rel)
    lines = [
        f"pairing_gap(kf_a={kfa:g})            = {FLOAT_FMT % gap}  [E_F]",
        f"bcs_ground_occupation(gap)          = {FLOAT_FMT % occ_bcs}",
        f"thermal_ground_occupation(T/T_F={t_rel:g}) = {FLOAT_FMT % occ_thermal}",
    ]
    for note in dfg.FORMULA_NOTES:
        lines.append(f"note: {note}")
    print("\n".join(lines))
    doc = {"kf_a": kfa, "t_over_tf": t_rel, "pairing_gap": gap,
           "bcs_ground_occupation": occ_bcs,
           "thermal_ground_occupation": occ_thermal,
           "notes": list(dfg.FORMULA_NOTES)}
    outputs = []
    if cfg.out_given:
        write_json(cfg.out, doc)
        outputs.append(cfg.out)
    return doc, outputs


def _cmd_split_gap(cfg: RunConfig):
    survey = splitting.gap_map(
        (_number(cfg["dmin"], "dmin"), _number(cfg["dmax"], "dmax")),
        (_number(cfg["fmin"], "fmin"), _number(cfg["fmax"], "fmax")),
        _integer(cfg["nd"], "nd"),
        _integer(cfg["nf"], "nf"),
        spacing=_number(cfg["spacing"], "spacing"),
    )
    out = cfg.out
    write_csv(
        out,
        "d [x0], f [hbar*omega/x0], e0 [hbar*omega], e1 [hbar*omega], "
        "gap [hbar*omega], centroid [x0]",
        survey.rows(),
    )
    if cfg.plot:
        script = [
            'set datafile separator ","',
            'set xlabel "separation d (x0)"',
            'set ylabel "gap (hbar*omega)"',
            'set logscale y',
            f'plot "{out.name}" using 1:5 with points title "e1 - e0"',
        ]
        _plot_path(out).write_text("\n".join(script) + "\n")
    print(f"wrote {out} ({len(survey.separations)}x{len(survey.tilts)} cells)")
    return {"cells": len(survey.separations) * len(survey.tilts)}, [out]


def _cmd_split_fidelity(cfg: RunConfig):
    survey = splitting.gap_map(
        (_number(cfg["dmin"], "dmin"), _number(cfg["dmax"], "dmax")),
        (_number(cfg["fmin"], "fmin"), _number(cfg["fmax"], "fmax")),
        _integer(cfg["nd"], "nd"),
        _integer(cfg["nf"], "nf"),
    )
    d_target = _number(cfg["d_target"], "d-target")
    f_bias = _number(cfg["f_bias"], "f-bias")
    min_gap = _number(cfg["min_gap"], "min-gap")
    duration = _number(cfg["duration"], "duration")
    dt = _number(cfg["dt"], "dt")
    path = splitting.plan_split_path(survey, d_target, min_gap, f_bias=f_bias)
    if cfg.params.get("sudden"):
        ramp = [(0.0, 0.0, f_bias), (1e-6, d_target, f_bias)]
    else:
        ramp = splitting.gap_adaptive_ramp(
            survey, path, duration, samples=_integer(cfg["samples"], "samples")
        )
    fid = tdse.split_fidelity(ramp, dt=dt)
    bottleneck = min(
        splitting.path_gap(survey, node) for node in path
    )
    doc = {
        "fidelity": fid,
        "sudden": bool(cfg.params.get("sudden")),
        "d_target": d_target,
        "f_bias": f_bias,
        "duration": duration,
        "dt": dt,
        "min_gap": min_gap,
        "bottleneck_gap": bottleneck,
        "path_nodes": len(path),
    }
    write_json(cfg.out, doc)
    print(f"wrote {cfg.out} (fidelity = {fid:.8f})")
    return doc, [cfg.out]


_MASSES = {"li6": units.LITHIUM6_MASS}


def _cmd_units(cfg: RunConfig):
    omega = 2.0 * math.pi * _number(cfg["omega_hz"], "omega-hz")
    mass_arg = cfg["mass"] if cfg["mass"] is not None else "li6"
    if isinstance(mass_arg, str) and mass_arg.lower() in _MASSES:
        mass = _MASSES[mass_arg.lower()]
    else:
        mass = _number(mass_arg, "mass")
    u = units.unit_system(mass, omega)
    doc = {
        "omega_rad_per_s": omega,
        "mass_kg": mass,
        "oscillator_length_m": u.length_scale,
        "energy_scale_j": u.energy_scale,
        "time_scale_s": u.time_scale,
        "force_scale_n": u.force_scale,
    }
    lines = [
        f"oscillator length = {FLOAT_FMT % u.length_scale} m",
        f"energy scale      = {FLOAT_FMT % u.energy_scale} J",
        f"time scale        = {FLOAT_FMT % u.time_scale} s",
        f"force scale       = {FLOAT_FMT % u.force_scale} N",
    ]
    if cfg["length_um"] is not None:
        si = _number(cfg["length_um"], "length-um") * 1e-6
        doc["length_dimensionless"] = u.length_to_dimensionless(si)
        lines.append(
            f"length {cfg['length_um']} um  = "
            f"{FLOAT_FMT % doc['length_dimensionless']} x0"
        )
    if cfg["time_ms"] is not None:
        si = _number(cfg["time_ms"], "time-ms") * 1e-3
        doc["time_dimensionless"] = u.time_to_dimensionless(si)
        lines.append(
            f"time {cfg['time_ms']} ms  = "
            f"{FLOAT_FMT % doc['time_dimensionless']} trap units"
        )
    if cfg["gradient_gcm"] is not None:
        moment = units.BOHR_MAGNETON * (
            1.0 if cfg["moment_bohr"] is None
            else _number(cfg["moment_bohr"], "moment-bohr")
        )
        newtons = units.force_from_gradient(
            _number(cfg["gradient_gcm"], "gradient-gcm") * units.GAUSS_PER_CM,
            moment=moment,
        )
        doc["force_dimensionless"] = u.force_to_dimensionless(newtons)
        lines.append(
            f"gradient {cfg['gradient_gcm']} G/cm  = "
            f"{FLOAT_FMT % doc['force_dimensionless']} force units"
        )
    if cfg["length_osc"] is not None:
        doc["length_si_m"] = u.length_to_si(_number(cfg["length_osc"], "length-osc"))
        lines.append(f"length {cfg['length_osc']} x0  = "
                     f"{FLOAT_FMT % doc['length_si_m']} m")
    if cfg["time_osc"] is not None:
        doc["time_si_s"] = u.time_to_si(_number(cfg["time_osc"], "time-osc"))
        lines.append(f"time {cfg['time_osc']} trap units  = "
                     f"{FLOAT_FMT % doc['time_si_s']} s")
    print("\n".join(lines))
    outputs = []
    if cfg.out_given:
        write_json(cfg.out, doc)
        outputs.append(cfg.out)
    return doc, outputs


_HANDLERS = {
    "spectrum": _cmd_spectrum,
    "resonances": _cmd_resonances,
    "survival": _cmd_survival,
    "fidelity-map": _cmd_fidelity_map,
    "dfg-estimates": _cmd_dfg,
    "split-gap": _cmd_split_gap,
    "split-fidelity": _cmd_split_fidelity,
    "units-convert": _cmd_units,
}

_DEFAULT_OUT = {
    "spectrum": "spectrum.csv",
    "resonances": "resonances.csv",
    "survival": "survival.csv",
    "fidelity-map": "fidelity_map.csv",
    "dfg-estimates": "dfg_estimates.json",
    "split-gap": "split_gap.csv",
    "split-fidelity": "split_fidelity.json",
    "units-convert": "units_convert.json",
}

_DEFAULTS = {
    "spectrum": {"base_points": 160},
    "resonances": {"base_points": 160},
    "survival": {"base_points": 160, "peak": 0, "points": 200, "window": 60.0,
                 "emin": None, "emax": None, "tmax": None},
    "fidelity-map": {"residual": culling.RESIDUAL_DEFAULT, "workers": 1},
    "dfg-estimates": {"kfa": -0.3, "t_over_tf": 0.1},
    "split-gap": {"dmin": 0.0, "dmax": 5.0, "nd": 26, "nf": 5,
                  "fmin": 0.08, "fmax": 0.16, "spacing": 0.01},
    "split-fidelity": {"d_target": 4.82, "f_bias": 0.12, "duration": 400.0,
                       "min_gap": 0.05, "dmin": 0.0, "dmax": 5.0, "nd": 26,
                       "fmin": 0.08, "fmax": 0.16, "nf": 5, "samples": 400,
                       "dt": 0.005, "sudden": False},
    "units-convert": {"mass": "li6", "moment_bohr": None, "length_um": None,
                      "time_ms": None, "gradient_gcm": None,
                      "length_osc": None, "time_osc": None},
}

_REQUIRED = {
    "spectrum": ("z", "f", "emin", "emax"),
    "resonances": ("z", "f", "emin", "emax"),
    "survival": ("z", "f"),
    "fidelity-map": ("zmin", "zmax", "fmin", "fmax", "nz", "nf"),
    "dfg-estimates": (),
    "split-gap": ("fmin", "fmax"),
    "split-fidelity": (),
    "units-convert": ("omega_hz",),
}


def _build_config(name: str, ns: argparse.Namespace) -> RunConfig:
    config = _load_config(ns.config)
    params = {}
    names = set(_DEFAULTS[name]) | set(_REQUIRED[name])
    names |= {
        k.replace("-", "_")
        for k in vars(ns)
        if k not in ("config", "out", "fmt", "plot")
    }
    for key in sorted(names):
        params[key] = _resolve(
            ns, config, key,
            default=_DEFAULTS[name].get(key),
            required=key in _REQUIRED[name],
        )
    out = _resolve(ns, config, "out")
    out_given = out is not None
    fmt = _resolve(ns, config, "fmt", default="csv")
    if fmt not in ("csv", "json"):
        raise ConfigurationError(f"format must be csv or json, got {fmt!r}")
    if out is None:
        out = _DEFAULT_OUT[name]
        if fmt == "json" and out.endswith(".csv"):
            out = out[:-4] + ".json"
    plot = bool(_resolve(ns, config, "plot", default=False))
    return RunConfig(subcommand=name, params=params, out=Path(out),
                     fmt=fmt, plot=plot, out_given=out_given)


def run(argv) -> int:
    """Dispatch one CLI invocation; returns the process exit code."""
    argv = list(argv)
    if not argv or argv[0] in ("-h", "--help"):
        stream = sys.stdout if argv else sys.stderr
        stream.write(_USAGE)
        return 0 if argv else 64
    name = argv[0]
    if name not in _HANDLERS:
        sys.stderr.write(f"unknown subcommand: {name}\n{_USAGE}")
        return 64
    try:
        ns = _parser(name).parse_args(argv[1:])
    except SystemExit as exc:
        # argparse already printed its message; fold into our exit scheme
        return 0 if exc.code == 0 else 2
    started = datetime.datetime.now(datetime.timezone.utc).isoformat()
    t0 = time.perf_counter()
    try:
        cfg = _build_config(name, ns)
        results, outputs = _HANDLERS[name](cfg)
    except DomainError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 2
    except NumericalError as exc:
        sys.stderr.write(f"numerical failure: {exc}\n")
        return 3
    if outputs:
        write_manifest(outputs[0], cfg, outputs, results, started, t0)
    return 0


def main(argv=None) -> int:
    return run(sys.argv[1:] if argv is None else argv)


if __name__ == "__main__":
    sys.exit(main())
