"""Command-line front end.

Subcommands ``modes``, ``micromotion``, ``cool``, ``estimate`` and ``sweep``
write CSV tables and a ``manifest.json`` into ``--out``. Exit status is 0 on
success, 1 on a numerical failure and 2 on a configuration error.
"""
import argparse
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from math import pi
from pathlib import Path

import numpy as np

from . import __version__
from .config import RunConfig
from .dynamics import DensityState, FockMode
from .errors import ConfigError, FitError, SympcoolError
from .io import config_hash, save_checkpoint, utc_now, write_csv, write_manifest
from .micromotion import ProbeBeam, default_theta_grid, fit_stray, spectrum_sweep
from .reduced import compare_with_full, cool, cooling_time_step
from .thermometry import (SidebandProbe, decoherence_estimates, ratio_to_occupation,
                          sideband_ratio, thermal_distribution)
from .trapmodel import RamanGeometry, find_equilibrium, lamb_dicke, normal_modes

EXIT_OK, EXIT_NUMERICAL, EXIT_CONFIG = 0, 1, 2


class Run:
    """Collects emitted files so the manifest lists exactly what was written."""

    def __init__(self, out_dir, command, cfg):
        self.out = Path(out_dir)
        self.out.mkdir(parents=True, exist_ok=True)
        self.command = command
        self.cfg = cfg
        self.started = utc_now()
        self.files = []
        self.lines = []

    def csv(self, name, header, rows):
        self.files.append(write_csv(self.out / name, header, rows))

    def json(self, name, doc):
        path = self.out / name
        path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
        self.files.append(path)

    def checkpoint(self, name, state):
        self.files.append(save_checkpoint(self.out / name, state))

    def say(self, text=""):
        self.lines.append(text)
        print(text)

    def finish(self, status="ok", error=None):
        if status != "ok":
            for f in self.files:
                f.unlink(missing_ok=True)
            self.files = []
        write_manifest(self.out, command=self.command,
                       config_digest=config_hash(self.cfg.document), version=__version__,
                       started=self.started, files=self.files, status=status, error=error)


def _hz(w):
    return w / (2 * pi)


def mode_table(cfg):
    """Rows of the mode table and the mode structure itself."""
    trap = cfg.trap_config()
    ms = normal_modes(trap, find_equilibrium(trap, cfg.stray()))
    geoms = {ion: RamanGeometry.perpendicular(sp.transition_wavelength)
             for ion, sp in (("reference", trap.reference), ("partner", trap.partner))}
    rows = []
    for m in ms:
        rows.append([m.index, m.label, _hz(m.frequency), *m.eigenvector,
                     lamb_dicke(m, "reference", geoms["reference"]),
                     lamb_dicke(m, "partner", geoms["partner"])])
    return rows, ms, trap


def cmd_modes(cfg, run, args):
    rows, ms, trap = mode_table(cfg)
    ref, par = trap.reference.name, trap.partner.name
    header = ["mode", "label", "frequency_hz"] + \
        [f"{ion}_{ax}" for ion in (ref, par) for ax in ("x1", "x2", "x3")] + \
        [f"eta_{ref}", f"eta_{par}"]
    run.csv("modes.csv", header, rows)
    com, st = ms["com"].frequency, ms["stretch"].frequency
    run.say(f"com_frequency_hz = {_hz(com):.6e}")
    run.say(f"stretch_frequency_hz = {_hz(st):.6e}")
    run.say(f"stretch_over_com = {st / com:.9f}")


def cmd_micromotion(cfg, run, args):
    trap = cfg.trap_config()
    m = cfg["micromotion"]
    ratio = args.ratio if args.ratio is not None else m["ratio"]
    points = args.points or m["grid_points"]
    probe = ProbeBeam(args.wavelength or m["probe_wavelength"])
    geom = RamanGeometry.perpendicular(m["raman_wavelength"])
    if args.fit:
        obs = _parse_fit(args.fit)
        try:
            fit = fit_stray(obs["shift"], obs["eta1"], trap, probe, geom, ion=m["ion"])
        except FitError as exc:
            run.say(f"fit failed: best residual {exc.residual:.3g}")
            raise
        run.json("fit.json", {"a_m": fit.stray.a, "theta_rad": fit.stray.theta,
                              "residual": fit.residual})
        run.say(f"a_m = {fit.stray.a:.6e}")
        run.say(f"theta_deg = {np.degrees(fit.stray.theta):.6f}")
        run.say(f"residual = {fit.residual:.3e}")
        return
    sweep = spectrum_sweep(trap, ratio, probe, geom, default_theta_grid(points), ion=m["ion"],
                           jobs=args.jobs)
    run.csv("micromotion_sweep.csv", ["theta_deg", "stretch_shift_Hz", "eta1"],
            zip(np.degrees(sweep.theta), sweep.stretch_shift, sweep.eta1))
    summary = sweep.summary()
    run.json("micromotion_summary.json", summary)
    for k, v in summary.items():
        run.say(f"{k} = {v:.6e}")


def _parse_fit(items):
    out = {}
    for item in items:
        key, sep, val = item.partition("=")
        if not sep or key not in ("shift", "eta1"):
            raise ConfigError("expected shift=<Hz> and eta1=<value>", field="--fit")
        try:
            out[key] = float(val)
        except ValueError:
            raise ConfigError(f"not a number: {val!r}", field=f"--fit {key}") from None
    if set(out) != {"shift", "eta1"}:
        raise ConfigError("both shift and eta1 are required", field="--fit")
    return out


def cooling_summary(cfg, name, dt=None):
    """Cooling run for one mode with its thermometry; returns (result, summary dict)."""
    c = cfg["cooling"]
    mode = cfg.fock_mode(name)
    schedule = cfg.cooling_schedule(name)
    nbar0 = cfg.mode_parameters(name)["nbar0"]
    rho0 = DensityState.from_populations(thermal_distribution(nbar0, mode.n_max).probabilities, 2)
    res = cool(rho0, schedule, cfg.level_scheme(), mode, cfg.geometry(),
               dt=dt or cooling_time_step(mode, c["points_per_period"]),
               pump_model=c["pump_model"], cluster_detunings=c["cluster_detunings"])
    r = sideband_ratio(res.distribution, SidebandProbe.blue_pi(mode.eta))
    nbar_r, p0_r = ratio_to_occupation(r)
    summary = {"mode": name, "p0": res.distribution.p0, "nbar": res.distribution.nbar,
               "sideband_ratio": r, "nbar_from_ratio": nbar_r, "p0_from_ratio": p0_r,
               "photons_last_cycle": res.log[-1].photons}
    return res, summary


def cmd_cool(cfg, run, args):
    if args.validate_full:
        _validate_full(cfg, run)
        return
    names = ("com", "stretch") if args.mode == "both" else (args.mode,)
    for name in names:
        res, s = cooling_summary(cfg, name)
        mode = cfg.fock_mode(name)
        fit = thermal_distribution(s["nbar_from_ratio"], mode.n_max).probabilities
        run.csv(f"histogram_{name}.csv", ["n", "P_n_simulated", "P_n_thermal_fit"],
                zip(range(mode.dim), res.distribution.probabilities, fit))
        run.csv(f"cycles_{name}.csv", ["cycle", "nbar", "P0", "photons"],
                ((c.cycle, c.nbar, c.p0, c.photons) for c in res.log))
        run.checkpoint(f"state_{name}.bin", res.state)
        for k, v in s.items():
            run.say(f"{name}.{k} = {v}" if isinstance(v, str) else f"{name}.{k} = {v:.6f}")


def validation_setup(cfg):
    v = cfg["validation"]
    scheme = cfg.level_scheme()
    scheme = scheme.with_detuning(v["detuning_linewidths"] * scheme.linewidth)
    p = cfg.mode_parameters(v["mode"])
    mode = FockMode(p["frequency"], p["eta"], v["n_max"])
    rabi = v["rabi"]
    # red-sideband pi time at these couplings
    duration = 2 * pi * scheme.detuning / (mode.eta * rabi ** 2)
    fastest = max(abs(scheme.detuning) + 4 * abs(scheme.zeeman) / 3 + mode.omega, rabi)
    return scheme, mode, rabi, duration, 1.0 / (v["steps_per_radian"] * fastest)


def _validate_full(cfg, run):
    scheme, mode, rabi, duration, dt = validation_setup(cfg)
    cmp = compare_with_full(scheme, mode, rabi, duration, cfg["validation"]["nbar0"],
                            cfg.geometry(), dt)
    rows = []
    for name, dist in cmp.trace_distance.items():
        rows.append([name, dist, cmp.excited_population, cmp.photons_full,
                     cmp.photons_reduced[name], cmp.duration, cmp.full_steps])
        run.say(f"{name}.trace_distance = {dist:.6f}")
        run.say(f"{name}.photons_reduced = {cmp.photons_reduced[name]:.6f}")
    run.say(f"excited_population = {cmp.excited_population:.6f}")
    run.say(f"photons_full = {cmp.photons_full:.6f}")
    run.csv("validation.csv", ["detuning_model", "trace_distance", "excited_population",
                               "photons_full", "photons_reduced", "duration_s", "full_steps"],
            rows)


def estimate_report(cfg, eta=None):
    p = cfg.decoherence_params(eta)
    e = decoherence_estimates(p)
    return {"eta": p.eta, "tau_pi_s": e.tau_pi, "R_SE_per_s": e.rate,
            "P_SE": e.probability, "P_SE_minus_R_SE_tau_pi": e.probability - e.rate * e.tau_pi}


def cmd_estimate(cfg, run, args):
    rep = estimate_report(cfg, args.eta)
    run.json("estimate.json", rep)
    for k, v in rep.items():
        run.say(f"{k} = {v:.6e}")


def _sweep_point(job):
    target, doc, parameter, value, mode = job
    cfg = RunConfig.from_dict(doc).with_override(parameter, value)
    if target == "cool":
        _, s = cooling_summary(cfg, mode)
        return [s["p0"], s["nbar"], s["sideband_ratio"], s["photons_last_cycle"]]
    if target == "estimate":
        r = estimate_report(cfg)
        return [r["tau_pi_s"], r["R_SE_per_s"], r["P_SE"]]
    rows, ms, _ = mode_table(cfg)
    return [_hz(ms["com"].frequency), _hz(ms["stretch"].frequency)]


SWEEP_COLUMNS = {"cool": ["P0", "nbar", "sideband_ratio", "photons_last_cycle"],
                 "estimate": ["tau_pi_s", "R_SE_per_s", "P_SE"],
                 "modes": ["com_frequency_hz", "stretch_frequency_hz"]}


def cmd_sweep(cfg, run, args):
    s = cfg["sweep"]
    target = args.target or s["target"]
    parameter = args.param or s["parameter"]
    values = [float(v) for v in args.values.split(",")] if args.values else s["values"]
    if not values:
        raise ConfigError("no sweep values given", field="sweep.values")
    if target not in SWEEP_COLUMNS:
        raise ConfigError(f"unknown target {target!r}", field="sweep.target")
    jobs = [(target, cfg.document, parameter, v, args.mode or s["mode"]) for v in values]
    for j in jobs[:1]:
        RunConfig.from_dict(j[1]).with_override(parameter, j[3])
    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            results = list(pool.map(_sweep_point, jobs))
    else:
        results = [_sweep_point(j) for j in jobs]
    run.csv("sweep.csv", [parameter] + SWEEP_COLUMNS[target],
            ([v] + r for v, r in zip(values, results)))
    run.say(f"{len(values)} points written to sweep.csv")


COMMANDS = {"modes": cmd_modes, "micromotion": cmd_micromotion, "cool": cmd_cool,
            "estimate": cmd_estimate, "sweep": cmd_sweep}


def build_parser():
    p = argparse.ArgumentParser(prog="sympcool", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON configuration file (defaults if omitted)")
    common.add_argument("--out", default="out", help="output directory")
    common.add_argument("--jobs", type=int, default=1, help="worker processes")
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("modes", parents=[common], help="equilibrium, normal modes, Lamb-Dicke table")
    m = sub.add_parser("micromotion", parents=[common], help="stray-field spectrum sweep or fit")
    m.add_argument("--ratio", type=float, help="sideband/carrier fluorescence ratio R")
    m.add_argument("--wavelength", type=float, help="probe wavelength in m")
    m.add_argument("--points", type=int, help="angle grid size")
    m.add_argument("--fit", nargs=2, metavar="KEY=VALUE",
                   help="fit (a, theta) to shift=<Hz> eta1=<value>")
    c = sub.add_parser("cool", parents=[common], help="Raman sideband cooling simulation")
    c.add_argument("--mode", choices=("com", "stretch", "both"), default="both")
    c.add_argument("--validate-full", action="store_true",
                   help="compare reduced and full models over one pulse")
    e = sub.add_parser("estimate", parents=[common], help="qubit spontaneous-emission estimate")
    e.add_argument("--eta", type=float, help="Lamb-Dicke parameter of the cooled mode")
    s = sub.add_parser("sweep", parents=[common], help="scan one configuration value")
    s.add_argument("--target", choices=tuple(SWEEP_COLUMNS))
    s.add_argument("--param", help="dotted configuration key, e.g. raman.rabi_over_2pi_hz")
    s.add_argument("--values", help="comma-separated values")
    s.add_argument("--mode", choices=("com", "stretch"))
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    run = None
    try:
        if args.jobs < 1:
            raise ConfigError("must be at least 1", field="--jobs")
        cfg = RunConfig.load(args.config) if args.config else RunConfig.from_dict({})
        run = Run(args.out, args.command, cfg)
        COMMANDS[args.command](cfg, run, args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        if run is not None:
            run.finish("config_error", str(exc))
        return EXIT_CONFIG
    except SympcoolError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        if run is not None:
            run.finish("numerical_failure", str(exc))
        return EXIT_NUMERICAL
    run.finish()
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
