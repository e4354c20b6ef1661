#!/usr/bin/env python3
"""
levitodyn command-line entry point.

Usage:
    python -m levitodyn freqs --config configs/paper_fig3.json
    python -m levitodyn damping --pressure 1.333e-6 --json
    python -m levitodyn simulate --config cfg.json --dt 2e-9 --steps 2e7 --seed 42 --out traj.csv
    python -m levitodyn psd --in traj.csv --col theta_rad --segment 65536 --out spec.csv
    python -m levitodyn fit --in spec.csv --band 0.8e6:1.4e6
    python -m levitodyn cool --cavity-length 0.5e-3 --drive-sweep 1e6:1e10:50 --log --out cool.csv
    python -m levitodyn torque --pressure 1.333e-6
    python -m levitodyn sweep --axis pressure:1e-6:1e2:9:log --out sweep.csv
    python -m levitodyn figures 3b --out out/fig3b.csv --gnuplot
    python -m levitodyn replay --manifest out/fig3b.csv.manifest.json
"""
import argparse
import json
import logging
import math
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np
import pandas as pd

from levitodyn import __version__, config, records
from levitodyn.core import (
    ConfigError,
    DomainError,
    FitError,
    IntegrationError,
    LevitodynError,
    to_hz,
    validate,
)

logger = logging.getLogger(__name__)


# ─── Logging setup ────────────────────────────────────────────────────────────
def setup_logging(level: str = config.LOG_LEVEL) -> None:
    """stderr keeps stdout free for CSV/JSON; the file handler is optional."""
    handlers = [logging.StreamHandler(sys.stderr)]
    if config.LOG_FILE:
        handlers.append(logging.FileHandler(config.LOG_FILE, encoding="utf-8"))
    logging.basicConfig(
        level=getattr(logging, level.upper(), logging.INFO),
        format="%(asctime)s  %(levelname)-8s  %(message)s",
        datefmt="%H:%M:%S",
        handlers=handlers,
    )


class _Parser(argparse.ArgumentParser):
    """Usage errors become ConfigError so they are reported as JSON."""

    def error(self, message):
        raise ConfigError(f"{self.prog}: {message}")


def _classify_error(exc: BaseException) -> str:
    """Return the machine-readable error kind for a failure."""
    if isinstance(exc, ConfigError):
        return "config_error"
    if isinstance(exc, IntegrationError):
        return "integration_error"
    if isinstance(exc, FitError):
        return "fit_error"
    if isinstance(exc, DomainError):
        return "domain_error"
    if isinstance(exc, OSError):
        return "io_error"
    return "unexpected_error"


# ---------------------------------------------------------------------------
# Argument helpers
# ---------------------------------------------------------------------------

def _parse_range(spec: str, what: str) -> tuple[float, float, int]:
    parts = spec.split(":")
    try:
        start, stop, count = float(parts[0]), float(parts[1]), int(parts[2])
    except (ValueError, IndexError):
        raise ConfigError(f"{what} must look like start:stop:count, got {spec!r}") from None
    if len(parts) != 3 or count < 1:
        raise ConfigError(f"{what} must look like start:stop:count, got {spec!r}")
    return start, stop, count


def _grid(spec: str, what: str, log: bool) -> np.ndarray:
    start, stop, count = _parse_range(spec, what)
    if log:
        if start <= 0.0 or stop <= 0.0:
            raise ConfigError(f"{what} with --log needs positive bounds")
        return np.logspace(math.log10(start), math.log10(stop), count)
    return np.linspace(start, stop, count)


def _parse_band(spec: str) -> tuple[float, float]:
    try:
        lo, hi = (float(x) for x in spec.split(":"))
    except ValueError:
        raise ConfigError(f"--band must look like f_lo:f_hi (Hz), got {spec!r}") from None
    if not lo < hi:
        raise ConfigError(f"--band needs f_lo < f_hi, got {spec!r}")
    return lo, hi


def parse_args(argv):
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", default=None, help="JSON run config (falls back to LEVITODYN_CONFIG)")
    common.add_argument("--out", default=None, help="Output file; stdout when omitted")
    common.add_argument("--seed", type=int, default=config.DEFAULT_SEED, help="Master RNG seed")
    common.add_argument("--jobs", type=int, default=config.DEFAULT_JOBS, help="Worker threads")
    common.add_argument("--json", action="store_true", help="Machine-readable result JSON on stdout")

    parser = _Parser(prog="levitodyn", description="Levitated ellipsoid optomechanics toolkit")
    parser.add_argument("--version", action="version", version=f"levitodyn {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("freqs", parents=[common], help="Trap frequencies")
    p.add_argument("--power-sweep", default=None, help="start:stop:count in W")

    p = sub.add_parser("chi", parents=[common], help="Depolarization factors and susceptibilities")
    p.add_argument("--aspects", default=None, help="start:stop:count grid of ry/rx")

    p = sub.add_parser("damping", parents=[common], help="Gas damping rates and quality factors")
    p.add_argument("--pressure", type=float, default=None, help="Pressure in Pa")
    p.add_argument("--pressure-sweep", default=None, help="start:stop:count in Pa (log spaced)")
    p.add_argument("--monte-carlo", type=int, default=0, help="Also run the collision oracle with N samples")

    p = sub.add_parser("simulate", parents=[common], help="Langevin trajectory")
    p.add_argument("--dt", type=float, default=None)
    p.add_argument("--steps", type=float, default=100_000)
    p.add_argument("--mode", choices=["harmonic", "full_potential"], default="harmonic")
    p.add_argument("--temperature", type=float, default=None, help="K; defaults to the gas temperature")
    p.add_argument("--pressure", type=float, default=None, help="Pressure in Pa")
    p.add_argument("--record-every", type=int, default=1)
    p.add_argument("--ensemble", type=int, default=0, help="Number of independent trajectories")

    p = sub.add_parser("psd", parents=[common], help="Welch PSD of a trajectory column")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--col", default="theta_rad")
    p.add_argument("--segment", type=int, default=None)
    p.add_argument("--overlap", type=float, default=config.PSD_OVERLAP)
    p.add_argument("--window", default=config.PSD_WINDOW)

    p = sub.add_parser("fit", parents=[common], help="Lorentzian fit of a spectrum")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--band", default=None, help="f_lo:f_hi in Hz")

    p = sub.add_parser("cool", parents=[common], help="Sideband-cooling steady state")
    p.add_argument("--cavity-length", type=float, default=None, help="m")
    p.add_argument("--drive-sweep", default="1e4:1e11:71", help="start:stop:count of n_photons")
    p.add_argument("--log", action="store_true", help="Log-spaced drive grid")
    p.add_argument("--detuning", type=float, default=None, help="Laser detuning in rad/s (default: optimal)")

    p = sub.add_parser("torque", parents=[common], help="Torque sensitivity")
    p.add_argument("--pressure", type=float, default=None, help="Pressure in Pa")

    p = sub.add_parser("sweep", parents=[common], help="Grid over one parameter")
    p.add_argument("--axis", required=True, help="name:start:stop:count[:log]")

    p = sub.add_parser("figures", parents=[common], help="Data behind a figure panel")
    p.add_argument("figure_id", help=f"One of {', '.join(config.FIGURE_IDS)}")
    p.add_argument("--cavity-length", type=float, default=None, help="m")
    p.add_argument("--gnuplot", action="store_true", help="Write a gnuplot script next to the CSV")

    sub.add_parser("validate", parents=[common], help="Check config invariants")

    p = sub.add_parser("replay", parents=[common], help="Re-run a manifest and compare digests")
    p.add_argument("--manifest", required=True)

    return parser.parse_args(argv)


# ---------------------------------------------------------------------------
# Output
# ---------------------------------------------------------------------------

class _Run:
    """Tracks files written by one command so they end up in its manifest."""

    def __init__(self, args, argv, cfg):
        from levitodyn.jobs import create_run_manifest

        self.args = args
        self.manifest = create_run_manifest(argv, cfg.snapshot if cfg else {}, {"master_seed": args.seed})
        self.written: list[Path] = []

    def table(self, df: pd.DataFrame, path=None, columns=None):
        path = path or self.args.out
        if path is None and self.args.json:
            return
        written = records.write_csv(df, path, columns)
        if written is not None:
            self.written.append(written)

    def json_file(self, obj, path):
        self.written.append(records.write_json(obj, path))

    def text_file(self, text: str, path: Path):
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text, encoding="utf-8")
        self.written.append(path)

    def finish(self):
        from levitodyn.jobs import manifest_path_for, record_output, save_manifest, update_run_status

        if not self.written:
            return
        for path in self.written:
            record_output(self.manifest, path)
        update_run_status(self.manifest, "completed")
        save_manifest(self.manifest, manifest_path_for(self.written[0]))


def _emit(args, result: dict) -> None:
    """JSON results go to stdout with --json, or when no file output was requested."""
    if args.json or args.out is None:
        print(records.to_json({"status": "ok", **result}))


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------

def _with_pressure(cfg, pressure):
    return cfg if pressure is None else replace(cfg, gas=cfg.gas.with_pressure(pressure))


def cmd_freqs(args, cfg, run):
    from levitodyn.optics import frequencies, frequency_ratio, stiffnesses, trap_depths

    powers = _grid(args.power_sweep, "--power-sweep", log=False) if args.power_sweep else [cfg.beam.power]
    rows = []
    for P in powers:
        f = frequencies(cfg.particle, cfg.beam.with_power(float(P)))
        rows.append({"power_W": float(P), "omega_y_Hz": to_hz(f.omega_y), "omega_theta_Hz": to_hz(f.omega_theta)})
    if args.power_sweep:
        run.table(pd.DataFrame(rows), columns=config.FREQS_COLUMNS)
        return {"rows": rows} if args.json else None

    f = frequencies(cfg.particle, cfg.beam)
    k_y, k_theta = stiffnesses(cfg.particle, cfg.beam)
    result = {
        **rows[0],
        "ratio": frequency_ratio(cfg.particle, cfg.beam),
        "k_y": k_y,
        "k_theta": k_theta,
        **trap_depths(cfg.particle, cfg.beam),
        "flags": f.flags,
    }
    if args.out:
        run.table(pd.DataFrame(rows), columns=config.FREQS_COLUMNS)
    return result


def cmd_chi(args, cfg, run):
    from levitodyn.optics import depolarization_factors

    aspects = _grid(args.aspects, "--aspects", log=False) if args.aspects else [cfg.particle.aspect]
    rows = []
    d = cfg.particle.eps_r - 1.0
    for a in aspects:
        L_x, L_y, L_z = depolarization_factors(float(a))
        rows.append({
            "aspect": float(a), "L_x": L_x, "L_y": L_y, "L_z": L_z,
            "chi_x": d / (1.0 + L_x * d), "chi_y": d / (1.0 + L_y * d),
        })
    if args.aspects or args.out:
        run.table(pd.DataFrame(rows), columns=config.CHI_COLUMNS)
    return rows[0] if not args.aspects else ({"rows": rows} if args.json else None)


def _damping_row(cfg, pressure):
    from levitodyn.gas import damping_rates, quality_factors

    gas = cfg.gas.with_pressure(pressure)
    rates = damping_rates(cfg.particle, gas)
    q = quality_factors(cfg.particle, cfg.beam, gas)
    return {
        "pressure_Pa": pressure,
        "gamma_x": rates.gamma_x,
        "gamma_y": rates.gamma_y,
        "gamma_theta": rates.gamma_theta,
        "Q_y": q.Q_y,
        "Q_theta": q.Q_theta,
        "flags": sorted(set(q.flags)),
    }


def cmd_damping(args, cfg, run):
    from levitodyn.gas import knudsen_number, monte_carlo_damping

    cfg = _with_pressure(cfg, args.pressure)
    if args.pressure_sweep:
        rows = [_damping_row(cfg, float(p)) for p in _grid(args.pressure_sweep, "--pressure-sweep", log=True)]
        df = pd.DataFrame(rows)
        df["flags"] = df["flags"].map(records.flags_to_cell)
        run.table(df, columns=config.DAMPING_COLUMNS)
        return {"rows": rows} if args.json else None

    result = _damping_row(cfg, cfg.gas.pressure)
    result["gamma_x_over_gamma_y"] = result["gamma_x"] / result["gamma_y"] if result["gamma_y"] else math.nan
    result["knudsen"] = knudsen_number(cfg.particle, cfg.gas)
    if args.monte_carlo:
        mc = monte_carlo_damping(cfg.particle, cfg.gas, n_samples=args.monte_carlo, seed=args.seed, jobs=args.jobs)
        result["monte_carlo"] = {
            "gamma_x": mc.gamma_x, "gamma_y": mc.gamma_y, "gamma_theta": mc.gamma_theta, "stderr": mc.stderr,
        }
    if args.out:
        run.table(pd.DataFrame([result]), columns=config.DAMPING_COLUMNS)
    return result


def cmd_simulate(args, cfg, run):
    from levitodyn.dynamics import simulate, simulate_ensemble, trajectory_to_frame

    cfg = _with_pressure(cfg, args.pressure)
    temperature = cfg.gas.temperature if args.temperature is None else args.temperature
    kwargs = dict(
        temperature=temperature, dt=args.dt, n_steps=int(args.steps),
        mode=args.mode, record_every=args.record_every,
    )
    if args.ensemble:
        trajs = simulate_ensemble(cfg.particle, cfg.beam, cfg.gas, args.ensemble,
                                  master_seed=args.seed, jobs=args.jobs, **kwargs)
        base = Path(args.out or "trajectory.csv")
        for i, traj in enumerate(trajs):
            run.table(trajectory_to_frame(traj), base.with_name(f"{base.stem}_{i:03d}{base.suffix}"), config.TRAJ_COLUMNS)
        return {"trajectories": len(trajs), "samples": len(trajs[0]), "dt": trajs[0].dt}

    traj = simulate(cfg.particle, cfg.beam, cfg.gas, seed=args.seed, **kwargs)
    run.table(trajectory_to_frame(traj), columns=config.TRAJ_COLUMNS)
    run.manifest.seeds["trajectory"] = traj.metadata["seed"]
    summary = {"samples": len(traj), "dt": traj.dt, "flags": traj.metadata["flags"]}
    return summary if (args.out or args.json) else None


def cmd_psd(args, cfg, run):
    from levitodyn.spectral import spectrum_to_frame, welch_psd

    df = records.read_csv(args.input, required=["t_s", args.col])
    t = df["t_s"].to_numpy(dtype=float)
    if len(t) < 2:
        raise DomainError("input series is too short")
    dt = float(np.mean(np.diff(t)))
    spec = welch_psd(df[args.col].to_numpy(dtype=float), dt, args.segment, args.overlap, args.window)
    run.table(spectrum_to_frame(spec), columns=config.PSD_COLUMNS)
    return spec.metadata if (args.out or args.json) else None


def cmd_fit(args, cfg, run):
    from levitodyn.spectral import fit_lorentzian, spectrum_from_frame

    spec = spectrum_from_frame(records.read_csv(args.input, required=config.PSD_COLUMNS))
    band = _parse_band(args.band) if args.band else None
    result = fit_lorentzian(spec, band).to_dict()
    if args.out:
        run.json_file(result, args.out)
    return result


def cmd_cool(args, cfg, run):
    from levitodyn.cooling import CoolingSetup, cooling_sweep, ground_state_window

    cavity = cfg.cavity if args.cavity_length is None else cfg.cavity.with_length(args.cavity_length)
    setup = CoolingSetup(cavity, cfg.particle, cfg.beam, detuning=args.detuning)
    df = cooling_sweep(setup, _grid(args.drive_sweep, "--drive-sweep", log=args.log), cfg.gas)
    run.table(df, columns=config.COOL_COLUMNS)
    window = ground_state_window(df)
    return {"ground_state_window": window, "cavity_length_m": cavity.length} if args.json else None


def cmd_torque(args, cfg, run):
    from levitodyn.sensing import sensing_report

    cfg = _with_pressure(cfg, args.pressure)
    result = sensing_report(cfg.particle, cfg.beam, cfg.gas)
    if args.out:
        run.json_file(result, args.out)
    return result


def cmd_sweep(args, cfg, run):
    from levitodyn.sweep import cmd_sweep as sweep, parse_axis

    df = sweep(cfg, parse_axis(args.axis), jobs=args.jobs)
    run.table(df)
    return {"rows": len(df)} if args.json else None


def cmd_figures(args, cfg, run):
    from levitodyn.figures import cmd_figures as figures, gnuplot_script

    if args.figure_id not in config.FIGURE_IDS:
        raise ConfigError(f"unknown figure id {args.figure_id!r}; valid ids: {', '.join(config.FIGURE_IDS)}")
    explicit = cfg if (args.config or config.LEVITODYN_CONFIG) else None
    df, summary = figures(args.figure_id, explicit, seed=args.seed, jobs=args.jobs, cavity_length=args.cavity_length)

    out = Path(args.out or f"figure_{args.figure_id}.csv")
    run.table(df, out)
    if summary:
        run.json_file(summary, out.with_name(out.stem + ".summary.json"))
    if args.gnuplot:
        run.text_file(gnuplot_script(args.figure_id, out.name, list(df.columns)), out.with_suffix(".gp"))
    return {"figure": args.figure_id, "rows": len(df), "summary": summary}


def cmd_validate(args, cfg, run):
    return validate(cfg.particle, cfg.beam, cfg.gas, cfg.cavity).to_dict()


COMMANDS = {
    "freqs": cmd_freqs,
    "chi": cmd_chi,
    "damping": cmd_damping,
    "simulate": cmd_simulate,
    "psd": cmd_psd,
    "fit": cmd_fit,
    "cool": cmd_cool,
    "torque": cmd_torque,
    "sweep": cmd_sweep,
    "figures": cmd_figures,
    "validate": cmd_validate,
}


# ---------------------------------------------------------------------------
# Entry point
# ---------------------------------------------------------------------------

def run(argv: list[str]) -> int:
    """Execute one command line. Returns the process exit code."""
    from levitodyn.config import load_config
    from levitodyn.jobs import replay

    try:
        args = parse_args(argv)

        if args.command == "replay":
            result = replay(args.manifest, run)
            ok = result["exit_code"] == 0 and not result["mismatched"]
            print(records.to_json({"status": "ok" if ok else "mismatch", **result}))
            return 0 if ok else 1

        cfg = load_config(args.config)
        if args.command == "validate":
            report = cmd_validate(args, cfg, None)
            print(records.to_json({"status": "ok" if report["ok"] else "invalid", **report}))
            return 0 if report["ok"] else 1

        report = validate(cfg.particle, cfg.beam, cfg.gas, cfg.cavity)
        if not report.ok:
            raise DomainError("; ".join(report.violations))

        run_state = _Run(args, argv, cfg)
        result = COMMANDS[args.command](args, cfg, run_state)
        run_state.finish()
        if result is not None:
            if report.warnings:
                result = {**result, "warnings": report.warnings}
            _emit(args, result)
        return 0

    except LevitodynError as e:
        kind = _classify_error(e)
        logger.error(f"✗ {kind}: {e}")
        print(json.dumps({"status": "error", "error": kind, "message": str(e)}, indent=2, sort_keys=True))
        return 2 if kind == "config_error" else 1
    except Exception as e:
        kind = _classify_error(e)
        logger.exception(f"✗ {kind}: {e}")
        print(json.dumps({"status": "error", "error": kind, "message": str(e)}, indent=2, sort_keys=True))
        return 1


def main(argv: list[str] | None = None) -> int:
    setup_logging()
    return run(sys.argv[1:] if argv is None else list(argv))


if __name__ == "__main__":
    sys.exit(main())
