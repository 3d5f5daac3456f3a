"""Command-line runner: ``tramor {fom,offline,rom,sweep,steps,repro}``."""

import argparse
import datetime as _dt
import hashlib
import json
import logging
import os
import platform
import sys
from pathlib import Path

import numpy as np

from . import __version__, experiments, io
from .config import ConfigError, ExperimentConfig, StepsConfig, SweepConfig, load_config
from .integrators import StepFailure
from .numerics import DimensionError, DomainExceededError
from .offline import RankDeficiencyError
from .rom import DegenerateMassError, UnsupportedConfigurationError

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3

_NUMERICAL = (
    StepFailure,
    DegenerateMassError,
    RankDeficiencyError,
    DomainExceededError,
    DimensionError,
    UnsupportedConfigurationError,
    FloatingPointError,
    np.linalg.LinAlgError,
)

log = logging.getLogger("tramor")


def _versions():
    out = {"tramor": __version__, "python": platform.python_version(), "numpy": np.__version__}
    for mod in ("scipy", "numba", "pydantic"):
        try:
            out[mod] = __import__(mod).__version__
        except ImportError:
            out[mod] = None
    return out


def _sha256(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


class _Outputs:
    """Collects written files and timing side data for the manifest."""

    def __init__(self, out_dir, gnuplot):
        self.dir = Path(out_dir)
        self.dir.mkdir(parents=True, exist_ok=True)
        self.gnuplot = gnuplot
        self.files = []
        self.timings = {}

    def path(self, name):
        return self.dir / name

    def add(self, *paths):
        self.files += [str(p) for p in paths]

    def table(self, name, rows):
        """Write a table; wall-clock columns go to the timings file instead."""
        clean, timing = [], []
        for row in rows:
            clean.append({k: v for k, v in row.items() if not _is_timing(k)})
            timing.append({k: v for k, v in row.items() if _is_timing(k)})
        if any(timing):
            self.timings[name] = timing
        self.add(*io.write_table(self.path(f"{name}.csv"), clean, self.gnuplot))

    def json(self, name, obj):
        p = self.path(name)
        p.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")
        self.add(p)

    def manifest(self, cfg, command, seed):
        if self.timings:
            self.json("timings.json", self.timings)
        files = sorted(set(self.files))
        doc = {
            "command": command,
            "config_hash": cfg.digest(),
            "seed": seed,
            "versions": _versions(),
            "files": [{"path": os.path.relpath(f, self.dir), "sha256": _sha256(f)} for f in files],
            "timestamp": _dt.datetime.now(_dt.timezone.utc).isoformat(),
        }
        p = self.path("manifest.json")
        p.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
        return p


def _is_timing(key):
    return key.startswith("_") or key.endswith("_time") or key.endswith("seconds")


def _write_snapshots(out, cfg, snap, stem):
    if "bin" in cfg.io.formats:
        p = out.path(f"{stem}.bin")
        io.write_snapshots(p, snap)
        out.add(p)
    if "csv" in cfg.io.formats:
        p = out.path(f"{stem}.csv")
        io.write_snapshots_csv(p, snap)
        out.add(p)


def _write_decomposition(out, cfg, dec, stem="decomposition"):
    if "bin" in cfg.io.formats:
        p = out.path(f"{stem}.bin")
        io.write_decomposition(p, dec)
        out.add(p)
    if "csv" in cfg.io.formats:
        p, q = out.path(f"{stem}.csv"), out.path(f"{stem}_singular_values.csv")
        io.write_decomposition_csv(p, dec)
        io.write_singular_values_csv(q, dec)
        out.add(p, q)


def _report_rows(res):
    rep = res["report"]
    rows = [{"model": "spod" if res["dec"].frames[0].transform.param_dim else "pod", "rank": res["dec"].rank, **rep.summary()}]
    for r, p in res["pod"].items():
        rows.append({"model": "pod", "rank": r, **p["report"].summary()})
    return rows


def _write_rom(out, cfg, res, stem="rom"):
    p = out.path(f"{stem}_trajectory.csv")
    io.write_trajectory_csv(p, res["traj"])
    out.add(p)
    rec = experiments.rom.reconstruct_trajectory(res["sys"], res["traj"], res["truth"].times, model_tag=stem)
    _write_snapshots(out, cfg, rec, f"{stem}_reconstruction")
    rep = res["report"]
    out.table(
        f"{stem}_error",
        [{"t": float(t), "relative_error": float(e), "bound": float(b), "residual_norm": float(r)}
         for t, e, b, r in zip(rep.times, rep.error_curve, rep.bound_curve, res["traj"].residual_norms)],
    )


# subcommands --------------------------------------------------------------------------


def cmd_fom(cfg, out, args):
    snap = experiments.simulate(cfg)
    _write_snapshots(out, cfg, snap, "snapshots")
    print(f"fom: {snap.m} snapshots, {snap.n_steps} steps")


def cmd_offline(cfg, out, args):
    model = experiments.build_model(cfg.model)
    snap = experiments.simulate(cfg, model)
    dec = experiments.decompose(cfg, snap, model)
    _write_decomposition(out, cfg, dec)
    print(f"offline: rank {dec.rank}, relative error {dec.offline_error:.6e}")


def cmd_rom(cfg, out, args):
    res = experiments.pipeline(cfg)
    _write_decomposition(out, cfg, res["dec"])
    _write_rom(out, cfg, res)
    out.table("report", _report_rows(res))
    rep = res["report"]
    print(f"rom: offline {rep.offline_error:.6e}, online {rep.online_error:.6e}")
    for r, p in res["pod"].items():
        print(f"pod r={r}: offline {p['report'].offline_error:.6e}, online {p['report'].online_error:.6e}")


def cmd_sweep(cfg, out, args):
    if cfg.analysis.sweep is None:
        cfg = cfg.model_copy(update={"analysis": cfg.analysis.model_copy(update={"sweep": SweepConfig()})})
    rows = experiments.run_sweep(cfg, args.jobs)
    out.table("sweep", rows)
    errs = {k: [r[k] for r in rows] for k in rows[0] if k.endswith("_error")}
    for k, v in errs.items():
        print(f"{k}: min {min(v):.3e} max {max(v):.3e}")
    return cfg


def cmd_steps(cfg, out, args):
    if cfg.analysis.steps is None:
        cfg = cfg.model_copy(update={"analysis": cfg.analysis.model_copy(update={"steps": StepsConfig()})})
    rows = experiments.run_steps(cfg)
    out.table("steps", rows)
    for row in rows:
        print(f"{row['scheme']}: fom {row['fom']}, pod {row['pod']} ({row['pod_ratio']:.2f}), spod {row['spod']} ({row['spod_ratio']:.2f})")
    return cfg


def cmd_repro(cfg, out, args):
    name = args.recipe
    res = experiments.run_recipe(name, cfg, jobs=args.jobs)
    for tname, rows in res["tables"].items():
        out.table(tname, rows)
    if "report" in res:
        _write_rom(out, cfg, res)
        out.table("report", _report_rows(res))
    for row in res["tables"].get("summary", []):
        print(f"{row['variant']} r={row['rank']}: offline {row['offline_error']:.6e}, online {row['online_error']:.6e}")
    for row in res["tables"].get("grid_study", []):
        print(f"dxi={row['dxi']:g} r={row['rank']}: offline {row['offline_error']:.6e}, online {row['online_error']:.6e}")
    for row in res["tables"].get("steps", []):
        print(f"{row['scheme']}: fom {row['fom']}, pod {row['pod']} ({row['pod_ratio']:.2f}), spod {row['spod']} ({row['spod_ratio']:.2f})")
    if "path_nonlinearity" in res:
        print(f"path nonlinearity (max deviation from chord): {res['path_nonlinearity']:.4e}")


COMMANDS = {"fom": cmd_fom, "offline": cmd_offline, "rom": cmd_rom, "sweep": cmd_sweep, "steps": cmd_steps, "repro": cmd_repro}


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="JSON experiment configuration")
    common.add_argument("--out", type=Path, help="output directory (overrides io.out_dir)")
    common.add_argument("--jobs", type=int, default=1, help="worker processes for sweeps")
    common.add_argument("--gnuplot", action="store_true", help="also write whitespace-separated tables")
    common.add_argument("--seed", type=int, default=0, help="recorded in the manifest; runs are deterministic")
    p = argparse.ArgumentParser(prog="tramor", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)
    for name in ("fom", "offline", "rom", "sweep", "steps"):
        sub.add_parser(name, parents=[common])
    r = sub.add_parser("repro", parents=[common])
    r.add_argument("recipe", choices=sorted(experiments.RECIPES))
    return p


def _setup_logging():
    level = os.environ.get("TRAMOR_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING), format="%(levelname)s %(name)s: %(message)s")


def main(argv=None):
    _setup_logging()
    args = build_parser().parse_args(argv)
    if args.seed < 0 or args.seed >= 2**64:
        print("config error: --seed must be an unsigned 64-bit integer", file=sys.stderr)
        return EXIT_CONFIG
    if args.jobs < 1:
        print("config error: --jobs must be positive", file=sys.stderr)
        return EXIT_CONFIG
    try:
        if args.config is not None:
            cfg = load_config(args.config)
        elif args.command == "repro":
            cfg = experiments.recipe_config(args.recipe)
        else:
            cfg = ExperimentConfig()
        if args.command == "repro" and args.config is not None and cfg.name != args.recipe:
            log.warning("config name %r differs from recipe %r", cfg.name, args.recipe)
    except ConfigError as exc:
        for loc, msg in exc.errors:
            print(f"config error: {loc}: {msg}", file=sys.stderr)
        return EXIT_CONFIG
    if args.out is not None:
        cfg = cfg.model_copy(update={"io": cfg.io.model_copy(update={"out_dir": args.out})})
    np.random.seed(args.seed % 2**32)
    log.info("seed %d", args.seed)
    print("effective config:")
    print(json.dumps(cfg.model_dump(mode="json"), indent=2, sort_keys=True))
    out = _Outputs(cfg.io.out_dir, args.gnuplot)
    out.json("config.json", cfg.model_dump(mode="json"))
    try:
        updated = COMMANDS[args.command](cfg, out, args)
    except _NUMERICAL as exc:
        print(f"numerical failure in '{args.command}': {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except ValueError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    cfg = updated if isinstance(updated, ExperimentConfig) else cfg
    m = out.manifest(cfg, [args.command] + ([args.recipe] if args.command == "repro" else []), args.seed)
    print(f"manifest: {m}")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
