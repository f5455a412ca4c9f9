"""Command-line runner: ``semiclassical-lab run <config.toml>`` and ``semiclassical-lab list``."""
from __future__ import annotations

import argparse
import csv
import hashlib
import json
import sys
import time
import warnings
from pathlib import Path

import numpy as np

from . import __version__
from .errors import ConfigError, SemiclassicalError
from .experiments import CATALOG, ExperimentResult, Plot, run_experiment

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

EXIT_PASS, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2


def load_config(path) -> dict:
    try:
        with open(path, "rb") as fh:
            cfg = tomllib.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"malformed config {path}: {exc}") from exc
    if "experiment" not in cfg:
        raise ConfigError("config must set 'experiment'")
    return cfg


def _cell(v) -> str:
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (complex, np.complexfloating)):
        return repr(complex(v))
    if isinstance(v, (np.integer,)):
        return str(int(v))
    return str(v)


def write_table(path: Path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_cell(v) for v in row])


def write_plot(path: Path, plot: Plot) -> None:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    with matplotlib.rc_context({"svg.hashsalt": "semiclassical-lab", "svg.fonttype": "none"}):
        fig, ax = plt.subplots(figsize=(6.4, 4.0))
        for label, x, y in plot.series:
            ax.plot(np.asarray(x, float), np.asarray(y, float), label=label, marker="o" if len(x) < 12 else None)
        if plot.logx:
            ax.set_xscale("log")
        if plot.logy:
            ax.set_yscale("log")
        ax.set_xlabel(plot.xlabel)
        ax.set_ylabel(plot.ylabel)
        ax.set_title(plot.title)
        if len(plot.series) > 1:
            ax.legend()
        fig.tight_layout()
        fig.savefig(path, format="svg", metadata={"Date": None})
        plt.close(fig)


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _jsonable(v):
    if isinstance(v, np.ndarray):
        return v.tolist()
    if isinstance(v, (np.floating, np.integer)):
        return v.item()
    if isinstance(v, np.bool_):
        return bool(v)
    if isinstance(v, complex):
        return [v.real, v.imag]
    raise TypeError(f"cannot serialize {type(v)}")


def write_outputs(result: ExperimentResult, out: Path, config: dict, wall: float) -> dict:
    out.mkdir(parents=True, exist_ok=True)
    files = []
    for name, (header, rows) in result.tables.items():
        write_table(out / name, header, rows)
        files.append(name)
    for name, text in result.texts.items():
        (out / name).write_text(text)
        files.append(name)
    for plot in result.plots:
        name = f"{plot.name}.svg"
        write_plot(out / name, plot)
        files.append(name)
    report = {
        "experiment": result.experiment,
        "passed": result.passed,
        "checks": {k: vars(c) for k, c in result.checks.items()},
        "quantities": result.quantities,
    }
    (out / "report.json").write_text(json.dumps(report, indent=2, sort_keys=True, default=_jsonable) + "\n")
    files.append("report.json")
    manifest = {
        "config": config,
        "version": __version__,
        "wall_time_s": wall,
        "passed": result.passed,
        "outputs": {name: _sha256(out / name) for name in sorted(files)},
    }
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True, default=_jsonable) + "\n")
    return manifest


def cmd_run(args) -> int:
    cfg = load_config(args.config)
    params = {k: v for k, v in cfg.items() if k not in ("experiment", "output")}
    name = cfg["experiment"]
    out = Path(args.out or cfg.get("output") or f"results/{name}")
    start = time.perf_counter()
    with warnings.catch_warnings():
        if args.strict:
            warnings.simplefilter("error")
        try:
            result = run_experiment(name, params, threads=args.threads)
        except ConfigError:
            raise
        except (SemiclassicalError, Warning) as exc:
            print(f"{name}: stage failed: {type(exc).__name__}: {exc}", file=sys.stderr)
            return EXIT_FAIL
    wall = time.perf_counter() - start
    write_outputs(result, out, cfg, wall)
    for key, c in result.checks.items():
        print(f"{'PASS' if c.passed else 'FAIL'}  {key}: {c.value:.6g} (target {c.target})")
    print(f"{name}: {'all checks passed' if result.passed else 'some checks failed'}; outputs in {out}")
    return EXIT_PASS if result.passed else EXIT_FAIL


def cmd_list(_args) -> int:
    for name, spec in CATALOG.items():
        defaults = ", ".join(f"{k}={v:g}" if isinstance(v, float) else f"{k}={v}"
                             for k, v in spec.defaults.items() if v is not None)
        print(f"{name:16s} {spec.anchor}")
        print(f"{'':16s} defaults: {defaults}")
    return EXIT_PASS


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="semiclassical-lab", description=__doc__)
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="run one experiment from a TOML config")
    run.add_argument("config")
    run.add_argument("--out", help="output directory (default results/<experiment>)")
    run.add_argument("--threads", type=int, default=1, help="worker threads for hbar sweeps")
    run.add_argument("--strict", action="store_true", help="treat any warning as a failure")
    run.set_defaults(func=cmd_run)
    lst = sub.add_parser("list", help="list the available experiments")
    lst.set_defaults(func=cmd_list)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
