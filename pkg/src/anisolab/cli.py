"""Command-line harness for the experiment families.

Usage:
    anisolab <experiment> [--config PATH] [--seed U64] [--threads N] [--out DIR]
    anisolab replay MANIFEST [--threads N]
    anisolab report RUN_DIR [--out DIR]

Each experiment run writes manifest.json (config echo, seed, version,
wall time), summary.json, and one or more CSV files with documented
headers into the output directory.  Exit codes: 0 success, 2 completed
with flagged diagnostics, 1 runtime error, 64 usage or config error.
"""

from __future__ import annotations

import argparse
import filecmp
import json
import os
import sys
import tempfile
import time

from .config import ConfigError, EXPERIMENTS, default_config, load_config
from .experiments import run_experiment

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_FLAGGED = 2
EXIT_USAGE = 64


def _version() -> str:
    try:
        from importlib.metadata import version
        return version("anisolab")
    except Exception:
        return "unknown"


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="anisolab",
        description="Numerical experiments on local times of anisotropic "
                    "Gaussian fields.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in sorted(EXPERIMENTS):
        p = sub.add_parser(name, help=f"run the {name} experiment family")
        p.add_argument("--config", default=None, help="key=value config file")
        p.add_argument("--seed", type=int, default=None, help="RNG seed override")
        p.add_argument("--threads", type=int, default=None,
                       help="worker threads over replicates")
        p.add_argument("--out", default=None, help="output directory")
    p = sub.add_parser("replay", help="re-execute a prior run and byte-compare CSVs")
    p.add_argument("manifest", help="manifest.json (or its run directory)")
    p.add_argument("--threads", type=int, default=None,
                   help="thread count for the re-execution")
    p = sub.add_parser("report", help="render figures from a run directory")
    p.add_argument("run_dir", help="directory holding experiment CSV output")
    p.add_argument("--out", default=None, help="figure directory (default: run_dir)")
    return parser


def _run_into(cfg: dict, out_dir: str) -> tuple[dict, bool, dict]:
    os.makedirs(out_dir, exist_ok=True)
    start = time.time()
    summary, flagged = run_experiment(cfg, out_dir)
    manifest = {
        "experiment": cfg["experiment"],
        "config": {k: v for k, v in sorted(cfg.items())},
        "seed": cfg["seed"],
        "version": _version(),
        "wall_time_s": time.time() - start,
        "csv_files": sorted(f for f in os.listdir(out_dir) if f.endswith(".csv")),
        "flagged": flagged,
    }
    with open(os.path.join(out_dir, "summary.json"), "w", encoding="utf-8") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")
    with open(os.path.join(out_dir, "manifest.json"), "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return summary, flagged, manifest


def _cmd_experiment(args, experiment: str) -> int:
    try:
        if args.config is not None:
            cfg = load_config(args.config, experiment)
        else:
            cfg = default_config(experiment)
    except (ConfigError, OSError) as exc:
        print(f"anisolab: config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    if args.seed is not None:
        cfg["seed"] = args.seed
    if args.threads is not None:
        cfg["threads"] = args.threads
    out_dir = args.out or f"anisolab-{experiment}"
    try:
        summary, flagged, _ = _run_into(cfg, out_dir)
    except ConfigError as exc:
        print(f"anisolab: config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except Exception as exc:
        print(f"anisolab: error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    print(json.dumps(summary, indent=2, sort_keys=True))
    print(f"wrote {out_dir}/")
    return EXIT_FLAGGED if flagged else EXIT_OK


def replay(manifest_path: str, threads: int | None = None) -> bool:
    """Re-execute the run described by a manifest and byte-compare the
    primary CSV outputs.  Returns True iff every file is identical."""
    if os.path.isdir(manifest_path):
        manifest_path = os.path.join(manifest_path, "manifest.json")
    with open(manifest_path, "r", encoding="utf-8") as fh:
        manifest = json.load(fh)
    run_dir = os.path.dirname(os.path.abspath(manifest_path))
    cfg = manifest["config"]
    if threads is not None:
        cfg = dict(cfg)
        cfg["threads"] = threads
    with tempfile.TemporaryDirectory(prefix="anisolab-replay-") as tmp:
        run_experiment(cfg, tmp)
        for name in manifest["csv_files"]:
            orig = os.path.join(run_dir, name)
            fresh = os.path.join(tmp, name)
            if not os.path.exists(orig) or not os.path.exists(fresh):
                return False
            if not filecmp.cmp(orig, fresh, shallow=False):
                return False
    return True


def _cmd_replay(args) -> int:
    try:
        ok = replay(args.manifest, args.threads)
    except (OSError, KeyError, ValueError) as exc:
        print(f"anisolab: replay error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    print("replay: identical" if ok else "replay: MISMATCH")
    return EXIT_OK if ok else EXIT_ERROR


def _cmd_report(args) -> int:
    from .report import render_run_report
    out_dir = args.out or args.run_dir
    try:
        written = render_run_report(args.run_dir, out_dir)
    except Exception as exc:
        print(f"anisolab: report error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    for path in written:
        print(f"wrote {path}")
    return EXIT_OK


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else 0
    if args.command == "replay":
        return _cmd_replay(args)
    if args.command == "report":
        return _cmd_report(args)
    return _cmd_experiment(args, args.command)


if __name__ == "__main__":
    sys.exit(main())
