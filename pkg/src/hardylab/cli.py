"""Command-line runner: ``hardylab run <config>`` and ``hardylab list``."""

from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import platform
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np
import scipy

from . import __version__
from .config import SCHEMA_VERSION, load_config
from .errors import ConfigInvalid
from .studies import STUDIES, run_study

log = logging.getLogger("hardylab")

REPORT_NAME = "report.json"
ENV_NAME = "environment.json"


def _jsonable(v):
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, np.ndarray):
        return _jsonable(v.tolist())
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    if isinstance(v, (int, np.integer)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        v = float(v)
        return v if math.isfinite(v) else str(v)
    return v


def _study_seed(seed: int, index: int) -> list:
    return [int(seed), int(index)]


def _run_one(args):
    name, params, seed = args
    return run_study(name, params, seed)


def list_studies() -> list:
    return [(name, desc) for name, (_, desc, _) in STUDIES.items()]


def environment_stamp(timings: dict) -> dict:
    return {
        "hardylab": __version__, "python": platform.python_version(), "numpy": np.__version__,
        "scipy": scipy.__version__, "platform": platform.platform(),
        "started": time.strftime("%Y-%m-%dT%H:%M:%S%z"), "seconds": timings,
    }


def write_tables(out: Path, res) -> list:
    files = []
    if not res.tables:
        return files
    d = out / res.study
    d.mkdir(parents=True, exist_ok=True)
    for tname, (header, rows) in sorted(res.tables.items()):
        path = d / f"{tname}.csv"
        with path.open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            for row in rows:
                w.writerow([repr(float(x)) if isinstance(x, (float, np.floating)) else x for x in row])
        files.append(str(path.relative_to(out)))
    return files


def run(config_path, out=None, seed=None, workers=None) -> tuple[dict, int]:
    """Execute a config; writes report.json, environment.json and per-study CSVs.

    Returns (report, exit_code). The exit code is 1 iff a non-skipped check failed.
    """
    cfg = load_config(config_path)
    seed = cfg.seed if seed is None else seed
    workers = cfg.workers if workers is None else workers
    out = Path(out or cfg.output)
    out.mkdir(parents=True, exist_ok=True)
    jobs = [(s.id, s.params, _study_seed(seed, i)) for i, s in enumerate(cfg.studies)]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            results = list(ex.map(_run_one, jobs))
    else:
        results = [_run_one(j) for j in jobs]

    studies, timings = [], {}
    counts = {"pass": 0, "fail": 0, "skipped": 0}
    for i, res in enumerate(results):
        key = f"{i}:{res.study}"
        timings[key] = round(res.seconds, 3)
        checks = [c.as_record() for c in res.checks]
        for c in checks:
            counts[c["status"]] += 1
        studies.append({
            "index": i, "study": res.study, "params": res.params, "records": res.records,
            "checks": checks, "error": res.error, "tables": write_tables(out, res),
        })
        log.info("%s: %d checks, %d failed (%.1f s)", res.study, len(checks),
                 sum(c["status"] == "fail" for c in checks), res.seconds)
    report = _jsonable({
        "schema_version": SCHEMA_VERSION, "seed": seed, "config": cfg.raw,
        "studies": studies, "summary": counts,
    })
    (out / REPORT_NAME).write_text(json.dumps(report, sort_keys=True, indent=2) + "\n")
    (out / ENV_NAME).write_text(json.dumps(environment_stamp(timings), sort_keys=True, indent=2) + "\n")
    return report, int(counts["fail"] > 0)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="hardylab", description=__doc__.splitlines()[0])
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)
    r = sub.add_parser("run", help="run the studies listed in a YAML config")
    r.add_argument("config")
    r.add_argument("--out", help="output directory (overrides the config)")
    r.add_argument("--seed", type=int, help="global random seed (overrides the config)")
    r.add_argument("--workers", type=int, help="number of concurrent studies (overrides the config)")
    sub.add_parser("list", help="list the available studies")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.command == "list":
        width = max(len(n) for n in STUDIES)
        for name, desc in list_studies():
            print(f"{name:<{width}}  {desc}")
        return 0
    if args.workers is not None and args.workers < 1:
        print("error: --workers must be >= 1", file=sys.stderr)
        return 2
    try:
        report, code = run(args.config, args.out, args.seed, args.workers)
    except ConfigInvalid as e:
        print(f"{e.code}: {e}", file=sys.stderr)
        for k, msg in sorted(e.fields.items()):
            print(f"  {k}: {msg}", file=sys.stderr)
        return 2
    s = report["summary"]
    for st in report["studies"]:
        for c in st["checks"]:
            print(f"{c['status'].upper():7s} {st['study']}/{c['name']}")
    print(f"{s['pass']} passed, {s['fail']} failed, {s['skipped']} skipped")
    return code


if __name__ == "__main__":
    sys.exit(main())
