"""Command line entry points: ``run`` one round, ``sweep`` a grid of rounds.

Exit codes: 0 success, 1 invariant or quiescence failure, 2 config error.
"""

from __future__ import annotations

import argparse
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from itertools import groupby

from .metrics import CSV_COLUMNS, mean_row, metrics_row, write_csv
from .protocol import ProtocolError
from .scenario import ConfigError, SweepCell, SweepSpec, load_config, run_scenario
from .sim import InvariantViolation, NonQuiescence

EXIT_OK, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2

ROUND_ERRORS = (InvariantViolation, NonQuiescence, ProtocolError)


def _report_failure(err: Exception, where: str = "") -> None:
    prefix = f"{where}: " if where else ""
    print(f"error: {prefix}{type(err).__name__}: {err}", file=sys.stderr)
    live = getattr(err, "live", None)
    if live:
        print("live actors at abort:", file=sys.stderr)
        for actor, mode in live.items():
            print(f"  {actor}\t{mode}", file=sys.stderr)


def round_summary(result, metrics) -> dict:
    out = metrics.to_dict()
    out["token_sends"] = result.token_sends
    out["token_drops"] = result.token_drops
    out["circuits"] = result.circuits
    out["loadvector_sends"] = result.loadvector_sends
    out["events"] = result.events
    out["final_loads"] = list(result.final_loads)
    out["transfers"] = [
        {"donor": tr.donor, "dest": tr.dest, "amount": tr.amount, "remote": tr.remote,
         "critical_path": tr.critical_path, "elapsed": tr.elapsed}
        for tr in result.transfers
    ]
    return out


def cmd_run(config: str, out: str, trace: str | None = None) -> int:
    try:
        cfg = load_config(config)
    except OSError as e:
        print(f"error: cannot read config: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except ConfigError as e:
        print(f"error: config {config}: {e}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        result, metrics = run_scenario(cfg)
    except ROUND_ERRORS as e:
        _report_failure(e, config)
        return EXIT_FAIL
    with open(out, "w") as fh:
        json.dump(round_summary(result, metrics), fh, indent=1)
        fh.write("\n")
    if trace:
        with open(trace, "w") as fh:
            fh.write(result.trace_text())
    return EXIT_OK


def _run_cell(cell: SweepCell):
    """Worker body; returns (row, None) or (None, error text)."""
    try:
        result, m = run_scenario(cell.config)
    except ROUND_ERRORS as e:
        return None, f"{type(e).__name__}: {e}"
    return metrics_row(cell.scenario_id, cell.seed, result.topology.k, cell.profile, m), None


def sweep_rows(spec: SweepSpec, jobs: int = 1) -> tuple[list[dict], list[str]]:
    """Per-seed rows followed by a mean row for each configuration, in cell order."""
    cells = list(spec.cells())
    if jobs > 1 and len(cells) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            outcomes = list(pool.map(_run_cell, cells, chunksize=8))
    else:
        outcomes = [_run_cell(c) for c in cells]
    rows, failures = [], []
    paired = list(zip(cells, outcomes))
    for _, group in groupby(paired, key=lambda p: p[0].scenario_id):
        ok = []
        for cell, (row, err) in group:
            if err is None:
                ok.append(row)
            else:
                failures.append(f"{cell.scenario_id} seed {cell.seed}: {err}")
        rows.extend(ok)
        if ok:
            rows.append(mean_row(ok))
    return rows, failures


def cmd_sweep(spec_path: str, out: str, jobs: int = 1) -> int:
    try:
        with open(spec_path) as fh:
            raw = json.load(fh)
        spec = SweepSpec.from_dict(raw)
    except OSError as e:
        print(f"error: cannot read sweep spec: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except json.JSONDecodeError as e:
        print(f"error: sweep spec {spec_path}: line {e.lineno}, column {e.colno}: {e.msg}", file=sys.stderr)
        return EXIT_CONFIG
    except ConfigError as e:
        print(f"error: sweep spec {spec_path}: {e}", file=sys.stderr)
        return EXIT_CONFIG
    rows, failures = sweep_rows(spec, jobs)
    with open(out, "w", newline="") as fh:
        write_csv(rows, fh)
    for f in failures:
        print(f"error: {f}", file=sys.stderr)
    return EXIT_FAIL if failures else EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="clusterlb", description="Cluster-based dynamic load balancing simulator")
    sub = p.add_subparsers(dest="command", required=True)
    r = sub.add_parser("run", help="simulate one balancing round")
    r.add_argument("--config", required=True, help="scenario config (JSON)")
    r.add_argument("--out", required=True, help="metrics output (JSON)")
    r.add_argument("--trace", help="optional message trace output")
    s = sub.add_parser("sweep", help="simulate a grid of scenarios and write CSV rows")
    s.add_argument("--spec", required=True, help="sweep spec (JSON)")
    s.add_argument("--out", required=True, help="CSV output")
    s.add_argument("--jobs", type=int, default=1, help="worker processes (default 1)")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "run":
        return cmd_run(args.config, args.out, args.trace)
    if args.jobs < 1:
        print("error: --jobs must be at least 1", file=sys.stderr)
        return EXIT_CONFIG
    return cmd_sweep(args.spec, args.out, args.jobs)


if __name__ == "__main__":
    sys.exit(main())
