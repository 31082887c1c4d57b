"""Command line interface.

Subcommands:
  gen     write an instance file from a generator spec
  run     execute an experiment and emit JSON (+ CSV with --out)
  verify  check a coloring file against an instance
  stats   run the invariant checkers on a results JSON

Exit codes: 0 on success, 1 when a check finds violations (verify,
stats), 2 on usage or input errors.
"""

from __future__ import annotations

import argparse
import sys
import time

import numpy as np

from . import harness
from .engine import verify_coloring
from .instances import (OnlineInstance, ParseError, load_instance,
                        read_instance, validate, write_instance)

__all__ = ["main", "read_coloring", "write_coloring"]


def write_coloring(colors: np.ndarray, instance: OnlineInstance,
                   stream) -> None:
    """One line per arrival: that arrival's edge colors in neighbor
    order, -1 for uncolored edges."""
    k = 0
    for nbrs in instance.arrivals:
        row = colors[k:k + len(nbrs)]
        k += len(nbrs)
        stream.write(" ".join(str(int(c)) for c in row))
        stream.write("\n")


def read_coloring(stream, instance: OnlineInstance) -> np.ndarray:
    """Parse a coloring file; raises ParseError on shape mismatch."""
    rows = []
    line_no = 0
    for line_no, raw in enumerate(stream, start=1):
        line = raw.rstrip("\n").rstrip("\r")
        if line.lstrip().startswith("#"):
            continue
        if len(rows) >= instance.num_arrivals:
            raise ParseError(line_no, "more coloring lines than arrivals")
        try:
            rows.append([int(tok) for tok in line.split()])
        except ValueError:
            raise ParseError(line_no, "colors must be integers")
        if len(rows[-1]) != len(instance.arrivals[len(rows) - 1]):
            raise ParseError(
                line_no,
                f"arrival {len(rows) - 1} has "
                f"{len(instance.arrivals[len(rows) - 1])} edges, "
                f"line lists {len(rows[-1])} colors")
    if len(rows) != instance.num_arrivals:
        raise ParseError(line_no + 1,
                         f"expected {instance.num_arrivals} coloring "
                         f"lines, found {len(rows)}")
    flat = [c for row in rows for c in row]
    return np.array(flat, dtype=np.int64)


def _cmd_gen(args) -> int:
    if args.family == "regular":
        if args.side is None or args.delta is None:
            print("gen regular needs --side and --delta", file=sys.stderr)
            return 2
        spec = f"regular:side={args.side},delta={args.delta},seed={args.seed}"
    else:
        if args.r is None or args.k is None:
            print("gen gadget needs --r and --k", file=sys.stderr)
            return 2
        spec = f"gadget:r={args.r},k={args.k}"
    instance = harness.resolve_instance(spec)
    if args.out == "-":
        write_instance(instance, sys.stdout)
    else:
        with open(args.out, "w", encoding="ascii") as fh:
            write_instance(instance, fh)
        print(f"wrote {args.out}: {instance.num_offline} offline, "
              f"{instance.num_arrivals} arrivals, "
              f"delta={instance.declared_delta}")
    return 0


def _cmd_run(args) -> int:
    config = harness.ExperimentConfig(
        instance=args.instance,
        algo=args.algo,
        q=args.q,
        trials=args.trials,
        seed=args.seed,
        trace=tuple(args.trace or ()),
        keep_trials=args.keep_trials,
        workers=args.workers,
    )
    t0 = time.perf_counter()
    instance = harness.resolve_instance(config.instance)
    metrics = harness.run_trials(config, instance=instance)
    wall = time.perf_counter() - t0
    doc = harness.metrics_to_doc(config, metrics)

    if args.coloring:
        rec_colors = _last_trial_colors(config, instance, metrics)
        with open(args.coloring, "w", encoding="ascii") as fh:
            write_coloring(rec_colors, instance, fh)

    if args.out:
        json_path, csv_path = harness.write_outputs(doc, metrics, args.out,
                                                    wall_seconds=wall)
        print(f"wrote {json_path} and {csv_path}")
        print(f"trials={metrics.trials} failure_trials="
              f"{metrics.failure_trials} invalid_trials="
              f"{metrics.invalid_trials} wall={wall:.2f}s")
    else:
        sys.stdout.write(harness.doc_to_json(doc, wall_seconds=wall))
    return 0


def _last_trial_colors(config, instance, metrics) -> np.ndarray:
    """Recompute the final trial's coloring for --coloring output."""
    from . import engine
    seed_last = config.seed + config.trials - 1
    if config.algo == "greedy":
        rec = engine.greedy_color(instance, check_instance=False)
    else:
        q = metrics.q
        rec = engine.color_online(instance, q, seed_last,
                                  check_instance=False)
    return rec.edge_colors


def _cmd_verify(args) -> int:
    try:
        instance = load_instance(args.instance)
    except (ParseError, OSError) as exc:
        print(f"cannot read instance: {exc}", file=sys.stderr)
        return 2
    rep = validate(instance)
    if not rep.ok:
        for v in rep.violations:
            print(f"instance invalid: {v}", file=sys.stderr)
        return 2
    try:
        with open(args.coloring, "r", encoding="ascii") as fh:
            colors = read_coloring(fh, instance)
    except (ParseError, OSError) as exc:
        print(f"cannot read coloring: {exc}", file=sys.stderr)
        return 2
    verdict = verify_coloring(instance, colors)
    status = "proper" if verdict.proper else "improper"
    print(f"{status}; complete={verdict.complete} "
          f"colors_used={verdict.colors_used}")
    for p in verdict.problems:
        print(f"  {p}")
    return 0 if verdict.proper and verdict.complete else 1


def _cmd_stats(args) -> int:
    import json
    try:
        with open(args.results, "r", encoding="ascii") as fh:
            doc = json.load(fh)
        metrics = harness.metrics_from_doc(doc)
    except (OSError, KeyError, ValueError) as exc:
        print(f"cannot read results: {exc}", file=sys.stderr)
        return 2
    try:
        marg = harness.check_marginals(metrics, metrics.delta, metrics.q)
        neg = harness.check_negative_dependence(metrics)
    except ValueError as exc:
        print(f"cannot check: {exc}", file=sys.stderr)
        return 2
    bad = 0
    print(f"marginals ({len(marg.rows)} checks):")
    for row in marg.rows:
        mark = "ok " if row.ok else "FAIL"
        bad += not row.ok
        print(f"  [{mark}] {row.trace} v={row.node}: "
              f"target={row.target:.6f} empirical={row.empirical:.6f} "
              f"slack={row.slack:.6f}")
    print(f"negative dependence ({len(neg.rows)} checks):")
    for row in neg.rows:
        mark = "ok " if row.ok else "FAIL"
        bad += not row.ok
        print(f"  [{mark}] {row.trace}: product={row.target:.6f} "
              f"joint={row.empirical:.6f} slack={row.slack:.6f}")
    return 1 if bad else 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="oec",
        description="Online bipartite edge coloring: experiments and "
                    "verification.")
    sub = parser.add_subparsers(dest="command", required=True)

    p_gen = sub.add_parser("gen", help="write an instance file")
    p_gen.add_argument("--family", choices=["regular", "gadget"],
                       required=True)
    p_gen.add_argument("--side", type=int, default=None,
                       help="nodes per side (regular family)")
    p_gen.add_argument("--delta", type=int, default=None)
    p_gen.add_argument("--seed", type=int, default=0)
    p_gen.add_argument("--r", type=int, default=None,
                       help="gadget family exponent (>= 3)")
    p_gen.add_argument("--k", type=int, default=None,
                       help="gadget family degree parameter (delta = k-1)")
    p_gen.add_argument("--out", default="-",
                       help="output path, or - for stdout")

    p_run = sub.add_parser("run", help="run an experiment")
    p_run.add_argument("--instance", required=True,
                       help="instance file path, or regular:.../gadget:... "
                            "generator spec")
    p_run.add_argument("--algo", choices=["paper", "greedy"],
                       default="paper")
    p_run.add_argument("--q", default="auto",
                       help="integer, auto, or appendix:<r>")
    p_run.add_argument("--trials", type=int, default=1)
    p_run.add_argument("--seed", type=int, default=0)
    p_run.add_argument("--trace", action="append", default=None,
                       help="t:c:v or t:c:v1+v2; may repeat")
    p_run.add_argument("--out", default=None,
                       help="write <out>.json and <out>.csv")
    p_run.add_argument("--keep-trials", action="store_true",
                       help="include per-trial records in the JSON")
    p_run.add_argument("--coloring", default=None,
                       help="write the last trial's coloring here")
    p_run.add_argument("--workers", type=int, default=1)

    p_ver = sub.add_parser("verify", help="check a coloring file")
    p_ver.add_argument("--instance", required=True)
    p_ver.add_argument("--coloring", required=True)

    p_st = sub.add_parser("stats", help="check invariants on results JSON")
    p_st.add_argument("--results", required=True)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "gen":
            return _cmd_gen(args)
        if args.command == "run":
            return _cmd_run(args)
        if args.command == "verify":
            return _cmd_verify(args)
        return _cmd_stats(args)
    except (ValueError, RuntimeError, ParseError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
