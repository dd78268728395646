"""Command line entry point: gen, recover, thresholds, sweep, check-bounds.

Every subcommand is deterministic given its seed: JSON goes out with sorted
keys, floats are written with ``repr`` and wall-clock times only reach
stderr.  The thread count comes from ``--threads`` or ``HIDDENCOMM_THREADS``.
"""

from __future__ import annotations

import argparse
import itertools
import json
import logging
import sys
import time
from pathlib import Path

import numpy as np

from . import harness
from .cleanup import CleanupConfig, clean_up
from .dists import parse_pair
from .estimators import DEFAULT_BUDGET, DEFAULT_RESTARTS, METHODS, estimate
from .model import DiagMode, llr_matrix, read_instance, sample_instance, write_instance
from .thresholds import threshold_report

log = logging.getLogger("hiddencomm")


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def _meta(config: dict, seed) -> dict:
    return harness.output_header(config, seed)


def cmd_gen(args) -> int:
    pair = parse_pair(args.pair)
    rng = np.random.default_rng(args.seed)
    inst = sample_instance(args.n, args.K, pair, rng, args.diag, seed=args.seed)
    config = {"command": "gen", "n": args.n, "K": args.K, "pair": pair.to_dict(),
              "diag_mode": args.diag, "payload": args.payload}
    meta = _meta(config, args.seed)
    meta.pop("config")  # the instance header already carries every parameter
    write_instance(inst, args.out, args.payload, meta=meta)
    return 0


def cmd_recover(args) -> int:
    inst = read_instance(args.instance)
    pair = parse_pair(args.pair) if args.pair else None
    K = args.K or inst.K
    rng = np.random.default_rng(args.seed)
    opts = {"budget": args.budget, "restarts": args.restarts}
    result: dict = {}
    if args.method == "cleanup":
        cfg = CleanupConfig(delta=args.delta, weak_method=args.weak, estimator_options=opts)
        res = clean_up(inst, K, pair, cfg, rng)
        est = res.estimate
        result["cleanup"] = {
            "delta": args.delta,
            "weak_method": args.weak,
            "blocks": len(res.partition.blocks),
            "block_sizes": [len(b) for b in res.partition.blocks],
            "rounded": res.partition.rounded,
            "target_size": res.target_size,
            "voting_threshold": res.voting_threshold,
            "block_symdiff": list(res.block_symdiff) if res.block_symdiff is not None else None,
        }
    else:
        est = estimate(llr_matrix(inst, pair), K, args.method, rng, **opts)
    result.update(est.as_dict())
    if len(inst.community):
        sd = len(set(inst.community.tolist()) ^ set(est.community_hat.tolist()))
        result["d_H"] = sd
        result["exact"] = sd == 0
    config = {"command": "recover", "instance": Path(args.instance).name, "K": K,
              "method": args.method, "delta": args.delta, "weak": args.weak, **opts}
    result["meta"] = _meta(config, args.seed)
    _emit(_json(result), args.out)
    return 0


def cmd_thresholds(args) -> int:
    pair = parse_pair(args.pair)
    rep = threshold_report(args.n, args.K, pair, args.diag).as_dict()
    rep["meta"] = _meta({"command": "thresholds", "n": args.n, "K": args.K,
                         "pair": pair.to_dict(), "diag_mode": args.diag}, None)
    _emit(_json(rep), args.out)
    return 0


def cmd_sweep(args) -> int:
    config = harness.SweepConfig.from_dict(json.loads(Path(args.config).read_text()))
    if args.seed is not None:
        config.master_seed = args.seed
    t0 = time.perf_counter()
    rows = harness.phase_diagram(config, threads=args.threads)
    for r in rows:
        if r["error"]:
            log.warning("point %s failed: %s", r["point"], r["error"])
    log.info("sweep: %d points in %.2fs", len(rows), time.perf_counter() - t0)
    header = harness.output_header(config.as_dict(), config.master_seed)
    _emit(harness.table_to_csv(rows, header), args.out)
    return 0


def cmd_check_bounds(args) -> int:
    pair = parse_pair(args.pair)
    rng = np.random.default_rng(args.seed)
    rows = []
    for n, gamma, delta in itertools.product(args.n, args.gamma, args.delta):
        rep = harness.verify_bounds(pair, n, gamma, delta, args.reps, rng,
                                    method=args.mc, level=args.level)
        rows.append(rep.row())
    config = {"command": "check-bounds", "pair": pair.to_dict(), "n": args.n,
              "gamma": args.gamma, "delta": args.delta, "reps": args.reps,
              "mc": args.mc, "level": args.level}
    _emit(harness.table_to_csv(rows, harness.output_header(config, args.seed)), args.out)
    return 0 if all(r["holds"] for r in rows) else 3


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="hiddencomm", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="sample an instance and write it to a file")
    g.add_argument("--n", type=int, required=True)
    g.add_argument("--K", type=int, required=True)
    g.add_argument("--pair", required=True, help='JSON, e.g. {"kind":"gaussian","mu":1.0}')
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--diag", choices=[m.value for m in DiagMode], default="zero")
    g.add_argument("--payload", choices=["csv", "binary"], default="csv")
    g.add_argument("--out", required=True)
    g.set_defaults(func=cmd_gen)

    r = sub.add_parser("recover", help="estimate the community of an instance file")
    r.add_argument("--instance", required=True)
    r.add_argument("--method", choices=[*METHODS, "cleanup"], default="exhaustive")
    r.add_argument("--K", type=int, default=None, help="community size (default: from file)")
    r.add_argument("--pair", default=None, help="override the pair stored in the file")
    r.add_argument("--delta", type=float, default=1.0 / 3.0)
    r.add_argument("--weak", choices=list(METHODS), default="exhaustive")
    r.add_argument("--seed", type=int, default=0)
    r.add_argument("--budget", type=int, default=DEFAULT_BUDGET)
    r.add_argument("--restarts", type=int, default=DEFAULT_RESTARTS)
    r.add_argument("--out", default=None)
    r.set_defaults(func=cmd_recover)

    t = sub.add_parser("thresholds", help="weak/exact recovery margins as JSON")
    t.add_argument("--n", type=int, required=True)
    t.add_argument("--K", type=int, required=True)
    t.add_argument("--pair", required=True)
    t.add_argument("--diag", choices=[m.value for m in DiagMode], default="zero")
    t.add_argument("--out", default=None)
    t.set_defaults(func=cmd_thresholds)

    s = sub.add_parser("sweep", help="phase-diagram sweep from a JSON config, CSV out")
    s.add_argument("--config", required=True)
    s.add_argument("--out", default=None)
    s.add_argument("--seed", type=int, default=None, help="override master_seed")
    s.add_argument("--threads", type=int, default=None)
    s.set_defaults(func=cmd_sweep)

    c = sub.add_parser("check-bounds", help="Monte Carlo tail vs analytic bounds, CSV out")
    c.add_argument("--pair", required=True)
    c.add_argument("--n", type=int, nargs="+", required=True)
    c.add_argument("--gamma", type=float, nargs="+", required=True)
    c.add_argument("--delta", type=float, nargs="+", required=True)
    c.add_argument("--reps", type=int, default=100_000)
    c.add_argument("--seed", type=int, default=0)
    c.add_argument("--mc", choices=["tilted", "plain"], default="tilted")
    c.add_argument("--level", type=float, default=0.99)
    c.add_argument("--threads", type=int, default=None, help="accepted for uniformity")
    c.add_argument("--out", default=None)
    c.set_defaults(func=cmd_check_bounds)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        return args.func(args)
    except (ValueError, RuntimeError, OSError, KeyError) as exc:
        print(f"hiddencomm {args.command}: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
