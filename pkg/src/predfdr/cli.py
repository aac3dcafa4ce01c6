"""Command-line entry points: simulate, detect, bench, validate.

Every data-producing subcommand writes a manifest.json next to its outputs
holding the fully resolved configuration; --from-manifest replays it.
Exit codes: 0 success, 1 invalid input, 2 internal property failure.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .bfdr import BfdrConfig
from .bench import BenchSpec, reference_spec, run_bench, write_bench_csv
from .pipeline import (
    DIFFUSE_PRIOR,
    DetectConfig,
    detect,
    lagged_scores,
    write_report,
    write_scores_csv,
)
from .predictive import NigParams
from .simgen import SimSpec, gen_data, load_matrix_csv, save_sim
from .validation import run_checks

OUT_ENV = "PREDFDR_OUT"


def parse_level_grid(spec: str):
    """Parse a threshold grid: '2^-1..2^-15', '2^-3', or comma floats."""
    spec = spec.strip()

    def one(tok: str) -> float:
        tok = tok.strip()
        if "^" in tok:
            base, expo = tok.split("^")
            return float(base) ** float(expo)
        return float(tok)

    if ".." in spec:
        lo_tok, hi_tok = spec.split("..")
        for tok in (lo_tok, hi_tok):
            if "^" not in tok:
                raise ValueError(f"range grid endpoints must use base^exponent: {spec!r}")
        b1, e1 = lo_tok.split("^")
        b2, e2 = hi_tok.split("^")
        if float(b1) != float(b2):
            raise ValueError("range grid endpoints must share a base")
        e1i, e2i = int(e1), int(e2)
        step = 1 if e2i >= e1i else -1
        return [float(b1) ** e for e in range(e1i, e2i + step, step)]
    return [one(tok) for tok in spec.split(",") if tok.strip()]


def _parse_pair(text: str, n: int, name: str):
    parts = [float(p) for p in text.split(",")]
    if len(parts) != n:
        raise ValueError(f"{name} expects {n} comma-separated values")
    return tuple(parts)


class _Parser(argparse.ArgumentParser):
    # usage problems are invalid input, not internal failures
    def error(self, message):
        self.print_usage(sys.stderr)
        raise SystemExit(1)


def _write_manifest(out_dir: Path, subcommand: str, config: dict, outputs: dict) -> None:
    manifest = {
        "tool": "predfdr",
        "version": __version__,
        "subcommand": subcommand,
        "config": config,
        "outputs": sorted(outputs),
    }
    (out_dir / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n")


def _run_simulate(config: dict) -> int:
    out = Path(config["out"])
    spec = SimSpec(
        m=config["m"],
        t_len=config["t_len"],
        lag=config["lag"],
        outlier_rate=config["rate"],
        mean_params=tuple(config["mean_params"]),
        sd_inlier_params=tuple(config["sd_inlier"]),
        sd_outlier_params=tuple(config["sd_outlier"]),
        recenter_outliers=config["recenter"],
        seed=config["seed"],
    )
    paths = save_sim(gen_data(spec), out)
    _write_manifest(out, "simulate", config, paths)
    print(f"wrote {', '.join(sorted(paths))} to {out}")
    return 0


def _run_detect(config: dict) -> int:
    out = Path(config["out"])
    values = load_matrix_csv(config["data"])
    truth = None
    if config["truth"]:
        truth = load_matrix_csv(config["truth"]).astype(bool)
        if truth.shape != values.shape:
            raise ValueError("truth matrix must match data shape")
    else:
        print("no truth supplied; metrics.csv and diff.csv will be skipped", file=sys.stderr)
    lag = config["lag"]
    prior = NigParams(*config["prior"])
    qs = config["q_values"]
    scores = lagged_scores(
        values, prior, lag, two_sided=config["two_sided"], threads=config["threads"]
    )
    base = (
        None
        if config["baseline_etas"] == "match"
        else tuple(parse_level_grid(config["baseline_etas"]))
    )
    cfg = DetectConfig(
        bfdr=BfdrConfig(q=qs[0], a=config["a"], k=config["k"], algorithm=config["algorithm"]),
        prior=prior,
        c1=config["c1"],
        baseline_etas=base,
        orientation=config["orientation"],
    )
    truth_aligned = truth[:, lag:] if truth is not None else None
    report = detect(
        scores, truth_aligned, cfg, q_values=qs, threads=config["threads"], t_offset=lag
    )
    out.mkdir(parents=True, exist_ok=True)
    write_scores_csv(scores, out / "scores.csv", t_offset=lag)
    paths = write_report(report, out)
    paths["scores"] = str(out / "scores.csv")
    _write_manifest(out, "detect", config, paths)
    print(f"scored {scores.shape[1]} timesteps x {scores.shape[0]} series; wrote {out}")
    return 0


def _run_bench(config: dict) -> int:
    out = Path(config["out"])
    if config["paper"]:
        spec = reference_spec(seed=config["seed"])
    else:
        spec = BenchSpec(
            replications=config["replications"],
            m=config["m"],
            a=config["a"],
            q=config["q"],
            k_values=tuple(config["k_values"]),
            seed=config["seed"],
        )
    report = run_bench(spec)
    paths = write_bench_csv(report, out)
    _write_manifest(out, "bench", config, paths)
    for row in report.summary():
        print(
            f"{row['method']:>10s} k={row['k']:>6d} "
            f"total={row['total']:.3f}s mean={row['mean']:.6f}s sd={row['sd']:.6f}s"
        )
    return 0


def _run_validate(config: dict) -> int:
    results = run_checks(full=config["full"], seed=config["seed"])
    failed = False
    for res in results:
        mark = "PASS" if res.passed else "FAIL"
        print(f"{mark} {res.name}: {res.detail}")
        failed |= not res.passed
    return 2 if failed else 0


def build_parser() -> _Parser:
    parser = _Parser(prog="predfdr", description=__doc__)
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="subcommand", required=True)
    default_out = os.environ.get(OUT_ENV, ".")

    p = sub.add_parser("simulate", help="generate a synthetic panel", parents=[])
    p.add_argument("--out", default=default_out)
    p.add_argument("--m", type=int, default=1000)
    p.add_argument("--t", dest="t_len", type=int, default=2000)
    p.add_argument("--lag", type=int, default=30)
    p.add_argument("--rate", type=float, default=0.025)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--mean-params", default="2,8,4", help="base,growth,cycles")
    p.add_argument("--sd-inlier", default="0.5,1.5", help="start,end")
    p.add_argument("--sd-outlier", default="1,3", help="start,end")
    p.add_argument(
        "--recenter",
        action="store_true",
        help="recenter outlier draws onto the signal mean",
    )
    p.add_argument("--from-manifest", default=None)

    p = sub.add_parser("detect", help="score a panel and select thresholds")
    p.add_argument("--data", required=False)
    p.add_argument("--truth", default=None)
    p.add_argument("--out", default=default_out)
    p.add_argument("--lag", type=int, default=30)
    p.add_argument("--prior", default="0,0.0001,0.01,0.01", help="mu0,nu,alpha,beta")
    p.add_argument("--q-grid", default="2^-1..2^-15")
    p.add_argument("--a", type=float, default=2.0)
    p.add_argument("--k", type=int, default=1000)
    p.add_argument("--c1", type=float, default=0.0)
    p.add_argument("--baseline-etas", default="match", help="'match' or a grid spec")
    p.add_argument("--orientation", choices=["null_score", "raw_score"], default="null_score")
    p.add_argument("--algorithm", choices=["looped", "vectorized"], default="vectorized")
    p.add_argument("--two-sided", action="store_true")
    p.add_argument("--threads", type=int, default=os.cpu_count() or 1)
    p.add_argument("--from-manifest", default=None)

    p = sub.add_parser("bench", help="time the two selector implementations")
    p.add_argument("--out", default=default_out)
    p.add_argument("--replications", type=int, default=100)
    p.add_argument("--m", type=int, default=1000)
    p.add_argument("--a", type=float, default=2.0)
    p.add_argument("--q", type=float, default=0.2)
    p.add_argument("--k", default="10000", help="comma-separated grid sizes")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument(
        "--paper",
        action="store_true",
        help="reference configuration: 1500 replications, m=1000, a=2, q=0.2, k=10000",
    )
    p.add_argument("--from-manifest", default=None)

    p = sub.add_parser("validate", help="run the property-check suites")
    p.add_argument("--full", action="store_true")
    p.add_argument("--seed", type=int, default=0)

    return parser


def _config_from_args(args: argparse.Namespace) -> dict:
    if args.subcommand == "simulate":
        return {
            "out": args.out,
            "m": args.m,
            "t_len": args.t_len,
            "lag": args.lag,
            "rate": args.rate,
            "seed": args.seed,
            "mean_params": list(_parse_pair(args.mean_params, 3, "--mean-params")),
            "sd_inlier": list(_parse_pair(args.sd_inlier, 2, "--sd-inlier")),
            "sd_outlier": list(_parse_pair(args.sd_outlier, 2, "--sd-outlier")),
            "recenter": bool(args.recenter),
        }
    if args.subcommand == "detect":
        if not args.data:
            raise ValueError("detect requires --data (or --from-manifest)")
        return {
            "out": args.out,
            "data": args.data,
            "truth": args.truth,
            "lag": args.lag,
            "prior": list(_parse_pair(args.prior, 4, "--prior")),
            "q_values": parse_level_grid(args.q_grid),
            "a": args.a,
            "k": args.k,
            "c1": args.c1,
            "baseline_etas": args.baseline_etas,
            "orientation": args.orientation,
            "algorithm": args.algorithm,
            "two_sided": bool(args.two_sided),
            "threads": args.threads,
        }
    if args.subcommand == "bench":
        return {
            "out": args.out,
            "replications": args.replications,
            "m": args.m,
            "a": args.a,
            "q": args.q,
            "k_values": [int(v) for v in str(args.k).split(",")],
            "seed": args.seed,
            "paper": bool(args.paper),
        }
    return {"full": bool(args.full), "seed": args.seed}


_RUNNERS = {
    "simulate": _run_simulate,
    "detect": _run_detect,
    "bench": _run_bench,
    "validate": _run_validate,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if getattr(args, "from_manifest", None):
            manifest = json.loads(Path(args.from_manifest).read_text())
            sub = manifest["subcommand"]
            config = manifest["config"]
        else:
            sub = args.subcommand
            config = _config_from_args(args)
        return _RUNNERS[sub](config)
    except SystemExit as exc:
        return int(exc.code or 0)
    except (ValueError, OSError, KeyError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except RuntimeError as exc:
        print(f"internal failure: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
