"""Clock-time benchmark comparing the two selector implementations.

Every replication draws a fresh uniform score batch, runs both selectors on
the identical batch inside a monotonic-clock window that covers only the
selector call, and aborts on any disagreement between the two results.
"""
from __future__ import annotations

import csv
import math
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Tuple

import numpy as np

from .bfdr import BfdrConfig, ScoreBatch, gbfdr_looped, gbfdr_vectorized

__all__ = ["BenchSpec", "BenchRun", "BenchReport", "run_bench", "reference_spec"]

_METHODS = ("looped", "vectorized")


@dataclass(frozen=True)
class BenchSpec:
    """Benchmark settings; k_values are benchmarked in order."""

    replications: int = 100
    m: int = 1000
    a: float = 2.0
    q: float = 0.2
    k_values: Tuple[int, ...] = (10000,)
    seed: int = 0
    warmup: int = 5

    def __post_init__(self) -> None:
        if self.replications < 1 or self.m < 1 or self.warmup < 0:
            raise ValueError("BenchSpec requires positive replications and m")
        object.__setattr__(self, "k_values", tuple(int(k) for k in self.k_values))
        if any(k < 1 for k in self.k_values):
            raise ValueError("k values must be >= 1")


def reference_spec(seed: int = 0) -> BenchSpec:
    """The headline configuration: 1500 replications at m=1000, a=2, q=0.2,
    k=10000."""
    return BenchSpec(replications=1500, m=1000, a=2.0, q=0.2, k_values=(10000,), seed=seed)


@dataclass(frozen=True)
class BenchRun:
    method: str
    k: int
    replication: int
    seconds: float
    eta_index: int  # -1 when infeasible


@dataclass
class BenchReport:
    spec: BenchSpec
    runs: List[BenchRun] = field(default_factory=list)

    def summary(self) -> List[dict]:
        """Per (method, k): total, mean and sd of the run times."""
        out = []
        for k in self.spec.k_values:
            for method in _METHODS:
                secs = [r.seconds for r in self.runs if r.method == method and r.k == k]
                n = len(secs)
                mean = sum(secs) / n
                var = sum((x - mean) ** 2 for x in secs) / (n - 1) if n > 1 else 0.0
                out.append(
                    {
                        "method": method,
                        "k": k,
                        "total": sum(secs),
                        "mean": mean,
                        "sd": math.sqrt(var),
                    }
                )
        return out

    def eta_buckets(self, n_buckets: int = 10) -> List[dict]:
        """Mean run time bucketed by the returned threshold index."""
        out = []
        for k in self.spec.k_values:
            edges = [int(round(k * i / n_buckets)) for i in range(n_buckets + 1)]
            for method in _METHODS:
                rs = [r for r in self.runs if r.method == method and r.k == k]
                for bi in range(n_buckets):
                    lo, hi = edges[bi], edges[bi + 1]
                    bucket = [
                        r.seconds
                        for r in rs
                        if r.eta_index >= 0 and lo <= r.eta_index < hi
                    ]
                    if bucket:
                        out.append(
                            {
                                "method": method,
                                "k": k,
                                "index_lo": lo,
                                "index_hi": hi,
                                "n": len(bucket),
                                "mean": sum(bucket) / len(bucket),
                            }
                        )
        return out

    def median_seconds(self) -> dict:
        """(method, k) -> median run time; used for the scaling check."""
        out = {}
        for k in self.spec.k_values:
            for method in _METHODS:
                secs = sorted(
                    r.seconds for r in self.runs if r.method == method and r.k == k
                )
                out[(method, k)] = float(np.median(secs))
        return out


def run_bench(spec: BenchSpec) -> BenchReport:
    """Run the benchmark; single-threaded, timing only the selector calls.

    The two selectors see the identical batch each replication and their
    results are compared after the timed region; any mismatch aborts the
    benchmark.
    """
    report = BenchReport(spec)
    rng = np.random.default_rng(spec.seed)
    for k in spec.k_values:
        cfg = BfdrConfig(q=spec.q, a=spec.a, k=k, algorithm="vectorized")
        for _ in range(spec.warmup):
            batch = ScoreBatch(rng.random(spec.m))
            gbfdr_looped(batch, cfg)
            gbfdr_vectorized(batch, cfg)
        for rep in range(spec.replications):
            batch = ScoreBatch(rng.random(spec.m))
            t0 = time.perf_counter()
            res_l = gbfdr_looped(batch, cfg)
            t1 = time.perf_counter()
            res_v = gbfdr_vectorized(batch, cfg)
            t2 = time.perf_counter()
            if (res_l.index, res_l.feasible) != (res_v.index, res_v.feasible):
                raise RuntimeError(
                    f"selector mismatch at k={k} rep={rep}: "
                    f"looped={res_l} vectorized={res_v}"
                )
            idx = res_l.index if res_l.feasible else -1
            report.runs.append(BenchRun("looped", k, rep, t1 - t0, idx))
            report.runs.append(BenchRun("vectorized", k, rep, t2 - t1, idx))
    return report


def write_bench_csv(report: BenchReport, out_dir) -> dict:
    """Write bench.csv (per run) and bench_summary.csv (per method and k)."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {"bench": out / "bench.csv", "summary": out / "bench_summary.csv"}
    with open(paths["bench"], "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["method", "k", "replication", "seconds", "eta_index"])
        for r in report.runs:
            wr.writerow([r.method, r.k, r.replication, repr(r.seconds), r.eta_index])
    with open(paths["summary"], "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["method", "k", "total", "mean", "sd"])
        for row in report.summary():
            wr.writerow(
                [row["method"], row["k"], repr(row["total"]), repr(row["mean"]), repr(row["sd"])]
            )
    return {k: str(v) for k, v in paths.items()}
