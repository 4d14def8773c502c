"""Size sweeps across policies, CSV output and the four summary charts."""

from __future__ import annotations

import csv
import math
import os
from collections import defaultdict
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields, replace

from .errors import ConfigError, SimulationError
from .policies import POLICY_NAMES
from .simengine import EngineConfig, Metrics, run

CSV_HEADER = (
    "policy,db_initial_size,seed,mean_response_time_s,mean_txn_ios_per_txn,"
    "mean_clust_ios_per_txn,mean_pages_used,peak_pages,reorg_count"
)

DEFAULT_SIZES = (500, 1000, 2000, 4000)

# metric column -> (file stem, axis label)
CHARTS = {
    "mean_response_time_s": ("response_time", "mean response time (s)"),
    "mean_txn_ios_per_txn": ("txn_ios", "transaction I/Os per transaction"),
    "mean_clust_ios_per_txn": ("clust_ios", "clustering I/Os per transaction"),
    "mean_pages_used": ("pages_used", "disk pages used"),
}


@dataclass
class ExperimentSpec:
    db_sizes: list[int] = field(default_factory=lambda: list(DEFAULT_SIZES))
    policies: list[str] = field(default_factory=lambda: ["cactis", "orion", "ck", "null"])
    replications: int = 1
    base_seed: int = 0
    template: EngineConfig = field(default_factory=EngineConfig)
    out_dir: str = "results"
    workers: int = 1

    def validate(self) -> None:
        if not self.db_sizes:
            raise ConfigError("db_sizes must not be empty")
        if any(b <= a for a, b in zip(self.db_sizes, self.db_sizes[1:])):
            raise ConfigError("db_sizes must be strictly ascending")
        if min(self.db_sizes) < 1:
            raise ConfigError("db sizes must be >= 1")
        if not self.policies:
            raise ConfigError("policies must not be empty")
        for p in self.policies:
            if p not in POLICY_NAMES:
                raise ConfigError(f"unknown policy {p!r}")
        if len(set(self.policies)) != len(self.policies):
            raise ConfigError("policies are listed twice")
        if self.replications < 1:
            raise ConfigError("replications must be >= 1")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")
        self.template.validate()

    def cells(self) -> list[tuple[str, int, int]]:
        """(policy, size, seed) in output order."""
        return [
            (p, n, self.base_seed + r)
            for p in self.policies
            for n in self.db_sizes
            for r in range(self.replications)
        ]


@dataclass(frozen=True)
class ResultRow:
    policy: str
    db_initial_size: int
    seed: int
    mean_response_time_s: float
    mean_txn_ios_per_txn: float
    mean_clust_ios_per_txn: float
    mean_pages_used: float
    peak_pages: int
    reorg_count: int

    def __post_init__(self):
        for f in fields(self)[3:]:
            v = getattr(self, f.name)
            if not math.isfinite(v) or v < 0:
                raise ValueError(f"{f.name} must be finite and >= 0, got {v}")

    @classmethod
    def from_metrics(cls, m: Metrics) -> ResultRow:
        return cls(
            m.policy,
            m.db_initial_size,
            m.seed,
            m.mean_response_time,
            m.mean_txn_ios,
            m.mean_clust_ios,
            m.mean_pages_used,
            m.peak_pages,
            m.reorg_count,
        )

    def as_strings(self) -> list[str]:
        # repr keeps every float bit so the CSV parses back to the same row
        return [self.policy, str(self.db_initial_size), str(self.seed)] + [
            repr(getattr(self, f.name)) for f in fields(self)[3:]
        ]


def cell_config(template: EngineConfig, policy: str, size: int, seed: int) -> EngineConfig:
    return replace(
        template,
        seed=seed,
        database=replace(template.database, initial_objects=size),
        policy=replace(template.policy, name=policy),
    )


def run_cell(template: EngineConfig, policy: str, size: int, seed: int) -> ResultRow:
    return ResultRow.from_metrics(run(cell_config(template, policy, size, seed)))


def _run_cell_args(args):
    return run_cell(*args)


def run_experiment(spec: ExperimentSpec, progress=None) -> list[ResultRow]:
    """Run every (policy, size, replication) cell; rows come back in that order."""
    spec.validate()
    cells = spec.cells()
    rows: list[ResultRow] = []
    if spec.workers == 1:
        for cell in cells:
            try:
                row = run_cell(spec.template, *cell)
            except SimulationError as e:
                raise SimulationError(f"cell policy={cell[0]} size={cell[1]} seed={cell[2]}: {e}") from e
            rows.append(row)
            if progress:
                progress(row)
        return rows
    with ProcessPoolExecutor(max_workers=spec.workers) as pool:
        futures = [pool.submit(_run_cell_args, (spec.template, *cell)) for cell in cells]
        for cell, fut in zip(cells, futures):
            try:
                row = fut.result()
            except SimulationError as e:
                raise SimulationError(f"cell policy={cell[0]} size={cell[1]} seed={cell[2]}: {e}") from e
            rows.append(row)
            if progress:
                progress(row)
    return rows


def emit_csv(rows: list[ResultRow], path) -> None:
    if not rows:
        raise ValueError("no rows to write")
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_HEADER.split(","))
        for r in rows:
            w.writerow(r.as_strings())


def read_csv(path) -> list[ResultRow]:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if ",".join(header) != CSV_HEADER:
            raise ValueError(f"unexpected CSV header {header}")
        rows = []
        for rec in reader:
            p, n, s, resp, tio, cio, pages, peak, reorgs = rec
            rows.append(
                ResultRow(p, int(n), int(s), float(resp), float(tio), float(cio), float(pages), int(peak), int(reorgs))
            )
    return rows


def aggregate(rows: list[ResultRow], metric: str) -> dict[str, list[tuple[int, float]]]:
    """Per policy, the (size, mean over replications) series sorted by size."""
    acc = defaultdict(list)
    for r in rows:
        acc[r.policy, r.db_initial_size].append(float(getattr(r, metric)))
    series = defaultdict(list)
    for (p, n), vals in acc.items():
        series[p].append((n, math.fsum(vals) / len(vals)))
    return {p: sorted(pts) for p, pts in series.items()}


def emit_plots(rows: list[ResultRow], out_dir) -> list[str]:
    """Write one SVG line chart per metric; returns the file paths."""
    if not rows:
        raise ValueError("no rows to plot")
    import matplotlib

    matplotlib.use("Agg")
    matplotlib.rcParams["svg.hashsalt"] = "ooclust"
    import matplotlib.pyplot as plt

    os.makedirs(out_dir, exist_ok=True)
    policies = list(dict.fromkeys(r.policy for r in rows))
    paths = []
    for metric, (stem, label) in CHARTS.items():
        series = aggregate(rows, metric)
        fig, ax = plt.subplots(figsize=(6, 4))
        for p in policies:
            xs, ys = zip(*series[p])
            ax.plot(xs, ys, marker="o", label=p)
        ax.set_xlabel("database initial size (objects)")
        ax.set_ylabel(label)
        if metric == "mean_response_time_s" and min(y for s in series.values() for _, y in s) > 0:
            ax.set_yscale("log")
        ax.grid(True, alpha=0.3)
        ax.legend()
        fig.tight_layout()
        path = os.path.join(out_dir, f"{stem}.svg")
        # fixed metadata so repeated sweeps give identical files
        fig.savefig(path, format="svg", metadata={"Date": None})
        plt.close(fig)
        paths.append(path)
    return paths
