"""Experiment runner: verification suite and reproducible sweeps.

Sweeps write CSV files whose rows all carry the base seed and a hash of the
full configuration, so any row can be traced back to an exact rerun.
Identical configuration and seed reproduce byte-identical files.

Exit codes: 0 success, 1 verification failure, 2 configuration error.
"""

from __future__ import annotations

import argparse
import concurrent.futures
import csv
import hashlib
import json
import sys
from dataclasses import asdict, dataclass, replace
from pathlib import Path

from . import checks
from .baselines import c_threshold_policy, ski_rental_instance
from .core import CostModel
from .netsim import (LineNetwork, TrafficSpec, empirical_ratio,
                     optimized_threshold_policy, run_line_network,
                     run_single_relay, sub_optimized_thresholds)
from .primaldual import competitive_bound

RESULT_HEADER = ["p2", "C", "policy", "mean_cost", "mean_ratio", "coded_count",
                 "seed_base", "config_hash"]
LINE_HEADER = ["relays"] + RESULT_HEADER
SKI_HEADER = ["T", "C", "mean_ratio", "bound", "seed_base", "config_hash"]


@dataclass(frozen=True)
class ExperimentConfig:
    """One sweep's full parameterization; hashable into every output row."""

    kind: str = "single-relay-sweep"
    c_grid: tuple[float, ...] = (5, 10, 15)
    p1: float = 0.5
    p2_grid: tuple[float, ...] = (0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9)
    sigma2_grid: tuple[float, ...] = (0.0,)
    relays_grid: tuple[int, ...] = (2, 3, 4, 5, 6)
    horizon: int = 10_000
    replications: int = 20
    u_draws: int = 10_000
    seed: int = 1
    out_dir: str = "results"

    def __post_init__(self):
        kinds = ("single-relay-sweep", "line-network-sweep", "ski-rental-sweep")
        if self.kind not in kinds:
            raise ValueError(f"kind must be one of {kinds}")
        for name in ("c_grid", "p2_grid", "sigma2_grid", "relays_grid"):
            if not getattr(self, name):
                raise ValueError(f"{name} must not be empty")
        if self.replications < 1 or self.horizon < 1 or self.u_draws < 1:
            raise ValueError("replications, horizon and u_draws must be positive")

    def config_hash(self) -> str:
        blob = json.dumps(asdict(self), sort_keys=True, default=str)
        return hashlib.sha256(blob.encode()).hexdigest()[:12]

    @classmethod
    def from_json(cls, path: str) -> "ExperimentConfig":
        with open(path) as fh:
            raw = json.load(fh)
        for key in ("c_grid", "p2_grid", "sigma2_grid", "relays_grid"):
            if key in raw:
                raw[key] = tuple(raw[key])
        return cls(**raw)


def _cost_model(c: float) -> CostModel:
    return CostModel(int(c) if float(c).is_integer() else float(c))


def _fmt(value) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _write_csv(path: Path, header: list[str], rows: list[list]) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])


def single_relay_point(cfg: ExperimentConfig, c: float, p2: float,
                       sigma2: float) -> list[list]:
    """Evaluate the three policies on one (cost, p2, sigma2) grid point.

    The threshold search trains on its own replication stream; all policies
    are then evaluated on a common stream.  Ratios are relative to the
    optimized-threshold policy's mean cost.
    """
    cm = _cost_model(c)
    spec = TrafficSpec(kind="bernoulli", horizon=cfg.horizon, p1=cfg.p1, p2=p2,
                       sigma2=sigma2, seed=cfg.seed)
    opt_policy, _table = optimized_threshold_policy(spec, cm, cfg.replications)
    runs = [
        ("proposed", run_single_relay(spec, cm, "proposed", cfg.replications)),
        ("optimized-threshold",
         run_single_relay(spec, cm, opt_policy, cfg.replications)),
        ("c-threshold",
         run_single_relay(spec, cm, c_threshold_policy(cm), cfg.replications)),
    ]
    base = runs[1][1].mean_cost
    chash = cfg.config_hash()
    rows = []
    for name, res in runs:
        ratio = res.mean_cost / base if base else 1.0
        rows.append([p2, c, name, res.mean_cost, ratio, res.mean_coded,
                     cfg.seed, chash])
    return rows


def _single_point_worker(args) -> list[list]:
    cfg_dict, c, p2, sigma2 = args
    return single_relay_point(ExperimentConfig(**cfg_dict), c, p2, sigma2)


def sweep_single_relay(cfg: ExperimentConfig, jobs: int = 1) -> list[Path]:
    points = [(c, p2, s2) for s2 in cfg.sigma2_grid for c in cfg.c_grid
              for p2 in cfg.p2_grid]
    if jobs > 1:
        payload = [(asdict(cfg), c, p2, s2) for c, p2, s2 in points]
        with concurrent.futures.ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_single_point_worker, payload))
    else:
        results = [single_relay_point(cfg, c, p2, s2) for c, p2, s2 in points]
    out = Path(cfg.out_dir)
    written = []
    for s2 in cfg.sigma2_grid:
        rows = [row for (c, p2, ps2), block in zip(points, results)
                for row in block if ps2 == s2]
        path = out / f"fig2_ratio_sigma{_fmt(float(s2))}.csv"
        _write_csv(path, RESULT_HEADER, rows)
        written.append(path)
    if 0.0 in cfg.sigma2_grid:
        rows = [row for (c, p2, ps2), block in zip(points, results)
                for row in block if ps2 == 0.0]
        path = out / "fig3_coded.csv"
        _write_csv(path, RESULT_HEADER, rows)
        written.append(path)
    return written


def sweep_line_network(cfg: ExperimentConfig) -> list[Path]:
    chash = cfg.config_hash()
    rows = []
    for c in cfg.c_grid:
        cm = _cost_model(c)
        for p2 in cfg.p2_grid:
            for r in cfg.relays_grid:
                net = LineNetwork(relay_count=r, cost_models=(cm,) * r,
                                  p1=cfg.p1, p2=p2, sigma2=cfg.sigma2_grid[0],
                                  horizon=cfg.horizon, seed=cfg.seed)
                (t1, t2), _table = sub_optimized_thresholds(net, cfg.replications)
                from .baselines import ThresholdPolicy
                shared = [ThresholdPolicy(t1, t2, max_tx=1)] * r
                base = run_line_network(net, shared, cfg.replications)
                prop = run_line_network(net, "proposed", cfg.replications)
                cth = run_line_network(
                    net, [c_threshold_policy(cm)] * r, cfg.replications)
                for name, res in [("proposed", prop),
                                  ("sub-optimized-threshold", base),
                                  ("c-threshold", cth)]:
                    ratio = res.mean_total / base.mean_total if base.mean_total else 1.0
                    rows.append([r, p2, c, name, res.mean_total, ratio,
                                 res.mean_coded, cfg.seed, chash])
    path = Path(cfg.out_dir) / "fig4_line.csv"
    _write_csv(path, LINE_HEADER, rows)
    return [path]


def sweep_ski_rental(cfg: ExperimentConfig) -> list[Path]:
    chash = cfg.config_hash()
    rows = []
    for c in cfg.c_grid:
        cm = _cost_model(c)
        bound = float(competitive_bound(cm))
        horizon = 3 * int(c)
        for t in range(1, horizon + 1):
            stats = empirical_ratio([ski_rental_instance(t)], cm,
                                    u_draws=cfg.u_draws, seed=cfg.seed,
                                    model="one-sided")
            rows.append([t, c, stats.per_pattern[0], bound, cfg.seed, chash])
    path = Path(cfg.out_dir) / "ski_ratio.csv"
    _write_csv(path, SKI_HEADER, rows)
    return [path]


def render_svg(csv_path: Path, cfg: ExperimentConfig) -> Path:
    """Optional static chart of ratio versus p2, one line per (C, policy)."""
    import matplotlib
    matplotlib.use("Agg")
    matplotlib.rcParams["svg.hashsalt"] = cfg.config_hash()
    import matplotlib.pyplot as plt

    series: dict[tuple, list[tuple[float, float]]] = {}
    with open(csv_path) as fh:
        for row in csv.DictReader(fh):
            key = (row["C"], row["policy"])
            series.setdefault(key, []).append(
                (float(row["p2"]), float(row["mean_ratio"])))
    fig, ax = plt.subplots(figsize=(6, 4))
    for (c, policy), pts in sorted(series.items()):
        pts.sort()
        ax.plot([p for p, _ in pts], [r for _, r in pts],
                marker="o", label=f"C={c} {policy}")
    ax.set_xlabel("p2")
    ax.set_ylabel("cost ratio vs optimized threshold")
    ax.legend(fontsize=7)
    out = csv_path.with_suffix(".svg")
    fig.savefig(out, format="svg", metadata={"Date": None})
    plt.close(fig)
    return out


def cmd_verify(args) -> int:
    results = checks.run_all(quick=not args.full, seed=args.seed)
    for r in results:
        print(r.line())
    failed = [r for r in results if not r.passed]
    print(f"{len(results) - len(failed)}/{len(results)} checks passed")
    return 1 if failed else 0


def cmd_sweep(args) -> int:
    try:
        cfg = _build_config(args)
    except (ValueError, TypeError, OSError, json.JSONDecodeError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    if cfg.kind == "single-relay-sweep":
        paths = sweep_single_relay(cfg, jobs=args.jobs)
    elif cfg.kind == "line-network-sweep":
        paths = sweep_line_network(cfg)
    else:
        paths = sweep_ski_rental(cfg)
    for p in paths:
        print(f"wrote {p}")
    if args.svg:
        for p in paths:
            if p.name.startswith("fig2"):
                print(f"wrote {render_svg(p, cfg)}")
    return 0


def _parse_grid(text: str, cast) -> tuple:
    return tuple(cast(v) for v in text.split(","))


def _build_config(args) -> ExperimentConfig:
    cfg = ExperimentConfig.from_json(args.config) if args.config else ExperimentConfig()
    updates = {}
    if args.kind:
        updates["kind"] = args.kind
    if args.c:
        updates["c_grid"] = _parse_grid(args.c, float)
    if args.p1 is not None:
        updates["p1"] = args.p1
    if args.p2:
        updates["p2_grid"] = _parse_grid(args.p2, float)
    if args.sigma2:
        updates["sigma2_grid"] = _parse_grid(args.sigma2, float)
    if args.relays:
        updates["relays_grid"] = _parse_grid(args.relays, int)
    if args.horizon is not None:
        updates["horizon"] = args.horizon
    if args.reps is not None:
        updates["replications"] = args.reps
    if args.u_draws is not None:
        updates["u_draws"] = args.u_draws
    if args.seed is not None:
        updates["seed"] = args.seed
    if args.out:
        updates["out_dir"] = args.out
    return replace(cfg, **updates) if updates else cfg


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="relaysched",
        description="Delay-aware network-coding relay scheduling experiments")
    sub = parser.add_subparsers(dest="command", required=True)

    v = sub.add_parser("verify", help="run golden instances and property suites")
    v.add_argument("--full", action="store_true",
                   help="use the large instance counts (minutes, not seconds)")
    v.add_argument("--seed", type=int, default=20260810)
    v.set_defaults(func=cmd_verify)

    s = sub.add_parser("sweep", help="run a reproducible experiment sweep")
    s.add_argument("--kind", choices=["single-relay-sweep", "line-network-sweep",
                                      "ski-rental-sweep"])
    s.add_argument("--config", help="JSON config file; flags override its fields")
    s.add_argument("--c", help="comma-separated transmission costs")
    s.add_argument("--p1", type=float)
    s.add_argument("--p2", help="comma-separated queue-2 arrival means")
    s.add_argument("--sigma2", help="comma-separated traffic noise variances")
    s.add_argument("--relays", help="comma-separated relay counts")
    s.add_argument("--horizon", type=int)
    s.add_argument("--reps", type=int)
    s.add_argument("--u-draws", dest="u_draws", type=int)
    s.add_argument("--seed", type=int)
    s.add_argument("--out")
    s.add_argument("--svg", action="store_true", help="also render line charts")
    s.add_argument("--jobs", type=int, default=1,
                   help="worker processes for grid points")
    s.set_defaults(func=cmd_sweep)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
