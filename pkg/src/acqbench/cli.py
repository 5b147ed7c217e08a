"""Command line front end.

Subcommands: run (one seed), sweep (many seeds, optional process pool),
compare (heatmap over a results tree), ablate (parameter sweep with
accuracy-vs-cost curves), toy (built-in checkerboard demo comparing random,
least-confident, and k-centers selection).

Results are laid out as output_dir/<strategy>/<seed>/{record.csv,
summary.json}, so `compare` can reconstruct everything from the tree alone.
All artifact writes are atomic. Commands exit 0 only after every artifact
landed; config violations exit nonzero naming the offending key.
"""

from __future__ import annotations

import argparse
import copy
import csv
import io
import json
import os
import sys
from pathlib import Path

import numpy as np

from .config import build_datasets, build_experiment, validate_config
from .evaluation import (
    DEFAULT_CRITICAL,
    AccuracyTable,
    accuracy_table,
    compute_heatmap,
    heatmap_csv_text,
    heatmap_svg_text,
)
from .fileio import atomic_write_text
from .simulator import RunRecord, read_record_csv, sweep, write_record
from .strategies import build_strategy

TOY_STRATEGIES = (
    {"kind": "random"},
    {"kind": "least_confident"},
    {"kind": "k_centers"},
)


def toy_config(output_dir: str, seeds: list[int], rounds: int = 20) -> dict:
    """Built-in checkerboard preset tuned so coverage-based selection wins.

    The small per-round pool draw (40 candidates over 36 cells) matters: it
    forces farthest-first picks toward cluster interiors, and the 500-epoch
    budget is where evenly allocated label sets train reliably while uneven
    random draws still stall.
    """
    return validate_config(
        {
            "dataset": {
                "kind": "grid",
                "params": {"cells_per_side": 6, "n_per_cell": 100, "spread": 0.12, "seed": 7},
            },
            "model": {"hidden": 96, "dropout": 0.15},
            "train": {"lr": 0.1, "epochs": 500, "minibatch": 32},
            "mc": {"n_passes": 5},
            "al": {"M": 10, "T": rounds, "b": 10, "pool_size": 40},
            "strategy": {"kind": "random"},
            "seeds": seeds,
            "output_dir": output_dir,
        }
    )


def _parse_seeds(text: str) -> list[int]:
    text = text.strip()
    if ".." in text:
        lo, hi = text.split("..", 1)
        return list(range(int(lo), int(hi) + 1))
    return [int(s) for s in text.split(",") if s.strip()]


def _parse_values(text: str) -> list[float]:
    vals = [float(s) for s in text.split(",") if s.strip()]
    if not vals:
        raise ValueError(f"no values in {text!r}")
    return vals


def _jobs(args) -> int:
    if args.jobs is not None:
        return args.jobs
    env = os.environ.get("ACQBENCH_JOBS", "").strip()
    return int(env) if env else 1


def _load_config(path: str) -> dict:
    with open(path, encoding="utf-8") as fh:
        try:
            raw = json.load(fh)
        except json.JSONDecodeError as e:
            raise ValueError(f"config error: {path} is not valid JSON: {e}") from None
    return validate_config(raw)


def _run_strategy(
    cfg: dict, strategy_spec: dict, seeds: list[int], out_root: Path, jobs: int, timings: bool
) -> tuple[str, list[RunRecord]]:
    """Sweep one strategy spec over seeds and write its per-seed artifacts."""
    exp = build_experiment({**cfg, "strategy": strategy_spec}, seeds[0])
    records = sweep(exp, seeds, jobs=jobs)
    name = records[0].strategy
    for rec in records:
        write_record(rec, out_root / name / str(rec.seed), include_timings=timings)
    return name, records


def table_csv_text(table: AccuracyTable) -> str:
    """Accuracy table as CSV: one row per round, one column per seed."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["round", *(f"seed_{s}" for s in table.seeds)])
    for t in range(table.n_rounds):
        w.writerow([t + 1, *(repr(float(v)) for v in table.data[t])])
    return buf.getvalue()


def curve_csv_text(records: list[RunRecord], include_timings: bool = False) -> str:
    """Accuracy-vs-cost curve aggregated over seeds.

    The deterministic cost axis is the cumulative inference count; wall
    time columns are present but filled only on request since they are
    machine noise.
    """
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(
        [
            "round",
            "n_labeled",
            "mean_accuracy",
            "median_accuracy",
            "mean_cum_n_infer",
            "mean_cum_acq_ms",
            "mean_cum_train_ms",
        ]
    )
    n_rounds = len(records[0].rows)
    accs = np.array([[r.rows[t].test_accuracy for r in records] for t in range(n_rounds)])
    infer = np.array([[r.rows[t].n_infer for r in records] for t in range(n_rounds)]).cumsum(axis=0)
    acq = np.array([[r.rows[t].acq_ms for r in records] for t in range(n_rounds)]).cumsum(axis=0)
    train = np.array([[r.rows[t].train_ms for r in records] for t in range(n_rounds)]).cumsum(axis=0)
    for t in range(n_rounds):
        w.writerow(
            [
                t + 1,
                records[0].rows[t].n_labeled,
                repr(float(accs[t].mean())),
                repr(float(np.median(accs[t]))),
                repr(float(infer[t].mean())),
                repr(float(acq[t].mean())) if include_timings else "",
                repr(float(train[t].mean())) if include_timings else "",
            ]
        )
    return buf.getvalue()


def _cmd_run(args) -> int:
    cfg = _load_config(args.config)
    seed = args.seed if args.seed is not None else cfg["seeds"][0]
    out = Path(args.out or cfg["output_dir"])
    name, records = _run_strategy(cfg, cfg["strategy"], [seed], out, jobs=1, timings=args.timings)
    rec = records[0]
    print(f"{name} seed={seed}: final accuracy {rec.final_accuracy:.4f} after {len(rec.rows)} rounds")
    print(f"wrote {out / name / str(seed)}")
    return 0


def _cmd_sweep(args) -> int:
    cfg = _load_config(args.config)
    seeds = _parse_seeds(args.seeds) if args.seeds else cfg["seeds"]
    out = Path(args.out or cfg["output_dir"])
    name, records = _run_strategy(cfg, cfg["strategy"], seeds, out, jobs=_jobs(args), timings=args.timings)
    finals = [r.final_accuracy for r in records]
    print(f"{name}: {len(records)} seeds, median final accuracy {float(np.median(finals)):.4f}")
    print(f"wrote {out / name}")
    return 0


def _discover_tables(root: Path) -> list[AccuracyTable]:
    """Rebuild accuracy tables from an output tree (strategy/seed/record.csv)."""
    if not root.is_dir():
        raise ValueError(f"{root} is not a directory")
    tables = []
    for sdir in sorted(p for p in root.iterdir() if p.is_dir()):
        per_seed: dict[int, list[float]] = {}
        for rec_path in sorted(sdir.glob("*/record.csv")):
            try:
                seed = int(rec_path.parent.name)
            except ValueError:
                raise ValueError(f"{rec_path.parent}: seed directory name must be an integer") from None
            per_seed[seed] = [row["test_accuracy"] for row in read_record_csv(rec_path)]
        if not per_seed:
            continue
        seeds = sorted(per_seed)
        lengths = {len(v) for v in per_seed.values()}
        if len(lengths) != 1:
            raise ValueError(f"{sdir.name}: seeds disagree on round count {sorted(lengths)}")
        n_rounds = lengths.pop()
        data = np.array([[per_seed[s][t] for s in seeds] for t in range(n_rounds)])
        tables.append(AccuracyTable(sdir.name, tuple(seeds), data))
    if not tables:
        raise ValueError(f"no strategy results under {root}")
    return tables


def _write_heatmap(tables: list[AccuracyTable], out: Path, critical: float) -> None:
    hm = compute_heatmap(tables, critical)
    atomic_write_text(out / "heatmap.csv", heatmap_csv_text(hm))
    atomic_write_text(out / "heatmap.svg", heatmap_svg_text(hm))


def _cmd_compare(args) -> int:
    root = Path(args.results_dir)
    out = Path(args.out or root)
    tables = _discover_tables(root)
    _write_heatmap(tables, out, args.critical)
    print(f"compared {len(tables)} strategies over {tables[0].data.shape[1]} seeds")
    print(f"wrote {out / 'heatmap.csv'} and {out / 'heatmap.svg'}")
    return 0


def _apply_ablation(spec: dict, parameter: str, value: float) -> dict:
    spec = copy.deepcopy(spec)
    if parameter == "kappa":
        if spec.get("kind") != "series":
            raise ValueError("--parameter kappa requires a series strategy")
        n_stages = len(spec.get("constituents", []))
        if n_stages < 2:
            raise ValueError("kappa ablation needs a series with at least 2 stages")
        spec.setdefault("params", {})["kappas"] = [float(value)] * (n_stages - 1) + [1.0]
    elif parameter == "rate":
        if spec.get("kind") != "annealing":
            raise ValueError("--parameter rate requires an annealing strategy")
        spec.setdefault("params", {})["rate"] = float(value)
    else:
        raise ValueError(f"unknown ablation parameter {parameter!r}")
    return spec


def _cmd_ablate(args) -> int:
    cfg = _load_config(args.config)
    seeds = _parse_seeds(args.seeds) if args.seeds else cfg["seeds"]
    out = Path(args.out or cfg["output_dir"])
    values = _parse_values(args.values)
    for value in values:
        spec = _apply_ablation(cfg["strategy"], args.parameter, value)
        sub = out / f"{args.parameter}_{value:g}"
        name, records = _run_strategy(cfg, spec, seeds, sub, jobs=_jobs(args), timings=args.timings)
        atomic_write_text(sub / "curve.csv", curve_csv_text(records, include_timings=args.timings))
        finals = [r.final_accuracy for r in records]
        print(
            f"{args.parameter}={value:g} ({name}): median final accuracy "
            f"{float(np.median(finals)):.4f}, mean inferences/run "
            f"{float(np.mean([r.total_inferences for r in records])):.0f}"
        )
    print(f"wrote {len(values)} ablation subtrees under {out}")
    return 0


def _cmd_toy(args) -> int:
    seeds = _parse_seeds(args.seeds)
    cfg = toy_config(args.out, seeds, rounds=args.rounds)
    out = Path(cfg["output_dir"])
    train_ds, _ = build_datasets(cfg["dataset"])

    tables = []
    dump = io.StringIO()
    dw = csv.writer(dump, lineterminator="\n")
    dw.writerow(["strategy", "seed", "round", "index", "x0", "x1", "label"])
    for spec in TOY_STRATEGIES:
        name, records = _run_strategy(cfg, spec, seeds, out, jobs=_jobs(args), timings=args.timings)
        table = accuracy_table(records)
        tables.append(table)
        atomic_write_text(out / name / "accuracy_table.csv", table_csv_text(table))
        for rec in records:
            for row in rec.rows:
                for idx in row.selected:
                    dw.writerow(
                        [
                            name,
                            rec.seed,
                            row.round,
                            idx,
                            repr(float(train_ds.X[idx, 0])),
                            repr(float(train_ds.X[idx, 1])),
                            int(train_ds.y[idx]),
                        ]
                    )
        finals = [r.final_accuracy for r in records]
        print(f"{name}: median final accuracy {float(np.median(finals)):.4f}")

    atomic_write_text(out / "selections.csv", dump.getvalue())
    _write_heatmap(tables, out, args.critical)
    print(f"wrote toy benchmark artifacts under {out}")
    return 0


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="acqbench", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, config=True):
        if config:
            p.add_argument("--config", required=True, help="path to JSON config")
        p.add_argument("--out", default=None, help="override output directory")
        p.add_argument("--jobs", type=int, default=None, help="worker processes (default $ACQBENCH_JOBS or 1)")
        p.add_argument("--timings", action="store_true", help="fill wall-time CSV columns (breaks byte-determinism)")

    p_run = sub.add_parser("run", help="run one experiment (first config seed by default)")
    add_common(p_run)
    p_run.add_argument("--seed", type=int, default=None, help="run seed override")

    p_sweep = sub.add_parser("sweep", help="run the config across seeds")
    add_common(p_sweep)
    p_sweep.add_argument("--seeds", default=None, help="seed list '0,1,2' or range '0..9' (default config seeds)")

    p_cmp = sub.add_parser("compare", help="build the winning-rate heatmap from a results tree")
    p_cmp.add_argument("results_dir", help="tree of <strategy>/<seed>/record.csv")
    p_cmp.add_argument("--critical", type=float, default=DEFAULT_CRITICAL, help="t threshold for a win")
    p_cmp.add_argument("--out", default=None, help="where to write heatmap files (default results_dir)")

    p_abl = sub.add_parser("ablate", help="sweep a structure parameter (kappa or rate)")
    add_common(p_abl)
    p_abl.add_argument("--parameter", required=True, choices=("kappa", "rate"))
    p_abl.add_argument("--values", required=True, help="comma-separated values, e.g. '1,2,5'")
    p_abl.add_argument("--seeds", default=None, help="seed list or range override")

    p_toy = sub.add_parser("toy", help="built-in checkerboard benchmark (random vs least_confident vs k_centers)")
    add_common(p_toy, config=False)
    p_toy.add_argument("--seeds", default="0..9", help="seed list or range (default 0..9)")
    p_toy.add_argument("--rounds", type=int, default=20, help="acquisition rounds (default 20)")
    p_toy.add_argument("--critical", type=float, default=DEFAULT_CRITICAL, help="t threshold for a win")

    args = parser.parse_args(argv)
    commands = {
        "run": _cmd_run,
        "sweep": _cmd_sweep,
        "compare": _cmd_compare,
        "ablate": _cmd_ablate,
        "toy": _cmd_toy,
    }
    try:
        return commands[args.command](args)
    except (ValueError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
