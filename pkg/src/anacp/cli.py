"""Command-line surface: dataset synthesis, experiment runs, report comparison.

Subcommands:
  synth    write a synthetic Gaussian benchmark as feature files + manifest
  run      run a learner (with repetitions and optional ablation sweep)
  report   tabulate one or more run reports, with relative error reduction

`ANACP_THREADS` caps how many repetition workers run in parallel (default 1).
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from pathlib import Path

import numpy as np

from .errors import AnacpError
from .features import (
    FeatureDataset,
    SynthSpec,
    generate_synthetic,
    load_feature_file,
    make_task_stream,
    save_feature_file,
)
from .pipeline import LearnerConfig, METHODS, RunReport, rel_error_reduction, run_stream

_ABLATE_KEYS = {
    "H": ("heads", int),
    "D": ("rp_dim", int),
    "R": ("replay_per_class", int),
    "ALPHA": ("alpha", float),
    "LAMBDA_CP": ("lambda_cp", float),
    "LAMBDA_CLS": ("lambda_cls", float),
    "CLS": ("classifier", str),
    "NR": ("use_repulsion", lambda v: v.lower() in ("1", "on", "true", "yes")),
}


def _parse_synth(text: str) -> SynthSpec:
    """Parse 'd=64,classes=20,n=100,mean_scale=2,cov=identity,kappa=10,seed=0'."""
    fields = {
        "d": 64, "classes": 20, "n": 100, "n_test": None,
        "mean_scale": 2.0, "cov": "identity", "kappa": 10.0, "seed": 0,
    }
    if text:
        for item in text.split(","):
            key, _, value = item.partition("=")
            key = key.strip()
            if key not in fields:
                raise ValueError(f"unknown synth field {key!r}")
            fields[key] = value.strip()
    return SynthSpec(
        dim=int(fields["d"]),
        num_classes=int(fields["classes"]),
        n_per_class=int(fields["n"]),
        mean_scale=float(fields["mean_scale"]),
        covariance=str(fields["cov"]),
        condition_number=float(fields["kappa"]),
        seed=int(fields["seed"]),
        n_test_per_class=None if fields["n_test"] is None else int(fields["n_test"]),
    )


def cmd_synth(args) -> int:
    spec = SynthSpec(
        dim=args.d,
        num_classes=args.classes,
        n_per_class=args.n_per_class,
        mean_scale=args.mean_scale,
        covariance=args.cov,
        condition_number=args.kappa,
        seed=args.seed,
        n_test_per_class=args.n_test_per_class,
    )
    train, test = generate_synthetic(spec)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    manifest = {
        "dataset_name": "synthetic",
        "source_model": None,
        "synth_spec": {
            "d": spec.dim, "classes": spec.num_classes, "n_per_class": spec.n_per_class,
            "mean_scale": spec.mean_scale, "cov": spec.covariance,
            "kappa": spec.condition_number, "seed": spec.seed,
        },
    }
    save_feature_file(train, out / "train.feat", manifest | {"split": "train"})
    save_feature_file(test, out / "test.feat", manifest | {"split": "test"})
    print(f"wrote {out / 'train.feat'} ({train.n} x {train.dim}) and "
          f"{out / 'test.feat'} ({test.n} x {test.dim})")
    return 0


def _load_data(args) -> tuple[FeatureDataset, FeatureDataset]:
    if args.features:
        root = Path(args.features)
        if not root.is_dir():
            raise FileNotFoundError(f"--features expects a directory with train.feat/test.feat, got {root}")
        return load_feature_file(root / "train.feat"), load_feature_file(root / "test.feat")
    spec = _parse_synth(args.synth if args.synth is not None else "")
    return generate_synthetic(spec)


def _one_repetition(config, train, test, num_tasks, stream_seed):
    stream = make_task_stream(train, test, num_tasks, stream_seed)
    return run_stream(config, stream)


def _run_setting(config, train, test, num_tasks, base_stream_seed, reps, workers):
    """Run `reps` repetitions with distinct stream seeds; returns (reports, failures)."""
    seeds = [base_stream_seed + r for r in range(reps)]
    reports: list[RunReport | None] = [None] * reps
    failures: list[tuple[int, str]] = []
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = {
                pool.submit(_one_repetition, config, train, test, num_tasks, seed): r
                for r, seed in enumerate(seeds)
            }
            for fut, r in futures.items():
                try:
                    reports[r] = fut.result()
                except Exception as exc:  # noqa: BLE001 - enumerate, do not abort the sweep
                    failures.append((r, str(exc)))
    else:
        for r, seed in enumerate(seeds):
            try:
                reports[r] = _one_repetition(config, train, test, num_tasks, seed)
            except Exception as exc:  # noqa: BLE001
                failures.append((r, str(exc)))
    return reports, failures


def _aggregate_row(label: str, config: LearnerConfig, reports) -> dict:
    a_avg = [r.a_avg for r in reports if r is not None]
    a_last = [r.a_last for r in reports if r is not None]
    return {
        "setting": label,
        "method": config.method,
        "reps": len(a_avg),
        "a_avg_mean": float(np.mean(a_avg)) if a_avg else float("nan"),
        "a_avg_std": float(np.std(a_avg)) if a_avg else float("nan"),
        "a_last_mean": float(np.mean(a_last)) if a_last else float("nan"),
        "a_last_std": float(np.std(a_last)) if a_last else float("nan"),
    }


RUN_DEFAULTS = {
    "features": None, "synth": None, "tasks": 10, "method": "anacp",
    "heads": 3, "rp_dim": 5000, "replay": 100, "lambda_cp": 100.0,
    "lambda_cls": 100.0, "alpha": 1.0, "no_repulsion": False,
    "classifier": "elm", "seed": 0, "reps": 1, "ablate": None, "out": "runs",
}


def _effective_run_args(namespace) -> argparse.Namespace:
    """Merge precedence: explicit CLI flags > config file > defaults."""
    merged = dict(RUN_DEFAULTS)
    explicit = {k: v for k, v in vars(namespace).items() if k not in ("func", "command", "config")}
    config_path = getattr(namespace, "config", None)
    if config_path:
        loaded = json.loads(Path(config_path).read_text())
        unknown = set(loaded) - set(RUN_DEFAULTS)
        if unknown:
            raise ValueError(f"unknown config file keys {sorted(unknown)}")
        merged.update(loaded)
    merged.update(explicit)
    return argparse.Namespace(**merged)


def cmd_run(args) -> int:
    args = _effective_run_args(args)
    train, test = _load_data(args)
    base = LearnerConfig(
        method=args.method,
        rp_dim=args.rp_dim,
        heads=args.heads,
        replay_per_class=args.replay,
        lambda_cp=args.lambda_cp,
        lambda_cls=args.lambda_cls,
        alpha=args.alpha,
        base_seed=args.seed,
        use_repulsion=not args.no_repulsion,
        classifier=args.classifier,
    )
    settings: list[tuple[str, LearnerConfig]] = []
    if args.ablate:
        key, _, values = args.ablate.partition("=")
        key = key.strip().upper()
        if key not in _ABLATE_KEYS or not values:
            raise ValueError(f"--ablate expects KEY=v1,v2,... with KEY in {sorted(_ABLATE_KEYS)}")
        field_name, cast = _ABLATE_KEYS[key]
        for raw in values.split(","):
            value = cast(raw.strip())
            settings.append((f"{key}={raw.strip()}", replace(base, **{field_name: value})))
    else:
        settings.append((args.method, base))

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    workers = max(1, int(os.environ.get("ANACP_THREADS", "1")))
    rows, all_failures = [], []
    for label, config in settings:
        reports, failures = _run_setting(
            config, train, test, args.tasks, args.seed, args.reps, workers
        )
        for r, report in enumerate(reports):
            if report is None:
                continue
            payload = report.to_dict()
            payload["experiment"] = {
                "setting": label, "repetition": r, "stream_seed": args.seed + r,
                "num_tasks": args.tasks,
                "data": args.features or f"synth:{args.synth or 'defaults'}",
                "run_settings": vars(args),
            }
            name = f"report_{label.replace('=', '-')}_rep{r}.json".replace("/", "_")
            (out / name).write_text(json.dumps(payload, indent=2))
        rows.append(_aggregate_row(label, config, reports))
        all_failures.extend((label, r, msg) for r, msg in failures)

    agg_path = out / "aggregate.csv"
    with agg_path.open("w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=list(rows[0].keys()))
        writer.writeheader()
        writer.writerows(rows)
    print(f"wrote {agg_path}")
    for row in rows:
        print(f"  {row['setting']}: a_last {row['a_last_mean']:.2f} +/- {row['a_last_std']:.2f}  "
              f"a_avg {row['a_avg_mean']:.2f} +/- {row['a_avg_std']:.2f}  ({row['reps']} reps)")
    if all_failures:
        for label, r, msg in all_failures:
            print(f"FAILED: setting {label} repetition {r}: {msg}", file=sys.stderr)
        return 1
    return 0


def cmd_report(args) -> int:
    reports = []
    for path in args.reports:
        try:
            reports.append((Path(path).name, RunReport.load(path)))
        except (json.JSONDecodeError, KeyError) as exc:
            print(f"malformed report {path}: {exc}", file=sys.stderr)
            return 2
    reports.sort(key=lambda pair: pair[1].a_last, reverse=True)

    rows = []
    for name, rep in reports:
        row = {"report": name, "method": rep.method,
               "a_avg": f"{rep.a_avg:.2f}", "a_last": f"{rep.a_last:.2f}"}
        if len(reports) > 1:
            others = [r.a_last for n, r in reports if n != name]
            best_other = max(others)
            if best_other < 100.0:
                row["rel_err_reduction"] = f"{rel_error_reduction(best_other, rep.a_last):.1f}"
            else:
                row["rel_err_reduction"] = ""
        rows.append(row)

    if args.csv:
        with open(args.csv, "w", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=list(rows[0].keys()))
            writer.writeheader()
            writer.writerows(rows)
        print(f"wrote {args.csv}")
    else:
        widths = {k: max(len(k), *(len(r.get(k, "")) for r in rows)) for k in rows[0]}
        print("  ".join(k.ljust(widths[k]) for k in rows[0]))
        for row in rows:
            print("  ".join(str(row.get(k, "")).ljust(widths[k]) for k in rows[0]))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="anacp", description=__doc__,
                                     formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)

    p_synth = sub.add_parser("synth", help="generate a synthetic feature benchmark")
    p_synth.add_argument("--d", type=int, default=64, help="feature dimension")
    p_synth.add_argument("--classes", type=int, default=20)
    p_synth.add_argument("--n-per-class", type=int, default=100)
    p_synth.add_argument("--n-test-per-class", type=int, default=None)
    p_synth.add_argument("--mean-scale", type=float, default=2.0)
    p_synth.add_argument("--cov", choices=["identity", "random"], default="identity")
    p_synth.add_argument("--kappa", type=float, default=10.0, help="condition bound for random cov")
    p_synth.add_argument("--seed", type=int, default=0)
    p_synth.add_argument("--out", default="data", help="output directory")
    p_synth.set_defaults(func=cmd_synth)

    # run flags default to SUPPRESS so a config file can sit between the
    # built-in defaults and explicitly passed flags
    p_run = sub.add_parser("run", help="run a learner over a task stream",
                           argument_default=argparse.SUPPRESS)
    p_run.add_argument("--config", default=None,
                       help="JSON file of run settings; explicit flags override it")
    src = p_run.add_mutually_exclusive_group()
    src.add_argument("--features", help="directory containing train.feat and test.feat")
    src.add_argument("--synth", nargs="?", const="",
                     help="synthetic spec, e.g. 'd=64,classes=20,n=100,mean_scale=2,seed=0'")
    p_run.add_argument("--tasks", type=int)
    p_run.add_argument("--method", choices=METHODS)
    p_run.add_argument("--heads", type=int)
    p_run.add_argument("--rp-dim", type=int)
    p_run.add_argument("--replay", type=int)
    p_run.add_argument("--lambda-cp", type=float)
    p_run.add_argument("--lambda-cls", type=float)
    p_run.add_argument("--alpha", type=float)
    p_run.add_argument("--no-repulsion", action="store_true")
    p_run.add_argument("--classifier", choices=["ncm", "elm"])
    p_run.add_argument("--seed", type=int)
    p_run.add_argument("--reps", type=int)
    p_run.add_argument("--ablate", help="sweep one knob, e.g. H=1,3,5 or D=1000,2000")
    p_run.add_argument("--out", help="output directory (default: runs)")
    p_run.set_defaults(func=cmd_run)

    p_rep = sub.add_parser("report", help="tabulate run reports")
    p_rep.add_argument("reports", nargs="+", help="report JSON files")
    p_rep.add_argument("--csv", help="write the table as CSV instead of text")
    p_rep.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (AnacpError, ValueError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
