"""Command-line front end.

Subcommands: ``gen-data`` (emit a synthetic DenseCSV), ``run`` (single
attack config to report JSON), ``sweep``, ``removal``, and ``report``
(aggregate report JSONs into a summary CSV). Exit codes: 0 success,
2 configuration error, 3 numeric error.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

from .datakit import BlobsConfig, gen_blobs, gen_regression, save_dataset
from .errors import ConfigurationError, NumericError, PoisonLabError
from .lab import (
    attack_config_from_dict,
    read_report,
    removal_experiment,
    run_attack,
    sweep,
    write_report,
)


def _load_json(path) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except FileNotFoundError:
        raise ConfigurationError(f"config file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"{path}: invalid JSON ({exc.msg}, line {exc.lineno})") from None


def _load_attack_config(args):
    doc = _load_json(args.config)
    if args.seed is not None:
        doc["seeds"] = [args.seed]
    return attack_config_from_dict(doc)


def _cmd_gen_data(args) -> int:
    if args.kind == "blobs":
        data = gen_blobs(
            BlobsConfig(
                n_classes=args.n_classes,
                n_per_class=args.n_per_class,
                side=args.side,
                noise_sigma=args.noise_sigma,
                seed=args.seed or 0,
            )
        )
    else:
        data = gen_regression(
            n=args.n,
            side=args.side,
            age_range=(args.lo, args.hi),
            seed=args.seed or 0,
            noise_sigma=args.noise_sigma,
        )
    save_dataset(data, args.out)
    print(f"wrote {len(data)} examples to {args.out}")
    return 0


def _cmd_run(args) -> int:
    config = _load_attack_config(args)
    report = run_attack(config)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / "report.json"
    write_report(report, path)
    for key, value in sorted(report["summary"].items()):
        print(f"{key}: {value:.4f}")
    print(f"report written to {path}")
    return 0


def _cmd_sweep(args) -> int:
    doc = _load_json(args.config)
    try:
        ratios = doc["ratios"]
        strategies = doc["strategies"]
        # r/strategy/seeds are grid coordinates; seed a throwaway base config.
        base = attack_config_from_dict(
            {**doc["base"], "r": ratios[0], "strategy": strategies[0], "seeds": [0]}
        )
        n_seeds = doc.get("n_seeds", 5)
        base_seed = doc.get("base_seed", 0)
    except KeyError as exc:
        raise ConfigurationError(f"sweep config missing field {exc.args[0]!r}") from None
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    result = sweep(base, ratios, strategies, n_seeds, base_seed=base_seed, out_dir=str(out_dir))
    with open(out_dir / "sweep.json", "w", encoding="utf-8") as fh:
        json.dump(result, fh, indent=2, sort_keys=True)
        fh.write("\n")
    failed = [c for c in result["runs"] if c["status"] != "ok"]
    print(f"{len(result['runs']) - len(failed)}/{len(result['runs'])} runs ok; "
          f"summary at {out_dir / 'summary.csv'}")
    if failed:
        print(f"{len(failed)} cells failed (see sweep.json)")
    return 0


def _cmd_removal(args) -> int:
    config = _load_attack_config(args)
    fractions = [float(f) for f in args.fractions.split(",") if f]
    curve = removal_experiment(config, args.rule, fractions)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / f"removal_{args.rule}.json"
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(curve, fh, indent=2, sort_keys=True)
        fh.write("\n")
    for frac, mean in zip(curve["fractions"], curve["mean"]):
        print(f"fraction {frac:.2f}: {curve['metric']} {mean:.4f}")
    print(f"curve written to {path}")
    return 0


def _cmd_report(args) -> int:
    rows = []
    for path in args.reports:
        doc = read_report(path)
        cfg = doc["config"]
        for blk in doc["per_seed"]:
            metrics = blk["metrics"]
            clean = metrics.get("clean_acc", metrics.get("clean_rmse"))
            rows.append(
                {
                    "strategy": cfg["strategy"]["kind"],
                    "r": cfg["r"],
                    "seed": blk["seed"],
                    "asr": metrics.get("asr", ""),
                    "clean_metric": clean,
                }
            )
    out = open(args.out, "w", encoding="utf-8", newline="") if args.out else sys.stdout
    try:
        writer = csv.DictWriter(out, fieldnames=["strategy", "r", "seed", "asr", "clean_metric"])
        writer.writeheader()
        writer.writerows(rows)
    finally:
        if args.out:
            out.close()
            print(f"{len(rows)} rows written to {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="poisonlab",
        description="Sample-selection efficiency lab for poisoning-based backdoor attacks",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-data", help="emit a synthetic DenseCSV dataset")
    p.add_argument("--kind", choices=["blobs", "regression"], required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--side", type=int, default=8)
    p.add_argument("--noise-sigma", dest="noise_sigma", type=float, default=None)
    p.add_argument("--n-classes", dest="n_classes", type=int, default=4)
    p.add_argument("--n-per-class", dest="n_per_class", type=int, default=1000)
    p.add_argument("--n", type=int, default=5000)
    p.add_argument("--lo", type=float, default=20.0)
    p.add_argument("--hi", type=float, default=50.0)
    p.set_defaults(func=_cmd_gen_data)

    p = sub.add_parser("run", help="run one attack config")
    p.add_argument("--config", required=True)
    p.add_argument("--seed", type=int, default=None, help="override the config's seed list")
    p.add_argument("--out", default=".")
    p.set_defaults(func=_cmd_run)

    p = sub.add_parser("sweep", help="run a ratio x strategy grid")
    p.add_argument("--config", required=True)
    p.add_argument("--out", default="sweep_out")
    p.set_defaults(func=_cmd_sweep)

    p = sub.add_parser("removal", help="poison-removal study")
    p.add_argument("--config", required=True)
    p.add_argument("--rule", choices=["random", "large_first", "small_first"], required=True)
    p.add_argument("--fractions", default="0,0.25,0.5,0.75,1.0")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", default=".")
    p.set_defaults(func=_cmd_removal)

    p = sub.add_parser("report", help="aggregate report JSONs into a CSV")
    p.add_argument("reports", nargs="+")
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_report)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "noise_sigma", None) is None and args.command == "gen-data":
        args.noise_sigma = 0.25 if args.kind == "blobs" else 0.05
    try:
        return args.func(args)
    except ConfigurationError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except NumericError as exc:
        print(f"numeric error: {exc}", file=sys.stderr)
        return 3
    except PoisonLabError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
