"""Experiment orchestration: attack runs, studies, sweeps, persistence.

An attack run has two phases. The search phase restricts the clean
training set to the attacker-visible fraction and runs the configured
selection strategy under the search-side trigger/model/training setup.
The test phase then trains a fresh model on the full clean set plus the
selected poisons under the test-side setup (identical for white-box,
different for black-box) and measures attack success rate, clean
performance, curvature statistics, and the class distribution of the
selected origins. Runs repeat over the configured master seeds.

Report JSON schema (schema_version 1):

    {
      "schema_version": 1,
      "config": {...},            # echo of the AttackConfig document
      "per_seed": [
        {"seed": int,
         "selected_indices": [int, ...],
         "selected_scores": [float|null, ...],
         "metrics": {"asr": float, "clean_acc": float, "chance_asr": float}
                    # regression: {"clean_rmse", "attack_rmse"} instead
         "importance_summary": {"measure": str, "mean": float,
                                 "fe_histogram": {...}, "fraction_forgotten": float},
         "gamma": {"mean_selected": float, "mean_rss_baseline": float},
         "class_distribution": [int, ...]},
        ...],
      "summary": {"asr_mean": ..., "asr_std": ..., ...},
      "wall_time": float
    }

The config file consumed by the CLI mirrors AttackConfig field names
exactly; see ``attack_config_from_dict`` for the nested layouts.
"""

from __future__ import annotations

import csv
import json
import time
import warnings
from dataclasses import dataclass, field, replace

import numpy as np

from .curvature import CurvatureConfig, gamma_scores
from .datakit import (
    BlobsConfig,
    Classification,
    Dataset,
    gen_blobs,
    gen_regression,
    load_dataset,
    split,
)
from .errors import ConfigurationError, NumericError, SchemaError
from .importance import ImportanceTrace, MeasureKind, record_epoch, score
from .selection import (
    ExponentialDecay,
    Fixed,
    LinearDecay,
    PolicyKind,
    SearchPipeline,
    StrategyConfig,
    poison_budget,
    run_strategy,
    select_rss,
)
from .streams import stream, substream_seed
from .tensorcore import (
    EmbeddingBagSpec,
    MLPSpec,
    ModelSpec,
    TrainConfig,
    accuracy,
    init_model,
    predict_classes,
    rmse,
    train,
)
from .triggers import (
    Blend,
    Patch,
    PoisonPool,
    TokenInsert,
    TriggerSpec,
    build_poisoned_testset,
    candidate_indices,
    load_pattern,
    make_pattern,
    materialize_mixed,
)

SCHEMA_VERSION = 1

_REPORT_KEYS = {"schema_version", "config", "per_seed", "summary", "wall_time"}


@dataclass(frozen=True)
class AttackConfig:
    """Full description of one attack experiment."""

    dataset: dict
    trigger: TriggerSpec
    r: float
    strategy: StrategyConfig
    search_train: TrainConfig
    test_train: TrainConfig
    search_model: ModelSpec
    test_model: ModelSpec
    seeds: tuple[int, ...]
    search_trigger: TriggerSpec | None = None
    attacker_fraction: float = 1.0
    curvature: CurvatureConfig = field(default_factory=CurvatureConfig)

    def __post_init__(self):
        object.__setattr__(self, "seeds", tuple(int(s) for s in self.seeds))
        if not self.seeds:
            raise ConfigurationError("at least one seed is required")
        if not 0.0 < self.attacker_fraction <= 1.0:
            raise ConfigurationError("attacker_fraction must be in (0, 1]")
        if self.r <= 0:
            raise ConfigurationError("mixing ratio r must be > 0")

    @property
    def white_box(self) -> bool:
        return (
            self.search_train == self.test_train
            and self.search_model == self.test_model
            and (self.search_trigger is None or self.search_trigger == self.trigger)
        )


# ---------------------------------------------------------------------------
# dataset sources


def build_dataset(source: dict) -> tuple[Dataset, Dataset]:
    """Materialize the (train, test) pair described by a dataset-source dict."""
    src = dict(source)
    kind = src.pop("kind", None)
    if kind == "blobs":
        frac = src.pop("test_fraction", 0.2)
        cfg = BlobsConfig(**src)
        return split(gen_blobs(cfg), frac, substream_seed(cfg.seed, "split"))
    if kind == "regression":
        frac = src.pop("test_fraction", 0.2)
        seed = src.pop("seed", 0)
        data = gen_regression(
            n=src.pop("n", 5000),
            side=src.pop("side", 8),
            age_range=tuple(src.pop("age_range", (20.0, 50.0))),
            seed=seed,
            noise_sigma=src.pop("noise_sigma", 0.05),
        )
        if src:
            raise ConfigurationError(f"unknown regression-source fields {sorted(src)}")
        return split(data, frac, substream_seed(seed, "split"))
    if kind == "files":
        fmt = src.pop("format", "dense_csv")
        kwargs = {}
        if "shape" in src:
            kwargs["shape"] = tuple(src.pop("shape"))
        if "vocab_size" in src:
            kwargs["vocab_size"] = src.pop("vocab_size")
        train_ds = load_dataset(src.pop("train_path"), fmt, **kwargs)
        test_ds = load_dataset(src.pop("test_path"), fmt, task=train_ds.task, **kwargs)
        if src:
            raise ConfigurationError(f"unknown file-source fields {sorted(src)}")
        return train_ds, test_ds
    raise ConfigurationError(f"unknown dataset kind {kind!r}")


# ---------------------------------------------------------------------------
# single runs


def _train_infected(
    clean: Dataset,
    pool: PoisonPool,
    trigger: TriggerSpec,
    model_spec: ModelSpec,
    cfg: TrainConfig,
    master_seed: int,
    tag,
    record: bool,
):
    """Train on clean + fused pool with streams derived from (master_seed, tag)."""
    mixed = materialize_mixed(clean, pool, trigger)
    cfg = replace(cfg, seed=substream_seed(master_seed, "shuffle", tag))
    model0 = init_model(model_spec, substream_seed(master_seed, "init", tag))
    trace = None
    hook = None
    if record and len(pool):
        pool_ds = mixed.subset(np.flatnonzero(mixed.origin >= 0))
        trace = ImportanceTrace(cfg.epochs, origin_indices=pool.indices)
        hook = lambda model, epoch: record_epoch(trace, model, pool_ds, epoch)
    model = train(model0, mixed, cfg, epoch_hook=hook)
    return model, trace


def _search_pool(config: AttackConfig, train_ds: Dataset, master_seed: int) -> PoisonPool:
    """Phase 1: select poison origins (indices into the full clean train set)."""
    n = len(train_ds)
    K = poison_budget(config.r, n)
    if config.attacker_fraction < 1.0:
        n_vis = int(round(config.attacker_fraction * n))
        vis_rng = stream(master_seed, "selection", "visible")
        visible = np.sort(vis_rng.choice(n, size=n_vis, replace=False))
    else:
        visible = np.arange(n, dtype=np.int64)
    visible_ds = train_ds.subset(visible)
    search_trigger = config.search_trigger or config.trigger
    cands_local = candidate_indices(visible_ds, search_trigger)
    pipeline = SearchPipeline(
        data=visible_ds,
        trigger=search_trigger,
        model_spec=config.search_model,
        train_config=config.search_train,
        master_seed=master_seed,
        curvature=config.curvature,
    )
    pool_local = run_strategy(
        pipeline, cands_local, K, config.strategy, stream(master_seed, "selection")
    )
    return PoisonPool(indices=visible[pool_local.indices], scores=pool_local.scores)


def _attack_metrics(config, model, test_ds):
    if isinstance(test_ds.task, Classification):
        poisoned = build_poisoned_testset(test_ds, config.trigger)
        preds = predict_classes(model, poisoned.features)
        return {
            "asr": float((preds == int(config.trigger.target)).mean()),
            "clean_acc": accuracy(model, test_ds),
            "chance_asr": 1.0 / test_ds.task.n_classes,
        }
    poisoned = build_poisoned_testset(test_ds, config.trigger)
    return {
        "clean_rmse": rmse(model, test_ds),
        "attack_rmse": rmse(model, poisoned),
    }


def _importance_summary(trace: ImportanceTrace | None, task) -> dict | None:
    if trace is None:
        return None
    if isinstance(task, Classification):
        fe = score(trace, MeasureKind.FE)
        bins, frac = fe_histogram(trace)
        return {
            "measure": "fe",
            "mean": float(fe.mean()),
            "fe_histogram": {str(k): v for k, v in bins.items()},
            "fraction_forgotten": frac,
        }
    ls = score(trace, MeasureKind.LS)
    return {"measure": "ls", "mean": float(ls.mean())}


def _single_run(config: AttackConfig, train_ds, test_ds, master_seed: int) -> dict:
    pool = _search_pool(config, train_ds, master_seed)
    model, trace = _train_infected(
        train_ds, pool, config.trigger, config.test_model,
        config.test_train, master_seed, "test", record=True,
    )
    out = {
        "seed": master_seed,
        "selected_indices": [int(i) for i in pool.indices],
        "selected_scores": None
        if pool.scores is None
        else [None if np.isnan(s) else float(s) for s in pool.scores],
        "metrics": _attack_metrics(config, model, test_ds),
        "importance_summary": _importance_summary(trace, train_ds.task),
    }
    if train_ds.is_dense:
        cands = candidate_indices(train_ds, config.trigger)
        baseline = select_rss(cands, len(pool), stream(master_seed, "selection", "gamma-baseline"))
        sel_gamma = gamma_scores(train_ds, pool.indices, model, config.trigger, config.curvature)
        base_gamma = gamma_scores(
            train_ds, baseline.indices, model, config.trigger, config.curvature
        )
        out["gamma"] = {
            "mean_selected": float(sel_gamma.mean()),
            "mean_rss_baseline": float(base_gamma.mean()),
        }
    else:
        out["gamma"] = None
    if isinstance(train_ds.task, Classification):
        out["class_distribution"] = [int(c) for c in class_distribution(pool, train_ds)]
    else:
        out["class_distribution"] = None
    return out


def _aggregate(per_seed: list[dict]) -> dict:
    summary = {}
    keys = per_seed[0]["metrics"].keys()
    for key in keys:
        vals = np.asarray([blk["metrics"][key] for blk in per_seed])
        summary[f"{key}_mean"] = float(vals.mean())
        summary[f"{key}_std"] = float(vals.std())
    return summary


def run_attack(config: AttackConfig) -> dict:
    """Run the full search + test experiment for every master seed."""
    t0 = time.perf_counter()
    train_ds, test_ds = build_dataset(config.dataset)
    per_seed = [_single_run(config, train_ds, test_ds, m) for m in config.seeds]
    for blk in per_seed:
        for value in blk["metrics"].values():
            if not np.isfinite(value):
                raise NumericError("non-finite metric in attack run")
    return {
        "schema_version": SCHEMA_VERSION,
        "config": attack_config_to_dict(config),
        "per_seed": per_seed,
        "summary": _aggregate(per_seed),
        "wall_time": time.perf_counter() - t0,
    }


def run_clean_control(config: AttackConfig) -> dict:
    """Train without any poisoning under the test-side setup, per seed."""
    train_ds, test_ds = build_dataset(config.dataset)
    empty = PoisonPool(indices=np.empty(0, dtype=np.int64))
    per_seed = []
    for m in config.seeds:
        model, _ = _train_infected(
            train_ds, empty, config.trigger, config.test_model,
            config.test_train, m, "test", record=False,
        )
        per_seed.append({"seed": m, "metrics": _attack_metrics(config, model, test_ds)})
    return {"per_seed": per_seed, "summary": _aggregate(per_seed)}


# ---------------------------------------------------------------------------
# studies


REMOVAL_RULES = ("random", "large_first", "small_first")


def removal_experiment(config: AttackConfig, removal: str, fractions) -> dict:
    """Delete a share of the selected poisons by rule, retrain, record ASR.

    "large_first" removes the most-forgotten poisons first, "small_first"
    the least-forgotten, "random" a seed-stable random order. Fraction 0
    reproduces the base run exactly (same streams).
    """
    if removal not in REMOVAL_RULES:
        raise ConfigurationError(f"unknown removal rule {removal!r}")
    fractions = [float(f) for f in fractions]
    if any(not 0.0 <= f <= 1.0 for f in fractions):
        raise ConfigurationError("removal fractions must lie in [0, 1]")
    train_ds, test_ds = build_dataset(config.dataset)
    measure = (
        MeasureKind.FE if isinstance(train_ds.task, Classification) else MeasureKind.LS
    )
    per_seed = []
    for m in config.seeds:
        pool = _search_pool(config, train_ds, m)
        _, trace = _train_infected(
            train_ds, pool, config.trigger, config.test_model,
            config.test_train, m, "test", record=True,
        )
        scores = score(trace, measure)
        if removal == "random":
            order = stream(m, "removal").permutation(len(pool))
        elif removal == "large_first":
            order = np.lexsort((pool.indices, -scores))
        else:
            order = np.lexsort((pool.indices, scores))
        asrs = []
        for frac in fractions:
            n_remove = int(round(frac * len(pool)))
            keep = np.sort(order[n_remove:])
            sub = PoisonPool(indices=pool.indices[keep])
            model, _ = _train_infected(
                train_ds, sub, config.trigger, config.test_model,
                config.test_train, m, "test", record=False,
            )
            asrs.append(_attack_metrics(config, model, test_ds))
        per_seed.append({"seed": m, "metrics_per_fraction": asrs})
    key = "asr" if isinstance(train_ds.task, Classification) else "attack_rmse"
    curve = np.asarray(
        [[blk["metrics_per_fraction"][i][key] for blk in per_seed] for i in range(len(fractions))]
    )
    return {
        "rule": removal,
        "fractions": fractions,
        "metric": key,
        "mean": [float(v) for v in curve.mean(axis=1)],
        "std": [float(v) for v in curve.std(axis=1)],
        "per_seed": per_seed,
    }


def fe_histogram(trace: ImportanceTrace) -> tuple[dict[int, int], float]:
    """Histogram of forgetting-event counts plus the fraction with >= 1."""
    fe = score(trace, MeasureKind.FE).astype(np.int64)
    counts = np.bincount(fe)
    bins = {int(k): int(v) for k, v in enumerate(counts) if v > 0}
    return bins, float((fe >= 1).mean())


def class_distribution(pool: PoisonPool, data: Dataset) -> np.ndarray:
    """Counts of selected origins per original class."""
    if not isinstance(data.task, Classification):
        raise ConfigurationError("class distribution requires a classification task")
    return np.bincount(data.labels[pool.indices], minlength=data.task.n_classes)


# ---------------------------------------------------------------------------
# sweeps


def sweep(
    base_config: AttackConfig,
    ratios,
    strategies,
    n_seeds: int,
    base_seed: int = 0,
    out_dir=None,
) -> dict:
    """Cartesian product of mixing ratios x strategies x seed replicas.

    Each cell runs a single-seed attack whose master seed is derived from
    (base_seed, r, strategy, replica). Failed cells are recorded and the
    sweep continues. Returns {"runs": [...], "summary": [...]} and, when
    ``out_dir`` is given, writes per-run report JSONs plus summary.csv.
    """
    strategies = [s if isinstance(s, StrategyConfig) else strategy_from_dict(s) for s in strategies]
    if not ratios or not strategies or n_seeds < 1:
        raise ConfigurationError("sweep grid must be nonempty")
    runs = []
    for r in ratios:
        for strat in strategies:
            for rep in range(n_seeds):
                master = substream_seed(base_seed, "sweep", f"{r:.6g}", strat.kind, rep)
                cfg = replace(base_config, r=r, strategy=strat, seeds=(master,))
                cell = {"r": r, "strategy": strat.kind, "replica": rep, "seed": master}
                try:
                    report = run_attack(cfg)
                    cell["status"] = "ok"
                    cell["metrics"] = report["per_seed"][0]["metrics"]
                    if out_dir is not None:
                        name = f"run_r{r:.6g}_{strat.kind}_{rep}.json"
                        write_report(report, f"{out_dir}/{name}")
                        cell["report"] = name
                except (ConfigurationError, NumericError) as exc:
                    cell["status"] = "failed"
                    cell["error"] = str(exc)
                runs.append(cell)
    summary = []
    metric = "asr" if any("asr" in c.get("metrics", {}) for c in runs) else "attack_rmse"
    for r in ratios:
        for strat in strategies:
            cells = [
                c for c in runs
                if c["r"] == r and c["strategy"] == strat.kind and c["status"] == "ok"
            ]
            row = {"r": r, "strategy": strat.kind, "n_ok": len(cells)}
            if cells:
                vals = np.asarray([c["metrics"][metric] for c in cells])
                row[f"{metric}_mean"] = float(vals.mean())
                row[f"{metric}_std"] = float(vals.std())
            summary.append(row)
    result = {"metric": metric, "runs": runs, "summary": summary}
    savings = volume_savings(summary, metric=metric)
    if savings is not None:
        result["volume_savings"] = savings
    if out_dir is not None:
        _write_sweep_csv(summary, metric, f"{out_dir}/summary.csv")
    return result


def volume_savings(summary_rows, metric: str = "asr", baseline: str = "rss") -> dict | None:
    """Interpolated poison-volume saving of each strategy against the baseline.

    Finds, by linear interpolation on the strategy's metric-vs-r curve, the
    smallest ratio matching the baseline's best measured value; the saving
    is relative to the baseline's ratio at that value. Dataset-specific.
    """
    rows = [r for r in summary_rows if f"{metric}_mean" in r]
    base = sorted((r for r in rows if r["strategy"] == baseline), key=lambda r: r["r"])
    if not base:
        return None
    higher_better = metric == "asr"
    best = max if higher_better else min
    base_best_row = best(base, key=lambda r: r[f"{metric}_mean"] * (1 if higher_better else -1))
    target = base_best_row[f"{metric}_mean"]
    out = {}
    for strat in sorted({r["strategy"] for r in rows} - {baseline}):
        curve = sorted((r for r in rows if r["strategy"] == strat), key=lambda r: r["r"])
        ratios = [r["r"] for r in curve]
        vals = [r[f"{metric}_mean"] for r in curve]
        crossing = None
        for (r0, v0), (r1, v1) in zip(zip(ratios, vals), zip(ratios[1:], vals[1:])):
            reached = (v1 >= target) if higher_better else (v1 <= target)
            if reached:
                if (v0 >= target) if higher_better else (v0 <= target):
                    crossing = r0
                else:
                    crossing = r0 + (target - v0) / (v1 - v0) * (r1 - r0)
                break
        if crossing is None and vals:
            reached0 = (vals[0] >= target) if higher_better else (vals[0] <= target)
            crossing = ratios[0] if reached0 else None
        if crossing is not None:
            out[strat] = 1.0 - crossing / base_best_row["r"]
    return out or None


def _write_sweep_csv(summary, metric, path):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["r", "strategy", "n_ok", f"{metric}_mean", f"{metric}_std"])
        for row in summary:
            writer.writerow(
                [
                    f"{row['r']:.6g}",
                    row["strategy"],
                    row["n_ok"],
                    "" if f"{metric}_mean" not in row else f"{row[f'{metric}_mean']:.6g}",
                    "" if f"{metric}_std" not in row else f"{row[f'{metric}_std']:.6g}",
                ]
            )


# ---------------------------------------------------------------------------
# persistence


def write_report(report: dict, path) -> None:
    """Serialize a report deterministically (stable key order, LF endings)."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(report, fh, indent=2, sort_keys=True)
        fh.write("\n")


def read_report(path) -> dict:
    """Load and validate a report written by ``write_report``."""
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    if not isinstance(doc, dict) or "schema_version" not in doc:
        raise SchemaError(f"{path}: missing schema_version")
    if doc["schema_version"] != SCHEMA_VERSION:
        raise SchemaError(
            f"{path}: schema_version {doc['schema_version']} != supported {SCHEMA_VERSION}"
        )
    unknown = set(doc) - _REPORT_KEYS
    if unknown:
        warnings.warn(f"{path}: ignoring unknown report fields {sorted(unknown)}", stacklevel=2)
        for key in unknown:
            doc.pop(key)
    return doc


def write_pool_csv(pool: PoisonPool, path) -> None:
    """Persist a selected pool as (origin_index, score) rows."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["origin_index", "score"])
        for i, idx in enumerate(pool.indices):
            s = "" if pool.scores is None or np.isnan(pool.scores[i]) else format(
                pool.scores[i], ".17g"
            )
            writer.writerow([int(idx), s])


def read_pool_csv(path) -> PoisonPool:
    with open(path, encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or header[:2] != ["origin_index", "score"]:
            raise ConfigurationError(f"{path}: expected header 'origin_index,score'")
        indices, scores = [], []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            try:
                indices.append(int(row[0]))
                scores.append(float(row[1]) if len(row) > 1 and row[1] else np.nan)
            except ValueError:
                raise ConfigurationError(f"{path}:{lineno}: cannot parse pool row") from None
    sc = np.asarray(scores)
    return PoisonPool(
        indices=np.asarray(indices, dtype=np.int64),
        scores=None if np.isnan(sc).all() else sc,
    )


# ---------------------------------------------------------------------------
# config (de)serialization: JSON documents mirror the dataclass field names


def _pattern_from_spec(doc) -> np.ndarray:
    if isinstance(doc, dict) and "preset" in doc:
        return make_pattern(doc["preset"], doc.get("side", 8), doc.get("seed", 0))
    if isinstance(doc, dict) and "path" in doc:
        return load_pattern(doc["path"])
    if isinstance(doc, dict) and "values" in doc:
        return np.asarray(doc["values"], dtype=np.float64)
    raise ConfigurationError(f"cannot interpret trigger pattern spec {doc!r}")


def trigger_from_dict(doc: dict) -> TriggerSpec:
    doc = dict(doc)
    kind = doc.pop("kind")
    target = doc.pop("target", 0)  # category 0 unless stated otherwise
    label_mode = doc.pop("label_mode", "flip")
    if kind == "blend":
        trig = Blend(pattern=_pattern_from_spec(doc.pop("pattern")), lam=doc.pop("lambda"))
    elif kind == "patch":
        trig = Patch(
            pattern=np.asarray(doc.pop("pattern"), dtype=np.float64),
            top_left=tuple(doc.pop("top_left")),
        )
    elif kind == "token_insert":
        trig = TokenInsert(token_id=doc.pop("token_id"), position=doc.pop("position", 1))
    else:
        raise ConfigurationError(f"unknown trigger kind {kind!r}")
    if doc:
        raise ConfigurationError(f"unknown trigger fields {sorted(doc)}")
    return TriggerSpec(kind=trig, target=target, label_mode=label_mode)


def trigger_to_dict(spec: TriggerSpec) -> dict:
    kind = spec.kind
    if isinstance(kind, Blend):
        body = {"kind": "blend", "lambda": kind.lam, "pattern": {"values": kind.pattern.tolist()}}
    elif isinstance(kind, Patch):
        body = {
            "kind": "patch",
            "pattern": kind.pattern.tolist(),
            "top_left": list(kind.top_left),
        }
    else:
        body = {"kind": "token_insert", "token_id": kind.token_id, "position": kind.position}
    body["target"] = spec.target
    body["label_mode"] = spec.label_mode
    return body


def _policy_from_dict(doc) -> PolicyKind:
    if isinstance(doc, str):
        doc = {"kind": doc}
    kind = doc.get("kind")
    if kind == "fixed":
        return Fixed(alpha=doc["alpha"])
    if kind == "linear":
        return LinearDecay()
    if kind == "exponential":
        return ExponentialDecay()
    raise ConfigurationError(f"unknown filtration policy {doc!r}")


def _policy_to_dict(policy: PolicyKind) -> dict:
    if isinstance(policy, Fixed):
        return {"kind": "fixed", "alpha": policy.alpha}
    return {"kind": "linear" if isinstance(policy, LinearDecay) else "exponential"}


def strategy_from_dict(doc: dict) -> StrategyConfig:
    doc = dict(doc)
    kind = doc.pop("kind")
    if "policy" in doc:
        doc["policy"] = _policy_from_dict(doc["policy"])
    defaults = {"fus": {"iterations": 15}, "fuspp": {"iterations": 2}}
    merged = {**defaults.get(kind, {}), **doc}
    return StrategyConfig(kind=kind, **merged)


def strategy_to_dict(s: StrategyConfig) -> dict:
    return {
        "kind": s.kind,
        "iterations": s.iterations,
        "beta": s.beta,
        "policy": _policy_to_dict(s.policy),
        "measure": s.measure.value,
        "update_source": s.update_source,
        "k_prime_factor": s.k_prime_factor,
        "invert_cs": s.invert_cs,
    }


def model_from_dict(doc: dict) -> ModelSpec:
    doc = dict(doc)
    kind = doc.pop("kind")
    if kind == "mlp":
        return MLPSpec(
            input_dim=doc["input_dim"],
            hidden=tuple(doc.get("hidden", ())),
            output_dim=doc["output_dim"],
        )
    if kind == "embedding_bag":
        return EmbeddingBagSpec(
            vocab_size=doc["vocab_size"],
            embed_dim=doc["embed_dim"],
            output_dim=doc["output_dim"],
        )
    raise ConfigurationError(f"unknown model kind {kind!r}")


def model_to_dict(spec: ModelSpec) -> dict:
    if isinstance(spec, MLPSpec):
        return {
            "kind": "mlp",
            "input_dim": spec.input_dim,
            "hidden": list(spec.hidden),
            "output_dim": spec.output_dim,
        }
    return {
        "kind": "embedding_bag",
        "vocab_size": spec.vocab_size,
        "embed_dim": spec.embed_dim,
        "output_dim": spec.output_dim,
    }


def train_from_dict(doc: dict) -> TrainConfig:
    doc = dict(doc)
    if "lr_milestones" in doc:
        doc["lr_milestones"] = tuple(doc["lr_milestones"])
    return TrainConfig(**doc)


def train_to_dict(cfg: TrainConfig) -> dict:
    return {
        "optimizer": cfg.optimizer,
        "lr": cfg.lr,
        "epochs": cfg.epochs,
        "batch_size": cfg.batch_size,
        "lr_milestones": list(cfg.lr_milestones),
        "lr_factor": cfg.lr_factor,
        "beta1": cfg.beta1,
        "beta2": cfg.beta2,
        "eps": cfg.eps,
        "seed": cfg.seed,
    }


def attack_config_from_dict(doc: dict) -> AttackConfig:
    """Parse the JSON config document (field names mirror AttackConfig)."""
    doc = dict(doc)
    try:
        search_train = train_from_dict(doc["search_train"])
        test_train = (
            train_from_dict(doc["test_train"]) if doc.get("test_train") else search_train
        )
        search_model = model_from_dict(doc["search_model"])
        test_model = (
            model_from_dict(doc["test_model"]) if doc.get("test_model") else search_model
        )
        curv = doc.get("curvature")
        return AttackConfig(
            dataset=doc["dataset"],
            trigger=trigger_from_dict(doc["trigger"]),
            search_trigger=(
                trigger_from_dict(doc["search_trigger"]) if doc.get("search_trigger") else None
            ),
            r=doc["r"],
            strategy=strategy_from_dict(doc["strategy"]),
            search_train=search_train,
            test_train=test_train,
            search_model=search_model,
            test_model=test_model,
            attacker_fraction=doc.get("attacker_fraction", 1.0),
            seeds=doc["seeds"],
            curvature=CurvatureConfig(**curv) if curv else CurvatureConfig(),
        )
    except KeyError as exc:
        raise ConfigurationError(f"attack config missing field {exc.args[0]!r}") from None
    except TypeError as exc:
        raise ConfigurationError(f"malformed attack config: {exc}") from None


def attack_config_to_dict(config: AttackConfig) -> dict:
    return {
        "dataset": dict(config.dataset),
        "trigger": trigger_to_dict(config.trigger),
        "search_trigger": (
            None if config.search_trigger is None else trigger_to_dict(config.search_trigger)
        ),
        "r": config.r,
        "strategy": strategy_to_dict(config.strategy),
        "search_train": train_to_dict(config.search_train),
        "test_train": train_to_dict(config.test_train),
        "search_model": model_to_dict(config.search_model),
        "test_model": model_to_dict(config.test_model),
        "attacker_fraction": config.attacker_fraction,
        "seeds": list(config.seeds),
        "curvature": {
            "h": config.curvature.h,
            "label_policy": config.curvature.label_policy,
            "displacement": config.curvature.displacement,
        },
    }
