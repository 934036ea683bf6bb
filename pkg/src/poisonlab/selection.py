"""Poisoned-sample selection strategies.

Implements random selection (RSS), one-shot greedy selection, curvature-
pool selection, and the iterative filter-and-refill search (FUS), plus its
curvature-bootstrapped variant (FUS++) that reinitializes the pool from
the lowest-curvature coarse candidate set on the first iteration.

Every strategy returns a PoisonPool of exactly K distinct indices drawn
from the legal candidate set, with indices sorted ascending and any
available importance scores aligned to them.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field, replace

import numpy as np

from .curvature import CurvatureConfig, rank_by_gamma
from .datakit import Dataset, Tokens
from .errors import ConfigurationError, UnsupportedInputError
from .importance import ImportanceTrace, MeasureKind, record_epoch, score
from .streams import substream_seed
from .tensorcore import ModelSpec, ModelState, TrainConfig, init_model, train
from .triggers import PoisonPool, TriggerSpec, materialize_mixed

Array = np.ndarray

# Soft budget on total example-epochs across a search; beyond this the run
# is allowed but flagged as likely impractical.
GUARDRAIL_EXAMPLE_EPOCHS = 5e7


@dataclass(frozen=True)
class Fixed:
    alpha: float

    def __post_init__(self):
        if not 0.0 <= self.alpha <= 1.0:
            raise ConfigurationError(f"fixed filtration ratio must be in [0, 1], got {self.alpha}")


@dataclass(frozen=True)
class LinearDecay:
    pass


@dataclass(frozen=True)
class ExponentialDecay:
    pass


PolicyKind = Fixed | LinearDecay | ExponentialDecay


def policy_alpha(policy: PolicyKind, N: int, n: int) -> float:
    """Filtration ratio at iteration n of N."""
    if not 1 <= n <= N:
        raise ConfigurationError(f"iteration {n} outside [1, {N}]")
    if isinstance(policy, Fixed):
        return policy.alpha
    if isinstance(policy, LinearDecay):
        return 0.5 - 0.4 * n / N
    return 0.1 ** (n / N)


@dataclass(frozen=True)
class StrategyConfig:
    """Which selection strategy to run and its hyperparameters.

    ``iterations`` is the search length N (FUS/FUS++ only); ``beta``
    scales the coarse low-curvature set to beta*K members; ``measure``
    is the importance score used for filtering; ``update_source``
    chooses whether FUS++ refills from the full candidate set or from
    the coarse set; ``k_prime_factor`` sizes the greedy trial pool.
    """

    kind: str  # "rss" | "greedy" | "curvature_pool" | "fus" | "fuspp"
    iterations: int = 0
    beta: float = 10.0
    policy: PolicyKind = field(default_factory=LinearDecay)
    measure: MeasureKind | str = MeasureKind.FE
    update_source: str = "full"  # "full" | "coarse"
    k_prime_factor: float = 2.0
    invert_cs: bool = False

    def __post_init__(self):
        if self.kind not in ("rss", "greedy", "curvature_pool", "fus", "fuspp"):
            raise ConfigurationError(f"unknown strategy kind {self.kind!r}")
        if self.iterations < 0:
            raise ConfigurationError("iterations must be >= 0")
        if self.beta < 1:
            raise ConfigurationError("beta must be >= 1")
        if self.update_source not in ("full", "coarse"):
            raise ConfigurationError(f"unknown update_source {self.update_source!r}")
        if self.kind == "greedy" and self.k_prime_factor <= 1:
            raise ConfigurationError("k_prime_factor must be > 1")
        object.__setattr__(self, "measure", MeasureKind(self.measure))

    @classmethod
    def rss(cls) -> "StrategyConfig":
        return cls(kind="rss")

    @classmethod
    def greedy(cls, k_prime_factor: float = 2.0) -> "StrategyConfig":
        return cls(kind="greedy", k_prime_factor=k_prime_factor)

    @classmethod
    def curvature_pool(cls, beta: float = 10.0) -> "StrategyConfig":
        return cls(kind="curvature_pool", beta=beta)

    @classmethod
    def fus(cls, iterations: int = 15, **kw) -> "StrategyConfig":
        return cls(kind="fus", iterations=iterations, **kw)

    @classmethod
    def fuspp(cls, iterations: int = 2, beta: float = 10.0, **kw) -> "StrategyConfig":
        return cls(kind="fuspp", iterations=iterations, beta=beta, **kw)


def poison_budget(r: float, n_clean: int) -> int:
    """K = round(r * |D|)."""
    k = int(round(r * n_clean))
    if k < 1:
        raise ConfigurationError(f"mixing ratio {r} yields an empty poison budget for n={n_clean}")
    return k


@dataclass
class SearchPipeline:
    """Everything a selection strategy needs to run trial poisonings.

    ``data`` is the attacker-visible clean training set; trial models are
    trained from scratch on data + fused pool with init/shuffle streams
    derived from (master_seed, tag) so that every iteration retrains
    afresh yet reproducibly.
    """

    data: Dataset
    trigger: TriggerSpec
    model_spec: ModelSpec
    train_config: TrainConfig
    master_seed: int
    curvature: CurvatureConfig = field(default_factory=CurvatureConfig)

    def train_poisoned(self, indices: Array, tag, record: bool = True):
        mixed = materialize_mixed(self.data, PoisonPool(indices), self.trigger)
        cfg = replace(self.train_config, seed=substream_seed(self.master_seed, "shuffle", tag))
        model0 = init_model(self.model_spec, substream_seed(self.master_seed, "init", tag))
        trace = None
        hook = None
        if record:
            pool_ds = mixed.subset(np.flatnonzero(mixed.origin >= 0))
            trace = ImportanceTrace(cfg.epochs, origin_indices=indices)
            hook = lambda model, epoch: record_epoch(trace, model, pool_ds, epoch)
        model = train(model0, mixed, cfg, epoch_hook=hook)
        return model, trace


def select_rss(candidates, K: int, rng: np.random.Generator) -> PoisonPool:
    """Uniform sample of K candidates without replacement."""
    candidates = np.asarray(candidates, dtype=np.int64)
    if K > len(candidates):
        raise ConfigurationError(f"K={K} exceeds the {len(candidates)} candidates")
    picked = rng.choice(len(candidates), size=K, replace=False)
    return PoisonPool(indices=np.sort(candidates[picked]))


def select_greedy(
    pipeline: SearchPipeline,
    candidates,
    K: int,
    k_prime_factor: float,
    rng: np.random.Generator,
) -> PoisonPool:
    """One oversized random trial, keep the K most-forgotten samples."""
    candidates = np.asarray(candidates, dtype=np.int64)
    k_prime = int(round(k_prime_factor * K))
    if k_prime < K:
        raise ConfigurationError(f"K'={k_prime} must be >= K={K}")
    if k_prime > len(candidates):
        raise ConfigurationError(f"K'={k_prime} exceeds the {len(candidates)} candidates")
    trial = select_rss(candidates, k_prime, rng)
    _, trace = pipeline.train_poisoned(trial.indices, tag="greedy", record=True)
    scores = score(trace, MeasureKind.FE)
    order = np.lexsort((trial.indices, -scores))[:K]
    keep = np.sort(order)
    return PoisonPool(indices=trial.indices[keep], scores=scores[keep])


def _coarse_set(
    data: Dataset,
    candidates: Array,
    K: int,
    beta: float,
    model: ModelState,
    spec: TriggerSpec,
    curvature: CurvatureConfig,
) -> Array:
    size = int(round(beta * K))
    if size >= len(candidates):
        # Degenerates to the full candidate set; no ranking needed.
        return candidates
    return rank_by_gamma(data, candidates, model, spec, curvature)[:size]


def select_curvature_pool(
    data: Dataset,
    candidates,
    K: int,
    beta: float,
    trained_model: ModelState,
    spec: TriggerSpec,
    rng: np.random.Generator,
    curvature: CurvatureConfig = CurvatureConfig(),
) -> PoisonPool:
    """K uniform draws from the beta*K lowest-curvature candidates."""
    candidates = np.asarray(candidates, dtype=np.int64)
    if len(candidates) == 0:
        raise ConfigurationError("no candidates")
    coarse = _coarse_set(data, candidates, K, beta, trained_model, spec, curvature)
    return select_rss(coarse, K, rng)


def fus_search(
    pipeline: SearchPipeline,
    candidates,
    K: int,
    config: StrategyConfig,
    rng: np.random.Generator,
) -> PoisonPool:
    """Iterative filter-and-refill search over the candidate set.

    The pool starts as an RSS draw (N = 0 therefore IS RSS, bit for bit).
    Each iteration retrains an infected model from scratch; under "fuspp"
    the first iteration instead ranks every candidate by curvature along
    the trigger direction and reseeds the pool from the coarse low-
    curvature set. Later iterations drop the floor(alpha*K) least
    important members and refill uniformly from the update source minus
    the survivors. Scores on the returned pool come from the last
    measuring iteration; members refilled afterwards carry NaN.
    """
    if config.kind not in ("fus", "fuspp"):
        raise ConfigurationError(f"fus_search cannot run strategy {config.kind!r}")
    candidates = np.asarray(candidates, dtype=np.int64)
    if config.kind == "fuspp" and isinstance(pipeline.data.modality, Tokens):
        raise UnsupportedInputError("curvature bootstrap is undefined for token inputs")
    N = config.iterations
    cost = N * pipeline.train_config.epochs * (len(pipeline.data) + K)
    if cost > GUARDRAIL_EXAMPLE_EPOCHS:
        warnings.warn(
            f"search will process ~{cost:.2g} example-epochs; consider lowering N",
            stacklevel=2,
        )

    pool = select_rss(candidates, K, rng)
    if N == 0:
        return pool
    indices = pool.indices
    scores = np.full(K, np.nan)
    coarse = candidates
    for n in range(1, N + 1):
        if config.kind == "fuspp" and n == 1:
            model, _ = pipeline.train_poisoned(indices, tag=n, record=False)
            coarse = _coarse_set(
                pipeline.data, candidates, K, config.beta, model,
                pipeline.trigger, pipeline.curvature,
            )
            indices = select_rss(coarse, K, rng).indices
            scores = np.full(K, np.nan)
            continue
        _, trace = pipeline.train_poisoned(indices, tag=n, record=True)
        scores = score(trace, config.measure, invert_cs=config.invert_cs)
        alpha = policy_alpha(config.policy, N, n)
        n_swap = math.floor(alpha * K)
        if n_swap == 0:
            continue
        # Ascending importance, ties broken by origin index; drop the head.
        order = np.lexsort((indices, scores))
        keep = order[n_swap:]
        kept_idx, kept_scores = indices[keep], scores[keep]
        source = candidates if config.update_source == "full" else coarse
        avail = np.setdiff1d(source, kept_idx, assume_unique=False)
        if len(avail) < n_swap:
            raise ConfigurationError("update source too small to refill the pool")
        refill = avail[rng.choice(len(avail), size=n_swap, replace=False)]
        indices = np.concatenate([kept_idx, refill])
        scores = np.concatenate([kept_scores, np.full(n_swap, np.nan)])
        resort = np.argsort(indices)
        indices, scores = indices[resort], scores[resort]
    return PoisonPool(indices=indices, scores=scores)


def run_strategy(
    pipeline: SearchPipeline,
    candidates,
    K: int,
    config: StrategyConfig,
    rng: np.random.Generator,
) -> PoisonPool:
    """Dispatch a StrategyConfig to the matching selection routine."""
    if config.kind == "rss":
        return select_rss(candidates, K, rng)
    if config.kind == "greedy":
        return select_greedy(pipeline, candidates, K, config.k_prime_factor, rng)
    if config.kind == "curvature_pool":
        prelim = select_rss(candidates, K, rng)
        model, _ = pipeline.train_poisoned(prelim.indices, tag="curvature-pool", record=False)
        return select_curvature_pool(
            pipeline.data, candidates, K, config.beta, model,
            pipeline.trigger, rng, pipeline.curvature,
        )
    return fus_search(pipeline, candidates, K, config, rng)
