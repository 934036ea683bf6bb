"""poisonlab: sample-selection efficiency in poisoning-based backdoor attacks.

A desk-scale, numpy-only laboratory: deterministic models and training,
synthetic datasets, trigger fusion, importance measures over training
dynamics, input-curvature scoring, the iterative filter-and-refill pool
search (with and without the curvature bootstrap), and an experiment
harness measuring attack success rate against the poisoning budget.
"""

from .curvature import (
    CurvatureConfig,
    export_gamma_csv,
    finite_diff_hvp,
    gamma,
    gamma_batch,
    gamma_from_grad,
    gamma_scores,
    hutchinson_tr2,
    rank_by_gamma,
    trigger_direction,
)
from .datakit import (
    BlobsConfig,
    Classification,
    Dataset,
    Dense,
    Regression,
    Tokens,
    gen_blobs,
    gen_regression,
    load_dataset,
    save_dataset,
    split,
)
from .errors import (
    ConfigurationError,
    InvariantViolation,
    NumericError,
    PoisonLabError,
    SchemaError,
    ShapeError,
    UnsupportedInputError,
)
from .importance import ImportanceTrace, MeasureKind, export_trace_csv, record_epoch, score
from .lab import (
    AttackConfig,
    attack_config_from_dict,
    attack_config_to_dict,
    build_dataset,
    class_distribution,
    fe_histogram,
    read_pool_csv,
    read_report,
    removal_experiment,
    run_attack,
    run_clean_control,
    sweep,
    volume_savings,
    write_pool_csv,
    write_report,
)
from .selection import (
    ExponentialDecay,
    Fixed,
    LinearDecay,
    SearchPipeline,
    StrategyConfig,
    fus_search,
    poison_budget,
    policy_alpha,
    select_curvature_pool,
    select_greedy,
    select_rss,
)
from .streams import stream, substream_seed
from .tensorcore import (
    EmbeddingBagSpec,
    MLPSpec,
    ModelState,
    TrainConfig,
    accuracy,
    batch_loss_and_grads,
    forward,
    forward_batch,
    init_model,
    loss_and_grads,
    optimizer_step,
    param_count,
    rmse,
    softmax,
    train,
)
from .triggers import (
    Blend,
    Patch,
    PoisonPool,
    TokenInsert,
    TriggerSpec,
    apply_trigger,
    apply_trigger_batch,
    build_poisoned_testset,
    candidate_indices,
    load_pattern,
    make_pattern,
    materialize_mixed,
    save_pattern,
)

__version__ = "0.1.0"
