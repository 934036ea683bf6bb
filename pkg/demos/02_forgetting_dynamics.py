"""Training dynamics of poisoned samples: the three importance measures.

Records every poisoned sample at every epoch while a victim model trains,
then scores forgetting events, final confidence, and loss swing, and
prints the forgetting-event histogram. A wide histogram means the poisons
contribute very unevenly, which is exactly what selection exploits.
"""

import numpy as np

from poisonlab import (
    Blend,
    BlobsConfig,
    ImportanceTrace,
    MLPSpec,
    TrainConfig,
    TriggerSpec,
    candidate_indices,
    fe_histogram,
    gen_blobs,
    init_model,
    make_pattern,
    materialize_mixed,
    record_epoch,
    score,
    select_rss,
    split,
    stream,
    train,
)

data = gen_blobs(BlobsConfig(n_classes=4, n_per_class=1250, side=8, noise_sigma=0.25, seed=7))
train_ds, _ = split(data, 0.2, seed=7)
trigger = TriggerSpec(kind=Blend(pattern=make_pattern("checkerboard", 8), lam=0.2), target=0)

pool = select_rss(candidate_indices(train_ds, trigger), 40, stream(3, "selection"))
mixed = materialize_mixed(train_ds, pool, trigger)
pool_ds = mixed.subset(np.flatnonzero(mixed.origin >= 0))

cfg = TrainConfig(optimizer="sgd", lr=0.05, epochs=30, batch_size=16, seed=3)
trace = ImportanceTrace(n_epochs=cfg.epochs, origin_indices=pool.indices)
train(
    init_model(MLPSpec(64, (64,), 4), seed=3),
    mixed,
    cfg,
    epoch_hook=lambda model, epoch: record_epoch(trace, model, pool_ds, epoch),
)

fe = score(trace, "fe")
cs = score(trace, "cs")
ls = score(trace, "ls")
bins, frac = fe_histogram(trace)

print("forgetting-event histogram over the 40 poisoned samples:")
width = max(bins.values())
for k in sorted(bins):
    print(f"  FE={k:2d}  {'#' * (40 * bins[k] // width):<40s} {bins[k]}")
print(f"fraction with at least one forgetting event: {frac:.2f}")

print(f"\nconfidence scores: min {cs.min():.3f}, median {np.median(cs):.3f}, max {cs.max():.3f}")
print(f"loss swings:       min {ls.min():.3f}, median {np.median(ls):.3f}, max {ls.max():.3f}")

order = np.argsort(-fe)[:5]
print("\nfive most-forgotten poisons (origin index, FE, CS, LS):")
for i in order:
    print(f"  {trace.origin_indices[i]:5d}  FE={int(fe[i])}  CS={cs[i]:.3f}  LS={ls[i]:.2f}")
print("\nForgettable poisons are the contested ones; they carry the attack.")
