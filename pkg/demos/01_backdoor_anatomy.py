"""Anatomy of a blended backdoor attack on the desk-scale blobs task.

Builds the clean dataset, fuses a checkerboard trigger into a handful of
training samples, trains victim models with and without the poison, and
compares clean accuracy against attack success rate.
"""

from poisonlab import (
    Blend,
    BlobsConfig,
    MLPSpec,
    TrainConfig,
    TriggerSpec,
    accuracy,
    build_poisoned_testset,
    candidate_indices,
    forward_batch,
    gen_blobs,
    init_model,
    make_pattern,
    materialize_mixed,
    select_rss,
    split,
    stream,
    train,
)

data = gen_blobs(BlobsConfig(n_classes=4, n_per_class=1250, side=8, noise_sigma=0.25, seed=7))
train_ds, test_ds = split(data, 0.2, seed=7)
print(f"clean training set: {len(train_ds)} examples, test set: {len(test_ds)}")

trigger = TriggerSpec(
    kind=Blend(pattern=make_pattern("checkerboard", 8), lam=0.2),
    target=0,
    label_mode="flip",
)
K = 40  # r = 0.01 of the training set
pool = select_rss(candidate_indices(train_ds, trigger), K, stream(0, "selection"))
mixed = materialize_mixed(train_ds, pool, trigger)
print(f"mixed training set: {len(mixed)} examples ({K} poisoned, labels flipped to 0)")

cfg = TrainConfig(optimizer="sgd", lr=0.05, epochs=30, batch_size=16, seed=1)
spec = MLPSpec(64, (64,), 4)

victim = train(init_model(spec, seed=1), mixed, cfg)
control = train(init_model(spec, seed=1), train_ds, cfg)

poisoned_test = build_poisoned_testset(test_ds, trigger)
asr = float((forward_batch(victim, poisoned_test.features).argmax(1) == 0).mean())
asr_control = float((forward_batch(control, poisoned_test.features).argmax(1) == 0).mean())

print(f"\nclean accuracy: poisoned model {accuracy(victim, test_ds):.4f}, "
      f"control {accuracy(control, test_ds):.4f}")
print(f"attack success rate on {len(poisoned_test)} triggered inputs: "
      f"{asr:.3f} (control model: {asr_control:.3f}, chance 0.25)")
print("\nThe backdoor hides behind unchanged clean accuracy; only triggered")
print("inputs reveal it, and only on the model that saw the poisons.")
