"""Token-sequence backdoor: one inserted trigger word flips the class.

Builds a synthetic four-class "bag of words" task (each class draws from
its own token range), inserts a reserved trigger token at the second
position of selected sentences, and flips their labels. The mean-pooled
embedding model learns the trigger easily; FUS still prunes the weakest
poisons. The curvature bootstrap is undefined for tokens and refuses.
"""

import numpy as np

from poisonlab import (
    Classification,
    Dataset,
    EmbeddingBagSpec,
    SearchPipeline,
    StrategyConfig,
    TokenInsert,
    Tokens,
    TrainConfig,
    TriggerSpec,
    UnsupportedInputError,
    accuracy,
    build_poisoned_testset,
    candidate_indices,
    forward_batch,
    fus_search,
    init_model,
    materialize_mixed,
    stream,
    train,
)

VOCAB, TRIGGER_TOKEN, N_CLASSES = 41, 40, 4
rng = np.random.default_rng(0)


def make_sentences(n_per_class):
    seqs, labels = [], []
    for c in range(N_CLASSES):
        lo = c * 10
        for _ in range(n_per_class):
            length = int(rng.integers(4, 9))
            # mostly class-range tokens, some noise from the shared range
            toks = np.where(rng.random(length) < 0.7,
                            rng.integers(lo, lo + 10, length),
                            rng.integers(0, VOCAB - 1, length))
            seqs.append(tuple(int(t) for t in toks))
            labels.append(c)
    return Dataset(task=Classification(N_CLASSES), modality=Tokens(VOCAB),
                   features=tuple(seqs), labels=np.array(labels), name="bow")


train_ds, test_ds = make_sentences(250), make_sentences(60)
trigger = TriggerSpec(kind=TokenInsert(token_id=TRIGGER_TOKEN, position=1), target=1)
print(f"{len(train_ds)} training sentences; trigger token {TRIGGER_TOKEN} at position 1, target class 1")

pipe = SearchPipeline(
    data=train_ds, trigger=trigger,
    model_spec=EmbeddingBagSpec(VOCAB, 16, N_CLASSES),
    train_config=TrainConfig(optimizer="adam", lr=0.02, epochs=12, batch_size=32),
    master_seed=0,
)
cands = candidate_indices(train_ds, trigger)
pool = fus_search(pipe, cands, 10, StrategyConfig.fus(iterations=3), stream(0, "selection"))
print(f"FUS kept origins {pool.indices.tolist()}")

victim = train(
    init_model(pipe.model_spec, seed=1),
    materialize_mixed(train_ds, pool, trigger),
    TrainConfig(optimizer="adam", lr=0.02, epochs=12, batch_size=32, seed=1),
)
poisoned = build_poisoned_testset(test_ds, trigger)
asr = float((forward_batch(victim, poisoned.features).argmax(1) == 1).mean())
print(f"clean accuracy {accuracy(victim, test_ds):.3f}, ASR with 10 poisons: {asr:.3f}")

try:
    fus_search(pipe, cands, 10, StrategyConfig.fuspp(), stream(0, "selection"))
except UnsupportedInputError as exc:
    print(f"\nFUS++ on tokens is refused as expected: {exc}")
