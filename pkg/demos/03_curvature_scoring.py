"""Curvature along the trigger direction, from oracle to ranking.

Starts with cases where the answer is known in closed form (a quadratic
loss and a diagonal Hessian), then ranks real training samples by the
trigger-direction curvature proxy on an infected model and shows how the
ranking stratifies by class on this small, saturated task.
"""

import numpy as np

from poisonlab import (
    Blend,
    BlobsConfig,
    MLPSpec,
    TrainConfig,
    TriggerSpec,
    candidate_indices,
    finite_diff_hvp,
    gamma_from_grad,
    gen_blobs,
    hutchinson_tr2,
    init_model,
    make_pattern,
    materialize_mixed,
    rank_by_gamma,
    select_rss,
    split,
    stream,
    train,
)
from poisonlab.curvature import gamma_scores

# 1. Quadratic oracle: L(x) = 0.5 x^T A x, grad = A x, so the proxy equals
#    ||A k|| for any base point.
A = np.diag([1.0, 2.0])
k = np.array([1.0, 1.0])
vals = [gamma_from_grad(lambda p: A @ p, np.random.default_rng(i).normal(size=2), k)
        for i in range(5)]
print(f"quadratic oracle: gamma = {vals[0]:.12f} at every x (exact value sqrt(5) = {np.sqrt(5):.12f})")

# 2. Hutchinson: Tr(H^2) = E ||Hz||^2 over sign vectors; diag(2,3) gives 13
#    for every single draw, so the estimate is exact at any sample count.
H = np.diag([2.0, 3.0])
est = hutchinson_tr2(lambda z: H @ z, dim=2, n_samples=8, seed=0)
print(f"Hutchinson on diag(2,3): {est} (exact 13); finite-difference HVP version: "
      f"{hutchinson_tr2(finite_diff_hvp(lambda p: H @ p, np.zeros(2), h=1.0), 2, 8, 0)}")

# 3. Trigger-direction ranking on an infected model.
data = gen_blobs(BlobsConfig(n_classes=4, n_per_class=1250, side=8, noise_sigma=0.25, seed=7))
train_ds, _ = split(data, 0.2, seed=7)
trigger = TriggerSpec(kind=Blend(pattern=make_pattern("checkerboard", 8), lam=0.2), target=0)
cands = candidate_indices(train_ds, trigger)
pool = select_rss(cands, 40, stream(0, "selection"))
infected = train(
    init_model(MLPSpec(64, (64,), 4), seed=0),
    materialize_mixed(train_ds, pool, trigger),
    TrainConfig(optimizer="sgd", lr=0.05, epochs=30, batch_size=16, seed=0),
)

ranked = rank_by_gamma(train_ds, cands, infected, trigger)
gs = gamma_scores(train_ds, ranked, infected, trigger)
print(f"\ngamma over {len(cands)} candidates: min {gs.min():.4f}, median "
      f"{np.median(gs):.2f}, max {gs.max():.2f}")
for band, sel in (("lowest 400", ranked[:400]), ("highest 400", ranked[-400:])):
    dist = np.bincount(train_ds.labels[sel], minlength=4)
    print(f"  {band}: class distribution {dist.tolist()}")
print("\nOn this saturated desk-scale task the low-curvature band collapses onto")
print("the target class (their target-label gradients vanish at both endpoints),")
print("which is why the curvature bootstrap needs a richer task to shine.")
