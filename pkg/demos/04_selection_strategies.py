"""Head-to-head selection strategies at a fixed poisoning budget.

Runs random selection, one-shot greedy, the iterative filter-and-refill
search (FUS), and its curvature-bootstrapped variant (FUS++) on the same
dataset and budget, three seeds each, and tabulates attack success rate.
Takes a couple of minutes: FUS retrains a victim per iteration.
"""

import numpy as np

from poisonlab import attack_config_from_dict, run_attack

BASE = {
    "dataset": {"kind": "blobs", "n_classes": 4, "n_per_class": 1250, "side": 8,
                 "noise_sigma": 0.25, "seed": 7, "test_fraction": 0.2},
    "trigger": {"kind": "blend", "lambda": 0.2,
                 "pattern": {"preset": "checkerboard", "side": 8},
                 "target": 0, "label_mode": "flip"},
    "r": 0.01,
    "search_train": {"optimizer": "sgd", "lr": 0.05, "epochs": 30, "batch_size": 16},
    "search_model": {"kind": "mlp", "input_dim": 64, "hidden": [64], "output_dim": 4},
    "seeds": [0, 1, 2],
}

STRATEGIES = [
    ("RSS (random)", {"kind": "rss"}),
    ("greedy K'=2K", {"kind": "greedy", "k_prime_factor": 2.0}),
    ("FUS N=10", {"kind": "fus", "iterations": 10}),
    ("FUS++ N=2 b=10", {"kind": "fuspp", "iterations": 2, "beta": 10}),
]

print(f"budget K = 40 poisons in 4000 clean samples (r = 0.01), 3 seeds each\n")
print(f"{'strategy':<16s} {'ASR':>14s} {'clean acc':>10s} {'mean gamma sel/rss':>20s}")
rows = {}
for name, strat in STRATEGIES:
    report = run_attack(attack_config_from_dict({**BASE, "strategy": strat}))
    s = report["summary"]
    gsel = np.mean([b["gamma"]["mean_selected"] for b in report["per_seed"]])
    gbase = np.mean([b["gamma"]["mean_rss_baseline"] for b in report["per_seed"]])
    rows[name] = s["asr_mean"]
    print(f"{name:<16s} {s['asr_mean']:>7.3f}+-{s['asr_std']:<5.3f} "
          f"{s['clean_acc_mean']:>10.4f} {gsel:>10.2f}/{gbase:<8.2f}")

print(f"\nFUS over random: {rows['FUS N=10'] - rows['RSS (random)']:+.3f} ASR at the same budget.")
print("FUS++ inherits the curvature collapse shown in demo 03 at this scale:")
print("its coarse pool is all target-class samples, which make inert poisons.")
