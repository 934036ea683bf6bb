"""Backdooring a regression model: drag every triggered prediction to 20.

The dataset maps a monotone intensity ramp to a real-valued target in
[20, 50]. Poisons blend in a trigger at lambda 0.15 and set the target
value to 20. Attack strength is the RMSE between the infected model's
outputs on triggered test inputs and the attacker's target: lower is a
stronger attack. Loss swing replaces the classification-only measures.
"""

from poisonlab import attack_config_from_dict, run_attack

BASE = {
    "dataset": {"kind": "regression", "n": 5000, "side": 8, "age_range": [20, 50],
                 "seed": 11, "test_fraction": 0.2, "noise_sigma": 0.05},
    "trigger": {"kind": "blend", "lambda": 0.15,
                 "pattern": {"preset": "checkerboard", "side": 8}, "target": 20.0},
    "r": 0.01,
    "search_train": {"optimizer": "adam", "lr": 0.005, "epochs": 30, "batch_size": 32},
    "search_model": {"kind": "mlp", "input_dim": 64, "hidden": [32], "output_dim": 1},
    "seeds": [0, 1, 2],
}

print("age-style regression, 4000 train / 1000 test, K = 40 poisons at lambda 0.15\n")
print(f"{'strategy':<14s} {'clean RMSE':>12s} {'RMSE to target 20':>19s}")
for name, strat in (
    ("RSS", {"kind": "rss"}),
    ("FUS N=10 (LS)", {"kind": "fus", "iterations": 10, "measure": "ls"}),
):
    report = run_attack(attack_config_from_dict({**BASE, "strategy": strat}))
    s = report["summary"]
    print(f"{name:<14s} {s['clean_rmse_mean']:>7.2f}+-{s['clean_rmse_std']:<4.2f} "
          f"{s['attack_rmse_mean']:>12.2f}+-{s['attack_rmse_std']:<5.2f}")

print("\nClean RMSE barely moves while the triggered predictions drift toward 20;")
print("loss-swing selection tightens the pull at the same budget.")
