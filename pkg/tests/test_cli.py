import json

from poisonlab import load_dataset
from poisonlab.cli import main


def _write_config(tmp_path, seeds=(0,)):
    doc = {
        "dataset": {"kind": "blobs", "n_classes": 3, "n_per_class": 40, "side": 4,
                     "noise_sigma": 0.25, "seed": 5, "test_fraction": 0.25},
        "trigger": {"kind": "blend", "lambda": 0.25,
                     "pattern": {"preset": "checkerboard", "side": 4},
                     "target": 0, "label_mode": "flip"},
        "r": 0.05,
        "strategy": {"kind": "rss"},
        "search_train": {"optimizer": "sgd", "lr": 0.05, "epochs": 4, "batch_size": 16},
        "search_model": {"kind": "mlp", "input_dim": 16, "hidden": [8], "output_dim": 3},
        "seeds": list(seeds),
    }
    path = tmp_path / "config.json"
    path.write_text(json.dumps(doc))
    return path


def test_gen_data_blobs(tmp_path):
    out = tmp_path / "blobs.csv"
    rc = main(["gen-data", "--kind", "blobs", "--n-classes", "3", "--n-per-class", "5",
               "--side", "3", "--out", str(out)])
    assert rc == 0
    data = load_dataset(out, "dense_csv")
    assert len(data) == 15


def test_gen_data_regression(tmp_path):
    out = tmp_path / "reg.csv"
    rc = main(["gen-data", "--kind", "regression", "--n", "12", "--side", "3",
               "--lo", "20", "--hi", "50", "--out", str(out)])
    assert rc == 0
    data = load_dataset(out, "dense_csv")
    assert len(data) == 12


def test_run_writes_report_and_seed_override(tmp_path, capsys):
    cfg = _write_config(tmp_path)
    out_dir = tmp_path / "out"
    rc = main(["run", "--config", str(cfg), "--seed", "9", "--out", str(out_dir)])
    assert rc == 0
    report = json.loads((out_dir / "report.json").read_text())
    assert [blk["seed"] for blk in report["per_seed"]] == [9]
    assert "asr_mean" in capsys.readouterr().out


def test_run_reproducible_bytes(tmp_path):
    cfg = _write_config(tmp_path)
    a_dir, b_dir = tmp_path / "a", tmp_path / "b"
    assert main(["run", "--config", str(cfg), "--out", str(a_dir)]) == 0
    assert main(["run", "--config", str(cfg), "--out", str(b_dir)]) == 0
    a = json.loads((a_dir / "report.json").read_text())
    b = json.loads((b_dir / "report.json").read_text())
    a.pop("wall_time")
    b.pop("wall_time")
    assert json.dumps(a, sort_keys=True) == json.dumps(b, sort_keys=True)


def test_run_bad_config_exit_code(tmp_path, capsys):
    path = tmp_path / "broken.json"
    path.write_text('{"r": 0.05}')
    assert main(["run", "--config", str(path)]) == 2
    assert "configuration error" in capsys.readouterr().err
    assert main(["run", "--config", str(tmp_path / "missing.json")]) == 2


def test_removal_command(tmp_path, capsys):
    cfg = _write_config(tmp_path)
    rc = main(["removal", "--config", str(cfg), "--rule", "random",
               "--fractions", "0,1", "--out", str(tmp_path)])
    assert rc == 0
    curve = json.loads((tmp_path / "removal_random.json").read_text())
    assert curve["fractions"] == [0.0, 1.0]


def test_sweep_and_report_aggregation(tmp_path):
    base = json.loads(_write_config(tmp_path).read_text())
    for key in ("r", "strategy", "seeds"):
        base.pop(key)
    sweep_doc = {"base": base, "ratios": [0.05], "strategies": [{"kind": "rss"}],
                 "n_seeds": 2, "base_seed": 3}
    sweep_cfg = tmp_path / "sweep.json"
    sweep_cfg.write_text(json.dumps(sweep_doc))
    out_dir = tmp_path / "sweep_out"
    assert main(["sweep", "--config", str(sweep_cfg), "--out", str(out_dir)]) == 0
    assert (out_dir / "summary.csv").exists()
    reports = sorted(out_dir.glob("run_*.json"))
    assert len(reports) == 2

    summary_csv = tmp_path / "agg.csv"
    rc = main(["report", *map(str, reports), "--out", str(summary_csv)])
    assert rc == 0
    lines = summary_csv.read_text().strip().splitlines()
    assert lines[0] == "strategy,r,seed,asr,clean_metric"
    assert len(lines) == 3
