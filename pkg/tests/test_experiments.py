import csv
import json
import math

import numpy as np
import pytest

import skysift as sk
from skysift.detector import detect_full, detector_from_scenario, threshold
from skysift.errors import ConfigError
from skysift.experiments import (
    EXPERIMENT_NAMES,
    ExperimentConfig,
    run_experiment,
    run_horizon_sweep,
    run_mc_vs_exact,
    run_roc,
    run_scatter,
    run_streaming,
    run_surface,
)
from skysift.simulator import simulate_batch


def make_config(tmp_path, name, scenario=None, **kwargs):
    return ExperimentConfig(
        scenario=scenario or sk.Scenario.default(),
        name=name,
        out_dir=tmp_path / name,
        **kwargs,
    )


def read_csv(path):
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    return rows[0], rows[1:]


def test_config_validation(tmp_path):
    with pytest.raises(ConfigError):
        make_config(tmp_path, "unknown-name")
    with pytest.raises(ConfigError):
        make_config(tmp_path, "scatter", n_trials=0)
    with pytest.raises(ConfigError):
        make_config(tmp_path, "scatter", accuracy=0.0)
    cfg = make_config(tmp_path, "scatter")
    assert cfg.trials() == 500
    assert make_config(tmp_path, "mc-vs-exact").trials() == 5000
    assert make_config(tmp_path, "scatter", n_trials=77).trials() == 77


def test_run_scatter(tmp_path):
    cfg = make_config(tmp_path, "scatter", n_trials=80, seed=3)
    manifest = run_scatter(cfg)

    header, rows = read_csv(cfg.out_dir / "scatter.csv")
    assert header == ["trial", "label", "statistic", "z"]
    assert len(rows) == 80

    # statistic column is recomputable from the simulated batch
    batch = simulate_batch(cfg.scenario, 80, 3)
    spec = detector_from_scenario(cfg.scenario)
    for row in rows[:5]:
        i = int(row[0])
        label, series = batch.trials[i]
        assert int(row[1]) == label
        assert float(row[2]) == pytest.approx(
            detect_full(spec, series).statistic, rel=1e-12
        )
        assert float(row[3]) == threshold(spec)

    summary = json.loads((cfg.out_dir / "scatter_summary.json").read_text())
    confusion = summary["confusion"]
    assert sum(confusion.values()) == 80
    assert summary["n_trials"] == 80

    assert set(manifest.outputs) == {"scatter.csv", "scatter_summary.json"}
    assert manifest.seed == 3


def test_scatter_deterministic_outputs(tmp_path):
    cfg_a = make_config(tmp_path / "a", "scatter", n_trials=40, seed=5)
    cfg_b = make_config(tmp_path / "b", "scatter", n_trials=40, seed=5)
    hashes_a = run_scatter(cfg_a).outputs
    hashes_b = run_scatter(cfg_b).outputs
    assert hashes_a == hashes_b


def test_manifest_rerun_reproduces_checksums(tmp_path):
    cfg = make_config(tmp_path / "first", "scatter", n_trials=30, seed=8)
    first = run_scatter(cfg)
    manifest_path = cfg.out_dir / "scatter_manifest.json"
    assert manifest_path.exists()

    rebuilt = ExperimentConfig.from_manifest(manifest_path, tmp_path / "second")
    assert rebuilt.seed == cfg.seed
    assert rebuilt.n_trials == cfg.n_trials
    assert rebuilt.scenario.to_dict() == cfg.scenario.to_dict()
    second = run_experiment(rebuilt)
    assert second.outputs == first.outputs


def test_run_mc_vs_exact(tmp_path):
    cfg = make_config(tmp_path, "mc-vs-exact", n_trials=2000, seed=1)
    run_mc_vs_exact(cfg)
    header, rows = read_csv(cfg.out_dir / "mc_vs_exact.csv")
    assert header == [
        "n_trials",
        "empirical_error",
        "exact_error",
        "empirical_miss1",
        "exact_miss1",
        "empirical_miss2",
        "exact_miss2",
    ]
    counts = [int(r[0]) for r in rows]
    assert counts == sorted(counts)
    assert counts[-1] == 2000

    report = sk.total_error(cfg.scenario)
    exact = {float(r[2]) for r in rows}
    assert exact == {report.total_error}

    # all populated cells are finite; blanks only while a class is unseen
    for row in rows:
        for cell in row[1:]:
            if cell != "":
                assert math.isfinite(float(cell))
    assert rows[-1][3] != "" and rows[-1][5] != ""

    final_emp = float(rows[-1][1])
    se = math.sqrt(max(final_emp * (1 - final_emp), 1e-12) / 2000)
    assert abs(final_emp - report.total_error) <= 3 * se


def test_run_streaming(tmp_path):
    cfg = make_config(tmp_path, "streaming", seed=2)
    run_streaming(cfg)
    header, rows = read_csv(cfg.out_dir / "streaming.csv")
    assert header == ["k", "y", "statistic", "z", "decision", "conditional_error"]
    assert len(rows) == cfg.scenario.sampling.horizon
    assert [int(r[0]) for r in rows] == list(range(20))
    for row in rows:
        assert int(row[4]) in (1, 2)
        assert 0.0 < float(row[5]) <= 0.5

    summary = json.loads((cfg.out_dir / "streaming_summary.json").read_text())
    assert summary["true_label"] == 2
    assert 1 <= summary["stabilized_from_count"] <= 20
    assert summary["final_decision"] == int(rows[-1][4])


def test_run_streaming_requires_a_class2_trial(tmp_path):
    scenario = sk.Scenario.from_dict({"prior1": 0.999})
    cfg = make_config(tmp_path, "streaming", scenario=scenario, n_trials=2, seed=1)
    with pytest.raises(ConfigError):
        run_streaming(cfg)


def test_run_horizon_sweep(tmp_path):
    cfg = make_config(tmp_path, "horizon-sweep")
    run_horizon_sweep(cfg, kf_values=(1, 5, 10, 20, 40))
    header, rows = read_csv(cfg.out_dir / "horizon_sweep.csv")
    assert header == ["kf", "total_error"]
    errors = [float(r[1]) for r in rows]
    assert [int(r[0]) for r in rows] == [1, 5, 10, 20, 40]
    assert all(b < a for a, b in zip(errors, errors[1:]))
    assert errors[0] < 0.5  # even one sample beats guessing

    summary = json.loads((cfg.out_dir / "horizon_sweep_summary.json").read_text())
    assert summary["log_error_slope"] < 0.0
    with pytest.raises(ConfigError):
        run_horizon_sweep(cfg, kf_values=(0, 5))


def test_run_surface(tmp_path):
    cfg = make_config(tmp_path, "surface")
    run_surface(cfg, gain_ratios=[0.5, 1.0, 2.0], mass_ratios=[0.5, 1.0, 2.0])
    header, rows = read_csv(cfg.out_dir / "surface.csv")
    assert header[0] == "mass_ratio\\gain_ratio"
    assert len(rows) == 3
    center = float(rows[1][2])
    assert center == math.log10(0.5)


def test_run_roc(tmp_path):
    cfg = make_config(tmp_path, "roc", n_trials=300, seed=4)
    run_roc(cfg)
    header, rows = read_csv(cfg.out_dir / "roc.csv")
    assert header == ["threshold", "false_positive_rate", "true_positive_rate"]
    thresholds = [float(r[0]) for r in rows]
    fpr = [float(r[1]) for r in rows]
    tpr = [float(r[2]) for r in rows]
    assert thresholds == sorted(thresholds)
    assert fpr[0] == 1.0 and tpr[0] == 1.0
    assert fpr[-1] == 0.0 and tpr[-1] == 0.0
    assert all(b <= a for a, b in zip(fpr, fpr[1:]))
    assert all(b <= a for a, b in zip(tpr, tpr[1:]))
    z = threshold(detector_from_scenario(cfg.scenario))
    assert any(t == z for t in thresholds)


def test_run_experiment_dispatch(tmp_path):
    for name in EXPERIMENT_NAMES:
        cfg = ExperimentConfig(
            scenario=sk.Scenario.default(),
            name=name,
            out_dir=tmp_path / name,
            seed=2,
            n_trials=60 if name in ("scatter", "streaming", "mc-vs-exact", "roc") else None,
        )
        manifest = run_experiment(cfg)
        manifest_path = cfg.out_dir / f"{name}_manifest.json"
        assert manifest_path.exists()
        recorded = json.loads(manifest_path.read_text())
        assert recorded["outputs"] == manifest.outputs
        assert recorded["config"]["name"] == name
        for filename in manifest.outputs:
            assert (cfg.out_dir / filename).exists()
