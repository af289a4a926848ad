import json
import numpy as np
import pytest
from modsampling.encoder import minFoldSeparationBound
from modsampling.errors import ParameterError
from modsampling.experiment import ExperimentConfig, runExperiment, runPipeline, runSweep, separationDemo, simulate


def sinusoidConfig(**overrides):
    description = {"signal": {"kind": "sinusoid", "omega": 1.0, "amp": 4.5},
                   "params": {"lambda": 1.0, "h": 1.0, "alpha": 0.01},
                   "T": 0.005, "K": 2000, "method": "threshold", "N": 2}
    description.update(overrides)
    return ExperimentConfig.fromDict(description)


def test_preset_overrides():
    config = ExperimentConfig.fromDict({"preset": "exp1", "N": 2, "signal": {"seed": 5},
                                        "noise": {"eta_inf": 0.01, "seed": 3}})
    assert config.preset == "exp1"
    assert config.N == 2
    assert config.signal["seed"] == 5
    assert config.signal["omega"] == 4.4
    assert config.params.lam == 1.5
    assert config.eta_inf == 0.01
    assert config.noise_seed == 3
    assert ExperimentConfig.fromDict(config.toDict()).toDict() == config.toDict()


def test_invalid_configurations():
    for description in ({"preset": "exp1", "K": 0},
                        {"preset": "exp1", "colour": "red"},
                        {"preset": "exp9"},
                        {"params": {"lambda": 1.0}, "T": 0.1, "K": 10},
                        {"preset": "exp1", "method": "newton"},
                        {"preset": "exp1", "N": 0},
                        {"preset": "exp1", "signal": {"kind": "chirp"}},
                        {"preset": "exp1", "sweep": {"kind": "lambda_eff", "values": [0.5]}}):
        with pytest.raises(ParameterError):
            ExperimentConfig.fromDict(description)


def test_config_file(tmp_path):
    path = tmp_path / "config.json"
    path.write_text(json.dumps({"preset": "exp2", "K": 300}), encoding="utf-8")
    config = ExperimentConfig.fromFile(path, {"N": 1})
    assert (config.K, config.N, config.T) == (300, 1, 1e-4)
    path.write_text("{\"K\": ", encoding="utf-8")
    with pytest.raises(ParameterError):
        ExperimentConfig.fromFile(path)


def test_run_experiment_writes_outputs(tmp_path):
    config = ExperimentConfig.fromDict({"preset": "exp1"})
    config.outputs = {"report": str(tmp_path / "report.json"), "plot": str(tmp_path / "plot.csv"),
                      "trace": str(tmp_path / "trace.csv")}
    report = runExperiment(config)
    for name in ("report.json", "plot.csv", "trace.csv", "trace.json"):
        assert (tmp_path / name).exists()
    with open(tmp_path / "report.json", encoding="utf-8") as stream:
        description = json.load(stream)
    assert description["config"]["preset"] == "exp1"
    assert description["P"] == report.P


def test_automatic_filter_order():
    trace, report = runPipeline(sinusoidConfig(N="auto"))
    assert report.N >= 2
    assert report.conditions == {"TH1": True, "TH2": True}
    assert report.P == len(trace.ground_truth.folds)
    with pytest.raises(ParameterError):
        runPipeline(ExperimentConfig.fromDict({"preset": "exp1", "N": "auto"}))


def test_sweep_over_the_filter_order(tmp_path):
    config = sinusoidConfig(sweep={"kind": "N", "values": [1, 2, 3]}, workers=2)
    config.outputs = {"sweep": str(tmp_path / "sweep.csv")}
    rows = runSweep(config)
    assert [row["N"] for row in rows] == [1, 2, 3]
    assert all(row["P"] == row["P_true"] for row in rows)
    assert all(row["err"] < 1.0 for row in rows)
    assert (tmp_path / "sweep.csv").exists()
    with pytest.raises(ParameterError):
        runSweep(sinusoidConfig())


def test_sweep_over_seeds():
    config = ExperimentConfig.fromDict({"preset": "exp1", "sweep": {"kind": "seed", "values": [0, 1]}})
    rows = runSweep(config)
    assert [row["seed"] for row in rows] == [0, 1]
    assert all("fold_count_bound" in row for row in rows)


def test_separation_demo():
    rows = separationDemo()
    assert [row["h"] for row in rows] == [0.0, 5e-3]
    assert rows[0]["guaranteed_gap"] == 0.0
    assert rows[1]["min_gap"] >= rows[1]["guaranteed_gap"]


def test_sampled_fold_separation():
    for seed in range(10):
        config = ExperimentConfig.fromDict({"preset": "exp1", "signal": {"seed": seed}})
        _, trace = simulate(config)
        truth = trace.ground_truth
        n, _, _ = trace.discreteFolds()
        if len(n) < 2:
            continue
        bound = minFoldSeparationBound(config.params, trace.omega, truth.g_inf, trace.T)
        assert np.min(np.diff(n)) >= bound


def test_simulated_captures():
    for preset in ("exp2", "exp3"):
        _, report = runPipeline(ExperimentConfig.fromDict({"preset": preset}))
        assert report.N == 2
        assert report.metrics["err"] < 2.0
