import numpy as np
import pytest
from modsampling.encoder import FoldEvent, ModuloEncoder, ModuloParams
from modsampling.errors import DegenerateClusterError, ParameterError
from modsampling.experiment import ExperimentConfig, runPipeline
from modsampling.filtering import Cluster, detectFoldClusters, detectionThreshold, filterSamples
from modsampling.metrics import foldCountBound, mse
from modsampling.recovery import FoldCase
from modsampling.signals import SinusoidSignal
from modsampling.threshold import ThresholdRecovery, checkConditions, estimateFold, maxOrder
from .conftest import plantedTrace


def slowTrace():
    """ A sinusoid sampled well inside both recovery conditions, with about 30 folds"""
    params = ModuloParams(1.0, 1.0, 0.01)
    signal = SinusoidSignal(1.0, 5.0)
    return ModuloEncoder(params).encodeAndSample(signal, 0.01, 1000)


def test_estimate_mid_transient_fold(singleFold, transientParams):
    filtered = filterSamples(singleFold.y, 2)
    estimate = estimateFold(Cluster(3, 5), filtered, transientParams, 2, 1.0)
    assert estimate.n_tilde == 4
    assert estimate.s_tilde == 1
    assert estimate.case == FoldCase.MID_TRANSIENT
    assert estimate.beta_tilde == pytest.approx(0.4)
    assert estimate.tau_tilde == pytest.approx(3.8, abs=1e-12)


def test_estimate_downward_fold(transientParams):
    trace = plantedTrace([FoldEvent(3.8, -1)], transientParams)
    filtered = filterSamples(trace.y, 2)
    estimate = estimateFold(Cluster(3, 5), filtered, transientParams, 2, 1.0)
    assert estimate.s_tilde == -1
    assert estimate.tau_tilde == pytest.approx(3.8, abs=1e-12)


def test_estimate_fold_past_transient(transientParams):
    trace = plantedTrace([FoldEvent(3.2, 1)], transientParams)
    filtered = filterSamples(trace.y, 2)
    estimate = estimateFold(Cluster(3, 4), filtered, transientParams, 2, 1.0)
    assert estimate.case == FoldCase.EDGE_OR_PAST
    assert estimate.n_tilde == 3
    assert estimate.beta_tilde is None
    assert estimate.tau_tilde == 3.0
    assert abs(estimate.tau_tilde - 3.2) < 1.0 - 0.5 + 0.5 / 4


def test_estimate_degenerate_cluster(transientParams):
    filtered = np.array([np.nan, 0.0, 1.0, -1.0, 0.0, 0.0, 0.0, np.nan])
    with pytest.raises(DegenerateClusterError):
        estimateFold(Cluster(1, 2), filtered, transientParams, 2, 1.0)


def test_estimate_wide_cluster(transientParams):
    filtered = np.array([np.nan, 0.0, -1.0, 0.2, -0.2, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0, np.nan])
    estimate = estimateFold(Cluster(2, 5), filtered, transientParams, 2, 1.0)
    assert estimate.case == FoldCase.EDGE_OR_PAST
    assert "width 3" in estimate.diagnostic


def test_estimate_merged_cluster(transientParams):
    # Two opposite folds a sample apart fill a cluster of width N that no single fold explains
    trace = plantedTrace([FoldEvent(3.8, 1), FoldEvent(4.55, -1)], transientParams)
    filtered = filterSamples(trace.y, 2)
    clusters = detectFoldClusters(filtered, detectionThreshold(transientParams, 2), 2)
    assert clusters[0] == Cluster(3, 5)
    estimate = estimateFold(clusters[0], filtered, transientParams, 2, 1.0)
    assert estimate.case == FoldCase.EDGE_OR_PAST
    assert estimate.n_tilde == 4
    assert estimate.beta_tilde is None
    assert estimate.tau_tilde == 4.0
    assert "does not match a single fold" in estimate.diagnostic


def test_estimate_truncated_at_the_end(transientParams):
    # Only the first sample of the kernel is inside the filtered data
    trace = plantedTrace([FoldEvent(8.8, 1)], transientParams)
    filtered = filterSamples(trace.y, 2)
    clusters = detectFoldClusters(filtered, detectionThreshold(transientParams, 2), 2)
    assert clusters == [Cluster(8, 8)]
    estimate = estimateFold(clusters[0], filtered, transientParams, 2, 1.0)
    assert estimate.case == FoldCase.TRUNCATED
    assert estimate.n_tilde == 9
    assert estimate.s_tilde == 1
    assert estimate.tau_tilde == pytest.approx(8.8, abs=1e-12)


def test_planted_fold_is_recovered_exactly(singleFold):
    report = ThresholdRecovery(2).reconstruct(singleFold)
    assert report.P == 1
    assert report.gamma_tilde == pytest.approx(np.zeros(10), abs=1e-12)
    assert report.threshold == pytest.approx(0.1875)


def test_no_folds():
    params = ModuloParams(1.0, 0.5)
    trace = ModuloEncoder(params).encodeAndSample(SinusoidSignal(1.0, 0.5), 0.01, 300)
    report = ThresholdRecovery(1).reconstruct(trace)
    assert report.P == 0
    assert np.array_equal(report.gamma_tilde, trace.y)
    assert report.conditions == {"TH1": True, "TH2": True}


def test_slow_trace_recovery():
    trace = slowTrace()
    truth = trace.ground_truth
    report = ThresholdRecovery(2).reconstruct(trace, truth.offset)
    assert report.conditions == {"TH1": True, "TH2": True}
    assert report.P == len(truth.folds) > 20
    assert [fold.s_tilde for fold in report.folds] == [fold.s for fold in truth.folds]
    for estimate, fold in zip(report.folds, truth.folds):
        if estimate.case == FoldCase.MID_TRANSIENT:
            assert abs(estimate.tau_tilde - fold.tau) < trace.params.alpha / 16
        else:
            assert abs(estimate.tau_tilde - fold.tau) < trace.T
    error = np.mean((report.gamma_tilde - truth.gamma) ** 2)
    bound = trace.params.lambda_h ** 2 / 4 * report.P / len(trace)
    assert error <= bound


def exp1Reports(N: int, seeds: int = 20):
    for seed in range(seeds):
        config = ExperimentConfig.fromDict({"preset": "exp1", "N": N, "signal": {"seed": seed}})
        yield runPipeline(config)


def test_exp1_error():
    for N, limit in ((3, 0.1), (4, 0.01)):
        errs = [report.metrics["err"] for _, report in exp1Reports(N)]
        assert np.median(errs) < limit


def test_exp1_fold_times():
    N = 3
    errors = []
    for trace, report in exp1Reports(N):
        truth = trace.ground_truth.folds
        if report.P != len(truth):
            continue
        alpha = trace.params.alpha
        for estimate, fold, (n, s, beta) in zip(report.folds, truth, zip(*trace.discreteFolds())):
            if estimate.case != FoldCase.MID_TRANSIENT:
                continue
            assert (estimate.n_tilde, estimate.s_tilde) == (n, s)
            assert abs(estimate.beta_tilde - beta) < 1 / (4 * N ** 2)
            assert abs(estimate.tau_tilde - fold.tau) < alpha / (4 * N ** 2)
            errors.append(estimate.tau_tilde - fold.tau)
    assert len(errors) > 50
    assert np.sqrt(np.mean(np.square(errors))) < trace.T / 100


def test_fold_count_bound_over_random_trials():
    rng = np.random.Generator(np.random.Philox(2024))
    K = 400
    trials = 0
    while trials < 500:
        N = int(rng.integers(1, 4))
        omega = rng.uniform(0.5, 2.0)
        amp = rng.uniform(2.5, 6.0)
        lam, h = 1.0, rng.uniform(0.5, 1.5)
        lambda_h, h_star = lam - h / 2, min(h, 2 * lam - h)
        # Inside both recovery conditions, with T >= alpha + alpha / (4 N^2)
        T = rng.uniform(0.3, 1.0) * min(h_star / ((N + 1) * omega * amp),
                                        (lambda_h / (2 * N) / amp) ** (1 / N) / (omega * np.e))
        params = ModuloParams(lam, h, rng.uniform(0.0, 1.0) * T / (1 + 1 / (4 * N ** 2)))
        signal = SinusoidSignal(omega, amp, rng.uniform(0.0, 2 * np.pi))
        trace = ModuloEncoder(params).encodeAndSample(signal, T, K)
        truth = trace.ground_truth
        if not truth.folds:
            continue
        report = ThresholdRecovery(N).reconstruct(trace, truth.offset)
        assert report.conditions == {"TH1": True, "TH2": True}
        assert mse(report.gamma_tilde, truth.gamma) <= foldCountBound(params, N, len(truth.folds), K)
        trials += 1


def test_conditions():
    exp2 = ModuloParams(2.01, 3.23, 9e-5)
    assert checkConditions(exp2, 1e-4, 188.0, 12.0, 0.0, 1)["TH1"] is False
    assert checkConditions(exp2, 1e-9, 188.0, 12.0, 0.0, 1) == {"TH1": True, "TH2": True}
    for N in range(1, 5):
        assert checkConditions(ModuloParams(1.0), 1e-9, 1.0, 1.0, 0.0, N)["TH2"] is False
    with pytest.raises(ParameterError):
        checkConditions(exp2, 1e-4, 188.0, 12.0, 0.0, 0)


def test_max_order():
    assert maxOrder(ModuloParams(1.5, 1.5), 0.02, 4.4, 4.0) is None
    assert maxOrder(ModuloParams(1.5, 1.5), 1e-4, 1.0, 1.0, eta_inf=0.1) is None
    params = ModuloParams(1.5, 1.5)
    for eta_inf in (0.0, 1e-6, 1e-3):
        N = maxOrder(params, 1e-4, 1.0, 1.0, eta_inf)
        assert N >= 1
        assert all(checkConditions(params, 1e-4, 1.0, 1.0, eta_inf, N).values())
    with pytest.raises(ParameterError):
        maxOrder(params, 0.0, 1.0, 1.0)
