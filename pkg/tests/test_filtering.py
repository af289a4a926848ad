import numpy as np
import pytest
from hypothesis import given, settings
import hypothesis.strategies as st
from modsampling.encoder import FoldEvent, ModuloParams, residual
from modsampling.errors import ParameterError
from modsampling.filtering import Cluster, aboveThreshold, detectFoldClusters, detectionThreshold, filterSamples, \
    residualResponse, stepKernel, subtractKernel
from .conftest import plantedTrace


def test_filter_annihilates_polynomials():
    for N in range(1, 5):
        filtered = filterSamples(np.full(20, 3.25), N)
        assert np.all(np.isnan(filtered[[0] + list(range(20 - N + 1, 20))]))
        assert np.all(filtered[1:20 - N + 1] == 0)
    ramp = filterSamples(0.5 + 0.25 * np.arange(20), 2)
    assert ramp[1:19] == pytest.approx(np.zeros(18), abs=1e-12)


def test_filter_errors():
    with pytest.raises(ParameterError):
        filterSamples(np.zeros(10), 0)
    with pytest.raises(ParameterError):
        filterSamples(np.zeros(3), 2)


def test_single_fold_response(singleFold):
    filtered = filterSamples(singleFold.y, 2)
    expected = np.zeros(10)
    expected[3:6] = [-0.6, -0.3, 0.9]
    assert filtered[1:9] == pytest.approx(expected[1:9], abs=1e-12)
    assert residualResponse(10, [4], [1], [0.4], 0.75, 2)[1:9] == pytest.approx(expected[1:9], abs=1e-12)


def test_step_kernel():
    assert stepKernel(1) == pytest.approx([1.0])
    assert stepKernel(2) == pytest.approx([1.0, -1.0])
    assert stepKernel(4) == pytest.approx([1.0, -3.0, 3.0, -1.0])


def test_subtract_kernel_clips_at_the_ends():
    values = np.zeros(5)
    subtractKernel(values, 1, 2.0, 3)
    assert values == pytest.approx([4.0, -2.0, 0.0, 0.0, 0.0])
    values = np.zeros(5)
    subtractKernel(values, 6, 1.0, 3)
    assert values == pytest.approx([0.0, 0.0, 0.0, 0.0, -1.0])


def test_detection_threshold():
    assert detectionThreshold(ModuloParams(1.5, 1.5), 3) == pytest.approx(0.125)
    assert detectionThreshold(ModuloParams(2.01, 3.23), 1) == pytest.approx(0.198, abs=5e-4)
    assert detectionThreshold(ModuloParams(2.05, 1.0), 2) == pytest.approx(0.39, abs=5e-3)
    with pytest.raises(ParameterError):
        detectionThreshold(ModuloParams(1.0), 0)


def test_no_clusters():
    filtered = np.array([np.nan, 0.1, -0.1, 0.05, np.nan])
    assert detectFoldClusters(filtered, 0.2, 2) == []
    assert not np.any(aboveThreshold(filtered, 0.2))
    with pytest.raises(ParameterError):
        detectFoldClusters(filtered, 0.0, 2)


def test_cluster_of_mid_transient_fold(singleFold):
    filtered = filterSamples(singleFold.y, 2)
    clusters = detectFoldClusters(filtered, 0.1875, 2)
    assert clusters == [Cluster(3, 5)]
    assert clusters[0].width == 2


def test_cluster_of_fold_past_transient(transientParams):
    # The sample after tau = 3.2 lies past the transient, beta = 1
    trace = plantedTrace([FoldEvent(3.2, 1)], transientParams)
    filtered = filterSamples(trace.y, 2)
    clusters = detectFoldClusters(filtered, detectionThreshold(transientParams, 2), 2)
    assert clusters == [Cluster(3, 4)]
    assert clusters[0].width == 1


@settings(max_examples=300, deadline=None)
@given(N=st.integers(1, 5),
       alpha=st.floats(0.0, 1.0),
       taus=st.lists(st.floats(0.5, 30.0), min_size=1, max_size=6),
       signs=st.lists(st.sampled_from([-1, 1]), min_size=6, max_size=6))
def test_filtered_residual_support(N, alpha, taus, signs):
    params = ModuloParams(1.0, 0.4, alpha)
    K = 40
    folds = sorted((FoldEvent(tau, s) for tau, s in zip(taus, signs)), key=lambda fold: fold.tau)
    y = -residual(np.arange(K, dtype=float), folds, params)
    filtered = filterSamples(y, N)

    support = np.zeros(K, dtype=bool)
    for fold in folds:
        n = int(np.ceil(fold.tau))
        support[max(n - N + 1, 0):min(n + 2, K)] = True
    defined = ~np.isnan(filtered)
    assert np.all(np.abs(filtered[defined & ~support]) < 1e-9)
