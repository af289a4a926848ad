import numpy as np
import pytest
from modsampling.encoder import EncodedTrace, FoldEvent, GroundTruth, ModuloParams, residual


def plantedTrace(folds, params: ModuloParams, K: int = 10, T: float = 1.0) -> EncodedTrace:
    """ Samples of a zero input with the given folds, y = -eps"""
    times = T * np.arange(K)
    y = -residual(times, folds, params)
    truth = GroundTruth(gamma=np.zeros(K), folds=list(folds), params=params)
    return EncodedTrace(T=T, y=y, params=params, ground_truth=truth)


@pytest.fixture
def transientParams():
    # lambda_h = 0.75
    return ModuloParams(1.5, 1.5, 0.5)


@pytest.fixture
def singleFold(transientParams):
    # tau = 3.8 gives n = 4 and beta = 0.4
    return plantedTrace([FoldEvent(3.8, 1)], transientParams)
