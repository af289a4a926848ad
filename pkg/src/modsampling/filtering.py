import logging
from dataclasses import dataclass
from typing import List
import numpy as np
from scipy.special import comb
from .encoder import ModuloParams
from .errors import ParameterError

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class Cluster():
    """ A group of filtered samples above the detection threshold, caused by a single fold"""
    # Index of the first filtered sample above the threshold
    k_m: int
    # Index of the last filtered sample above the threshold within (k_m, k_m + N]
    k_M: int

    @property
    def width(self) -> int:
        return self.k_M - self.k_m


def filterSamples(y, N: int) -> np.ndarray:
    """ Apply the N-th order finite difference filter to the samples
    filtered[k] = sum_j (-1)^(N-j) C(N, j) y[k - 1 + j], so that a residual step of height c
    arriving at sample n shows up as c * stepKernel(N) on the indices n - N + 1 ... n.
    Args:
        y: the samples, of length K
        N: the filter order
    Returns:
        a length K array indexed like y. Only indices 1 ... K - N are defined, the others are NaN"""
    y = np.asarray(y, dtype=float)
    if N < 1:
        raise ParameterError("the filter order must be at least 1, got {}".format(N))
    K = len(y)
    if K < N + 2:
        raise ParameterError("{} samples are too few for a filter of order {}".format(K, N))
    filtered = np.full(K, np.nan)
    filtered[1:K - N + 1] = np.diff(y, N)
    return filtered


def stepKernel(N: int) -> np.ndarray:
    """ The filter response (-1)^i C(N - 1, i) to a unit step, on the N indices that end at the step"""
    i = np.arange(N)
    return (-1.0) ** i * comb(N - 1, i)


def subtractKernel(filtered: np.ndarray, n: int, amount: float, N: int):
    """ Remove in place amount * stepKernel(N) placed at sample n from a filtered sequence
    Args:
        filtered: the filtered sequence, modified in place
        n: the sample index of the step
        amount: the height of the step as seen in the filtered sequence
        N: the filter order"""
    kernel = stepKernel(N)
    start = n - N + 1
    lo = max(start, 0)
    hi = min(n + 1, len(filtered))
    if lo < hi:
        filtered[lo:hi] -= amount * kernel[lo - start:hi - start]


def residualResponse(K: int, n, s, beta, lambda_h: float, N: int) -> np.ndarray:
    """ The filtered samples -psi_N * eps_gamma of a set of folds, without the input contribution
    Each fold p contributes -2 lambda_h s_p (beta_p d_{n_p} + (1 - beta_p) d_{n_p + 1}).
    Args:
        K: the number of samples
        n: the discrete fold indices n_p
        s: the fold signs
        beta: the position of sample n_p in each transient
        lambda_h: the encoder lambda_h
        N: the filter order
    Returns:
        a length K array"""
    response = np.zeros(K)
    for n_p, s_p, beta_p in zip(n, s, beta):
        subtractKernel(response, int(n_p), 2 * lambda_h * s_p * beta_p, N)
        subtractKernel(response, int(n_p) + 1, 2 * lambda_h * s_p * (1 - beta_p), N)
    return response


def detectionThreshold(params: ModuloParams, N: int) -> float:
    """ The detection threshold lambda_h / (2N) applied to the filtered samples"""
    if N < 1:
        raise ParameterError("the filter order must be at least 1, got {}".format(N))
    return params.lambda_h / (2 * N)


def aboveThreshold(filtered: np.ndarray, threshold: float) -> np.ndarray:
    """ Boolean mask of |filtered| >= threshold, False where filtered is undefined"""
    with np.errstate(invalid="ignore"):
        return np.abs(filtered) >= threshold


def detectFoldClusters(filtered: np.ndarray, threshold: float, N: int) -> List[Cluster]:
    """ Group the above threshold filtered samples into one cluster per fold, scanning left to right
    Args:
        filtered: the filtered samples
        threshold: the detection threshold
        N: the filter order
    Returns:
        the clusters, in increasing order. Their count is the estimated number of folds"""
    if not threshold > 0:
        raise ParameterError("the threshold must be positive, got {}".format(threshold))
    hits = np.flatnonzero(aboveThreshold(filtered, threshold))
    clusters = []
    i = 0
    while i < len(hits):
        k_m = int(hits[i])
        # Last hit in (k_m, k_m + N]
        j = int(np.searchsorted(hits, k_m + N, side="right")) - 1
        k_M = int(hits[j])
        clusters.append(Cluster(k_m, k_M))
        i = j + 1
    log.debug("detected %d clusters above %g", len(clusters), threshold)
    return clusters
