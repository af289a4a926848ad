import logging
from typing import Dict, Optional
import numpy as np
from scipy.special import comb
from .encoder import EncodedTrace, ModuloParams
from .errors import DegenerateClusterError, ParameterError
from .filtering import Cluster, detectFoldClusters, detectionThreshold, filterSamples, residualResponse
from .metrics import inverseGrowth
from .recovery import FoldCase, FoldEstimate, Recovery, RecoveryReport, rebuildResidual

log = logging.getLogger(__name__)


def checkConditions(params: ModuloParams,
                    T: float,
                    omega: float,
                    g_inf: float,
                    eta_inf: float,
                    N: int) -> Dict[str, bool]:
    """ Evaluate the two sufficient conditions for the threshold recovery
    TH1: (T omega e)^N g_inf + 2^N eta_inf <= lambda_h / (2N), the filtered input stays under the threshold
    TH2: (N + 1) T omega g_inf <= h*, consecutive folds are far enough apart for their clusters not to touch
    Args:
        params: the encoder parameters
        T: the sampling period, in seconds
        omega: the input bandwidth, in rad/s
        g_inf: the input sup norm
        eta_inf: the noise bound
        N: the filter order
    Returns:
        {"TH1": bool, "TH2": bool}"""
    if N < 1:
        raise ParameterError("the filter order must be at least 1, got {}".format(N))
    smoothness = np.power(T * omega * np.e, float(N)) * g_inf
    if eta_inf > 0:
        smoothness += np.power(2.0, float(N)) * eta_inf
    separation = (N + 1) * T * omega * g_inf
    return {"TH1": bool(smoothness <= params.lambda_h / (2 * N)),
            "TH2": bool(separation <= params.h_star)}


def maxOrder(params: ModuloParams, T: float, omega: float, g_inf: float, eta_inf: float = 0.0) -> Optional[int]:
    """ The largest filter order for which both recovery conditions are guaranteed
    Args:
        params: the encoder parameters
        T: the sampling period, in seconds
        omega: the input bandwidth, in rad/s
        g_inf: the input sup norm
        eta_inf: the noise bound
    Returns:
        the order, or None when no order is guaranteed to work"""
    if not (T > 0 and omega > 0 and g_inf > 0):
        raise ParameterError("T, omega and g_inf must be positive")
    if eta_inf < 0:
        raise ParameterError("eta_inf must not be negative, got {}".format(eta_inf))
    rate = T * omega * g_inf
    if eta_inf == 0:
        order = int(np.floor(params.h_star / (4 * np.e * rate) - 1))
    else:
        if eta_inf > params.lambda_h / 8:
            return None
        order = min(int(np.floor(params.h_star / (8 * np.e * rate) - 1)),
                    inverseGrowth(params.lambda_h / eta_inf))
    return order if order >= 1 else None


def _truncatedEstimate(n_tilde: int, s_tilde: int, beta_tilde: float, alpha: float, T: float, t0: float,
                       diagnostic: str) -> FoldEstimate:
    if alpha == 0:
        # Without transient sample n_tilde is either before or after the step
        if beta_tilde >= 0.5:
            n_tilde -= 1
        return FoldEstimate(n_tilde, s_tilde, t0 + n_tilde * T, None, FoldCase.TRUNCATED, diagnostic)
    return FoldEstimate(n_tilde, s_tilde, t0 + n_tilde * T - alpha * beta_tilde, beta_tilde, FoldCase.TRUNCATED,
                        diagnostic)


def consistencyTolerance(params: ModuloParams, N: int) -> float:
    """ How far a cluster of width N may be from the response of the fold estimated from it
    Each filtered input value is below the threshold, and the error it puts on beta_tilde moves the
    predicted sample i by at most C(N, i) / N times the threshold."""
    threshold = detectionThreshold(params, N)
    return 2 * threshold + comb(N, N // 2) * threshold / N


def clusterMismatch(cluster: Cluster, filtered: np.ndarray, n_tilde: int, s_tilde: int, beta_tilde: float,
                    lambda_h: float, N: int) -> float:
    """ The largest difference between the cluster samples and the response of the fold (n_tilde, s_tilde,
    beta_tilde)"""
    predicted = residualResponse(len(filtered), [n_tilde], [s_tilde], [beta_tilde], lambda_h, N)
    window = slice(cluster.k_m, cluster.k_M + 1)
    return float(np.max(np.abs(filtered[window] - predicted[window])))


def estimateFold(cluster: Cluster,
                 filtered: np.ndarray,
                 params: ModuloParams,
                 N: int,
                 T: float,
                 t0: float = 0.0) -> FoldEstimate:
    """ Estimate the fold that caused a cluster of large filtered samples
    A cluster of width N means sample n_tilde fell inside the transient, and the filtered value there
    gives its position beta_tilde, unless the response of that fold does not fit the rest of the cluster, as
    when two folds merge. A cluster of width N - 1 gives the fold time at the sample grid.
    Clusters that touch the ends of the filtered sequence may be cut short; they are estimated from the
    one filtered sample that is known to belong to a single kernel and flagged as truncated.
    Args:
        cluster: the cluster
        filtered: the filtered samples, as returned by filterSamples
        params: the encoder parameters
        N: the filter order
        T: the sampling period, in seconds
        t0: the time of the first sample, in seconds
    Returns:
        a FoldEstimate"""
    lambda_h, alpha = params.lambda_h, params.alpha
    first = filtered[cluster.k_m]
    if np.isnan(first) or first == 0:
        raise DegenerateClusterError("the cluster at k={} starts on a zero filtered value".format(cluster.k_m))
    width = cluster.width
    last_defined = len(filtered) - N

    if width < N and cluster.k_m + N > last_defined:
        # The end of the data may hide the rest of the cluster, k_m is the first sample of a kernel
        s_tilde = -int(np.sign(first))
        beta_tilde = min(1.0, abs(first) / (2 * lambda_h))
        diagnostic = "cluster at k={} may be cut by the end of the trace".format(cluster.k_m)
        n_tilde = cluster.k_m + N - 1
        if beta_tilde > 1 - 1 / (4 * N):
            # The whole step is at n_tilde, as for a complete cluster of width N - 1
            return FoldEstimate(n_tilde - 1, s_tilde, t0 + (n_tilde - 1) * T, None, FoldCase.TRUNCATED, diagnostic)
        return _truncatedEstimate(n_tilde, s_tilde, beta_tilde, alpha, T, t0, diagnostic)
    if width < N and cluster.k_m == 1:
        # The start of the data may hide the beginning of the cluster, k_M is the last sample of a kernel
        last = filtered[cluster.k_M]
        s_tilde = -int(np.sign(last)) * (-1) ** (N - 1)
        beta_tilde = float(np.clip(1.0 - abs(last) / (2 * lambda_h), 0.0, 1.0))
        return _truncatedEstimate(cluster.k_M - 1, s_tilde, beta_tilde, alpha, T, t0,
                                  "cluster at k={} may be cut by the start of the trace".format(cluster.k_m))

    n_tilde = cluster.k_M - 1
    s_tilde = -int(np.sign(first))
    diagnostic = None
    if width == N:
        beta_tilde = ((-1) ** N * filtered[n_tilde] / (2 * lambda_h * s_tilde) + N - 1) / N
        beta_tilde = float(np.clip(beta_tilde, 0.0, 1.0))
        mismatch = clusterMismatch(cluster, filtered, n_tilde, s_tilde, beta_tilde, lambda_h, N)
        if mismatch <= consistencyTolerance(params, N):
            tau_tilde = t0 + n_tilde * T - alpha * beta_tilde
            log.debug("fold n=%d s=%+d mid transient, beta=%.4f", n_tilde, s_tilde, beta_tilde)
            return FoldEstimate(n_tilde, s_tilde, tau_tilde, beta_tilde, FoldCase.MID_TRANSIENT)
        diagnostic = "cluster at k={} does not match a single fold (off by {:.3g})".format(cluster.k_m, mismatch)
    elif width != N - 1:
        diagnostic = "cluster at k={} has width {}, expected {} or {}".format(cluster.k_m, width, N - 1, N)
    log.debug("fold n=%d s=%+d at the sample grid", n_tilde, s_tilde)
    return FoldEstimate(n_tilde, s_tilde, t0 + n_tilde * T, None, FoldCase.EDGE_OR_PAST, diagnostic)


class ThresholdRecovery(Recovery):
    """ Recover the input by thresholding the filtered samples, one cluster per fold"""
    method = "threshold"

    def __init__(self, N: int, params: ModuloParams = None, g_inf: float = None, omega: float = None):
        """ Create a ThresholdRecovery object
        Args:
            N: the filter order
            params: the encoder parameters, taken from each trace when not given
            g_inf: the input sup norm used to evaluate the recovery conditions, from the ground truth when not given
            omega: the input bandwidth used to evaluate the recovery conditions, from the trace when not given"""
        super().__init__(params)
        if N < 1:
            raise ParameterError("the filter order must be at least 1, got {}".format(N))
        self.N = N
        self.g_inf = g_inf
        self.omega = omega

    def conditions(self, trace: EncodedTrace, params: ModuloParams) -> Dict[str, bool]:
        """ The recovery conditions for this trace, empty when g_inf or omega is unknown"""
        g_inf = self.g_inf
        if g_inf is None and trace.ground_truth is not None:
            g_inf = trace.ground_truth.g_inf
        omega = self.omega if self.omega is not None else trace.omega
        if g_inf is None or omega is None:
            return {}
        return checkConditions(params, trace.T, omega, g_inf, trace.eta_inf, self.N)

    def reconstruct(self, trace: EncodedTrace, offset: float = 0.0) -> RecoveryReport:
        params = self.traceParams(trace)
        filtered = filterSamples(trace.y, self.N)
        threshold = detectionThreshold(params, self.N)
        clusters = detectFoldClusters(filtered, threshold, self.N)

        report = RecoveryReport(method=self.method, gamma_tilde=trace.y, N=self.N, filtered=filtered,
                                threshold=threshold)
        for cluster in clusters:
            try:
                estimate = estimateFold(cluster, filtered, params, self.N, trace.T, trace.t0)
            except DegenerateClusterError as error:
                report.warn(str(error))
                continue
            if estimate.diagnostic is not None:
                report.warn(estimate.diagnostic)
            report.folds.append(estimate)

        report.residual_tilde = rebuildResidual(trace.times(), report.folds, params)
        report.gamma_tilde = trace.y + report.residual_tilde + offset
        report.conditions = self.conditions(trace, params)
        if report.conditions and not all(report.conditions.values()):
            log.info("recovery conditions do not hold: %s", report.conditions)
        log.info("threshold recovery with N=%d found %d folds", self.N, report.P)
        return report
