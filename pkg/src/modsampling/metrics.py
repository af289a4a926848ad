import logging
import numpy as np
from .encoder import EncodedTrace, ModuloParams
from .errors import OutOfRegimeError, ParameterError

log = logging.getLogger(__name__)

NOT_APPLICABLE = "not applicable"


def _pair(a, b):
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise ParameterError("sequences of different lengths {} and {}".format(a.size, b.size))
    if a.size == 0:
        raise ParameterError("empty sequences")
    return a, b


def mse(a, b) -> float:
    """ Mean squared error between two sequences of equal length"""
    a, b = _pair(a, b)
    return float(np.mean((a - b) ** 2))


def errPercent(gamma_tilde, gamma) -> float:
    """ The relative reconstruction error 100 MSE(gamma_tilde, gamma) / MSE(gamma, 0), in percent"""
    gamma_tilde, gamma = _pair(gamma_tilde, gamma)
    energy = float(np.mean(gamma ** 2))
    if energy == 0:
        raise ParameterError("the reference has zero energy")
    return 100 * mse(gamma_tilde, gamma) / energy


def rmseFoldTimes(tau_tilde, tau) -> float:
    """ Root mean squared error of the fold times. The fold counts must match"""
    return float(np.sqrt(mse(tau_tilde, tau)))


def inverseGrowth(value: float) -> int:
    """ The largest integer x >= 0 with x 2^(x + 2) <= value"""
    if not np.isfinite(value):
        raise ParameterError("cannot invert x 2^(x + 2) at {}".format(value))
    x = 0
    while (x + 1) * 2.0 ** (x + 3) <= value:
        x += 1
    return x


def foldCountBound(params: ModuloParams, N: int, P: int, K: int) -> float:
    """ The bound (lambda_h / N)^2 P / K on the reconstruction MSE when P folds are in K samples"""
    if K < 1:
        raise ParameterError("at least one sample is needed, got K={}".format(K))
    if N < 1:
        raise ParameterError("the filter order must be at least 1, got {}".format(N))
    return params.lambda_h ** 2 / N ** 2 * P / K


def foldRateBound(params: ModuloParams, N: int, T: float, omega: float, g_inf: float, K: int) -> float:
    """ The reconstruction MSE bound (lambda_h / N)^2 2 T omega g_inf / h*, for an unknown number of folds
    Args:
        params: the encoder parameters
        N: the filter order
        T: the sampling period, in seconds
        omega: the input bandwidth, in rad/s
        g_inf: the input sup norm
        K: the number of samples, the bound needs h* <= K T omega g_inf
    Returns:
        the bound"""
    span = K * T * omega * g_inf
    if params.h_star > span:
        raise ParameterError("the bound needs h*={:g} <= K T omega g_inf={:g}".format(params.h_star, span))
    if params.h_star == 0:
        return np.inf
    return params.lambda_h ** 2 / N ** 2 * (2 * T * omega * g_inf / params.h_star)


def noiselessRegime(params: ModuloParams, T: float, omega: float, g_inf: float, K: int) -> bool:
    """ Whether 8 e T omega g_inf <= h* <= K T omega g_inf and T >= 2 alpha"""
    rate = T * omega * g_inf
    return bool(8 * np.e * rate <= params.h_star <= K * rate and T >= 2 * params.alpha)


def noisyRegime(params: ModuloParams, T: float, omega: float, g_inf: float) -> bool:
    """ Whether 16 e T omega g_inf <= h* and T >= 2 alpha"""
    return bool(16 * np.e * T * omega * g_inf <= params.h_star and T >= 2 * params.alpha)


def noiselessBound(params: ModuloParams, T: float, omega: float, g_inf: float) -> float:
    """ The noiseless MSE bound C T^3 with C = 2 (16 e lambda_h)^2 (omega g_inf / h*)^3
    The caller checks the regime with noiselessRegime"""
    if params.h_star == 0:
        return np.inf
    constant = 2 * (16 * np.e * params.lambda_h) ** 2 * (omega * g_inf / params.h_star) ** 3
    return constant * T ** 3


def noisyBound(params: ModuloParams, T: float, omega: float, g_inf: float, eta_inf: float) -> float:
    """ The noisy MSE bound max(C T^3, C_eta T)
    C = 2 (32 e lambda_h)^2 (omega g_inf / h*)^3 and C_eta = 8 lambda_h^2 / x^2 (omega g_inf / h*),
    x being the largest integer with x 2^(x + 2) <= lambda_h / eta_inf.
    Args:
        params: the encoder parameters
        T: the sampling period, in seconds
        omega: the input bandwidth, in rad/s
        g_inf: the input sup norm
        eta_inf: the noise bound, at most lambda_h / 8
    Returns:
        the bound"""
    lambda_h = params.lambda_h
    if eta_inf < 0:
        raise ParameterError("eta_inf must not be negative, got {}".format(eta_inf))
    if eta_inf > lambda_h / 8:
        raise OutOfRegimeError("the noisy bound needs eta_inf={:g} <= lambda_h / 8={:g}".format(eta_inf, lambda_h / 8))
    if params.h_star == 0:
        return np.inf
    ratio = omega * g_inf / params.h_star
    cubic = 2 * (32 * np.e * lambda_h) ** 2 * ratio ** 3 * T ** 3
    if eta_inf == 0:
        return cubic
    linear = 8 * lambda_h ** 2 / inverseGrowth(lambda_h / eta_inf) ** 2 * ratio * T
    return max(cubic, linear)


def scoreReport(report, trace: EncodedTrace):
    """ Fill the metrics of a recovery report from the ground truth of its trace
    Args:
        report: the RecoveryReport, its metrics dictionary is updated
        trace: the trace it was recovered from
    Returns:
        the metrics dictionary"""
    truth = trace.ground_truth
    if truth is None:
        raise ParameterError("the trace has no ground truth")
    params = truth.params
    gamma = truth.gamma
    metrics = report.metrics
    metrics["mse"] = mse(report.gamma_tilde, gamma)
    try:
        metrics["err"] = errPercent(report.gamma_tilde, gamma)
    except ParameterError:
        metrics["err"] = NOT_APPLICABLE
    metrics["P_true"] = len(truth.folds)
    metrics["dynamic_range"] = truth.g_inf / params.lam if truth.g_inf is not None else NOT_APPLICABLE
    metrics["increment_ratio"] = float(np.max(np.abs(np.diff(gamma)), initial=0.0)) / params.lam

    if report.method != "usalg":
        if report.P == len(truth.folds) and report.P > 0:
            tau = [fold.tau for fold in truth.folds]
            metrics["rmse_tau"] = rmseFoldTimes([fold.tau_tilde for fold in report.folds], tau)
            metrics["rmse_tau_coarse"] = rmseFoldTimes(
                [trace.t0 + fold.n_tilde * trace.T for fold in report.folds], tau)
        elif report.P != len(truth.folds):
            report.warn("recovered {} folds, the encoder made {}".format(report.P, len(truth.folds)))
        if report.N is not None:
            metrics["fold_count_bound"] = foldCountBound(params, report.N, len(truth.folds), len(trace))
        if truth.g_inf and trace.omega is not None:
            if noiselessRegime(params, trace.T, trace.omega, truth.g_inf, len(trace)):
                metrics["noiseless_bound"] = noiselessBound(params, trace.T, trace.omega, truth.g_inf)
            else:
                metrics["noiseless_bound"] = NOT_APPLICABLE
    log.info("%s recovery error %s%%", report.method, metrics["err"])
    return metrics
