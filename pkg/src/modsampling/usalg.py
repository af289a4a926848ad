import logging
import numpy as np
from .encoder import EncodedTrace, ModuloParams, idealModulo
from .errors import ParameterError
from .filtering import filterSamples
from .metrics import errPercent
from .recovery import Recovery, RecoveryReport

log = logging.getLogger(__name__)


def leadingWindow(length: int, lambda_eff: float, g_inf: float = None) -> int:
    """ The number of leading samples the offset of each summation round is estimated from
    Args:
        length: the length of the running sequence
        lambda_eff: the threshold of the modulo applied to the differences
        g_inf: the input sup norm, the whole sequence is used when not given
    Returns:
        min(length, ceil(6 g_inf / lambda_eff)), at least 1"""
    if g_inf is None:
        return length
    return int(np.clip(np.ceil(6 * g_inf / lambda_eff), 1, length))


def usalg(y, lambda_eff: float, N: int, offset: float = 0.0, g_inf: float = None) -> np.ndarray:
    """ Recover the input from modulo samples by annihilating the folds in the N-th order differences
    The folds of the N-th differences are the differences of M(Delta^N y) and Delta^N y. They are summed
    back N times. After every round but the last, the running sequence is shifted by one multiple of
    2 lambda_eff, the rounded mean of its leading samples.
    Every summation starts from zero, so the first N samples are taken as unfolded and the output is aligned
    with y: sample k of the output reconstructs sample k of the input, for all K samples.
    Args:
        y: the samples
        lambda_eff: the threshold of the modulo applied to the differences
        N: the difference order
        offset: the known constant offset of the first sample
        g_inf: the input sup norm, which sets how many leading samples each offset is estimated from
    Returns:
        the reconstructed samples, with the same length as y"""
    y = np.asarray(y, dtype=float)
    if N < 1:
        raise ParameterError("the difference order must be at least 1, got {}".format(N))
    if not lambda_eff > 0:
        raise ParameterError("lambda_eff must be positive, got {}".format(lambda_eff))
    if len(y) < N + 1:
        raise ParameterError("{} samples are too few for differences of order {}".format(len(y), N))
    if g_inf is not None and not g_inf > 0:
        raise ParameterError("g_inf must be positive, got {}".format(g_inf))
    differences = np.diff(y, N)
    running = idealModulo(differences, lambda_eff) - differences
    step = 2 * lambda_eff
    for round_ in range(N):
        running = np.concatenate([[0.0], np.cumsum(running)])
        if round_ < N - 1:
            J = leadingWindow(len(running), lambda_eff, g_inf)
            running -= step * np.round(np.mean(running[:J]) / step)
    return y + running + offset


def effectiveThresholdSearch(trace: EncodedTrace,
                             N: int,
                             grid_lo: float,
                             grid_hi: float,
                             grid_count: int = 200,
                             offset: float = None) -> dict:
    """ Find the lambda_eff for which usalg best reconstructs a simulated trace
    Args:
        trace: a trace with ground truth
        N: the difference order
        grid_lo: the smallest lambda_eff tried
        grid_hi: the largest lambda_eff tried
        grid_count: the number of evenly spaced values tried
        offset: the known offset, from the ground truth when not given
    Returns:
        {"lambda_usalg": the best lambda_eff, "err": its error in percent,
         "grid": the values tried, "errs": the error of each}"""
    if trace.ground_truth is None:
        raise ParameterError("the threshold search needs a trace with ground truth")
    if grid_count < 2:
        raise ParameterError("the search grid needs at least 2 points, got {}".format(grid_count))
    if not 0 < grid_lo <= grid_hi:
        raise ParameterError("invalid search interval [{}, {}]".format(grid_lo, grid_hi))
    if offset is None:
        offset = trace.ground_truth.offset
    gamma = trace.ground_truth.gamma
    g_inf = trace.ground_truth.g_inf or None
    grid = np.linspace(grid_lo, grid_hi, grid_count)
    errs = np.array([errPercent(usalg(trace.y, lambda_eff, N, offset, g_inf), gamma) for lambda_eff in grid])
    best = int(np.argmin(errs))
    log.info("usalg N=%d best lambda_eff %g, error %.4g%%", N, grid[best], errs[best])
    return {"lambda_usalg": float(grid[best]), "err": float(errs[best]), "grid": grid, "errs": errs}


class USAlgRecovery(Recovery):
    """ Recover the input with usalg at a fixed lambda_eff"""
    method = "usalg"

    def __init__(self, N: int, lambda_eff: float = None, params: ModuloParams = None, g_inf: float = None):
        """ Create a USAlgRecovery object
        Args:
            N: the difference order
            lambda_eff: the threshold of the modulo applied to the differences, lambda_h when not given
            params: the encoder parameters, taken from each trace when not given
            g_inf: the input sup norm, from the ground truth when not given"""
        super().__init__(params)
        if N < 1:
            raise ParameterError("the difference order must be at least 1, got {}".format(N))
        self.N = N
        self.lambda_eff = lambda_eff
        self.g_inf = g_inf

    def reconstruct(self, trace: EncodedTrace, offset: float = 0.0) -> RecoveryReport:
        lambda_eff = self.lambda_eff
        if lambda_eff is None:
            lambda_eff = self.traceParams(trace).lambda_h
        g_inf = self.g_inf
        if g_inf is None and trace.ground_truth is not None:
            g_inf = trace.ground_truth.g_inf or None
        gamma_tilde = usalg(trace.y, lambda_eff, self.N, offset, g_inf)
        filtered = filterSamples(trace.y, self.N) if len(trace) >= self.N + 2 else None
        return RecoveryReport(method=self.method, gamma_tilde=gamma_tilde, N=self.N,
                              residual_tilde=gamma_tilde - trace.y - offset, filtered=filtered,
                              lambda_eff=lambda_eff)
