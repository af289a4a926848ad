import logging
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple
import numpy as np
from .encoder import EncodedTrace, ModuloParams
from .errors import DegenerateClusterError, ParameterError, UnrecoverableTraceError
from .filtering import detectFoldClusters, detectionThreshold, filterSamples, stepKernel, subtractKernel
from .recovery import FoldCase, FoldEstimate, Recovery, RecoveryReport, rebuildResidual
from .threshold import estimateFold

log = logging.getLogger(__name__)

Detection = Tuple[int, int, float]


def findAnchor(filtered: np.ndarray, threshold: float, N: int) -> Optional[int]:
    """ Find the first run of N consecutive filtered samples below the threshold
    Args:
        filtered: the filtered samples, NaN where undefined
        threshold: the detection threshold
        N: the filter order
    Returns:
        the index where the run starts, or None"""
    with np.errstate(invalid="ignore"):
        below = (np.abs(filtered) < threshold).astype(int)
    if len(below) < N:
        return None
    counts = np.convolve(below, np.ones(N, dtype=int), mode="valid")
    runs = np.flatnonzero(counts == N)
    if runs.size == 0:
        return None
    return int(runs[0])


def splitSteps(n: int, s: int, beta: float, lambda_h: float) -> List[Tuple[int, float]]:
    """ The two steps (sample, amount) of a fold (n, s, beta) as seen in the filtered samples"""
    return [(n, -2 * lambda_h * s * beta), (n + 1, -2 * lambda_h * s * (1 - beta))]


@dataclass
class SweepState():
    """ The state of a left to right pass over the filtered samples"""
    # The position of the sweep
    k: int
    # The filtered samples with the kernels of the folds found so far removed
    corrected: np.ndarray
    # The folds found so far as (n, s, beta): sample n holds the fraction beta of the step, later samples all of it
    detections: List[Detection] = field(default_factory=list)
    # What went wrong with each detection, if anything
    diagnostics: List[Optional[str]] = field(default_factory=list)
    # Every kernel removed from the corrected samples, as (sample, amount, detection index)
    subtractions: List[Tuple[int, float, int]] = field(default_factory=list)
    # Filtered indices above the threshold that no fold explained and were left in place
    skipped: List[int] = field(default_factory=list)

    @property
    def p(self) -> int:
        return len(self.detections)

    def commit(self, n: int, s: int, beta: float, lambda_h: float, N: int, diagnostic: str = None):
        """ Record a fold and remove its filtered response -2 lambda_h s (beta d_n + (1 - beta) d_(n+1))"""
        index = len(self.detections)
        self.detections.append((n, s, beta))
        self.diagnostics.append(diagnostic)
        self._subtract(splitSteps(n, s, beta, lambda_h), index, N)

    def resplit(self, index: int, remainder: float, lambda_h: float, N: int):
        """ Move the fraction remainder of a recorded fold from its sample n to sample n + 1"""
        n, s, beta = self.detections[index]
        amount = 2 * lambda_h * s * remainder
        self._subtract([(n, amount), (n + 1, -amount)], index, N)
        self.detections[index] = (n, s, beta - remainder)

    def trial(self, steps: Sequence[Tuple[int, float]], N: int) -> np.ndarray:
        """ A copy of the corrected samples with the given steps removed as well"""
        corrected = self.corrected.copy()
        for step, amount in steps:
            subtractKernel(corrected, step, amount, N)
        return corrected

    def replay(self, filtered: np.ndarray, N: int) -> np.ndarray:
        """ Apply the recorded subtractions to a copy of the initial filtered samples"""
        corrected = np.array(filtered, dtype=float)
        for step, amount, _ in self.subtractions:
            subtractKernel(corrected, step, amount, N)
        return corrected

    def _subtract(self, steps: Sequence[Tuple[int, float]], index: int, N: int):
        for step, amount in steps:
            if amount != 0:
                subtractKernel(self.corrected, step, amount, N)
                self.subtractions.append((step, amount, index))


def _foldEstimate(n: int, s: int, beta: float, params: ModuloParams, T: float, t0: float,
                  diagnostic: str = None) -> FoldEstimate:
    """ Express a detection (n, s, beta) the way the threshold recovery reports folds"""
    if beta >= 1 or (params.alpha == 0 and beta >= 0.5):
        return FoldEstimate(n - 1, s, t0 + (n - 1) * T, None, FoldCase.EDGE_OR_PAST, diagnostic)
    if params.alpha == 0:
        return FoldEstimate(n, s, t0 + n * T, None, FoldCase.EDGE_OR_PAST, diagnostic)
    return FoldEstimate(n, s, t0 + n * T - params.alpha * beta, beta, FoldCase.MID_TRANSIENT, diagnostic)


def _overlaps(lo: int, hi: int, k_m: int, k_M: int) -> bool:
    return lo <= k_M and k_m <= hi


class LowRateRecovery(Recovery):
    """ Recover the input by unfolding the filtered samples one at a time, starting from an unfolded anchor.
    It only needs one sample between consecutive folds."""
    method = "lowrate"

    def __init__(self, N: int, params: ModuloParams = None, theta_beta: float = None):
        """ Create a LowRateRecovery object
        Args:
            N: the filter order
            params: the encoder parameters, taken from each trace when not given
            theta_beta: the tolerance used to split a transient between two samples, lambda_h when not given"""
        super().__init__(params)
        if N < 1:
            raise ParameterError("the filter order must be at least 1, got {}".format(N))
        if theta_beta is not None and not theta_beta > 0:
            raise ParameterError("theta_beta must be positive, got {}".format(theta_beta))
        self.N = N
        self.theta_beta = theta_beta

    def sweep(self, filtered: np.ndarray, start: int, params: ModuloParams) -> SweepState:
        """ Unfold the filtered samples from start to the end
        A sample above 2 lambda_h - theta is a whole fold. The sample after a whole fold is first checked
        for what a whole fold leaves behind when part of its step was in fact one sample later. Any other
        sample above the threshold is half of a transient split over two samples, and the split that
        explains both samples best is kept. When neither split explains them, the sample is left in place
        if removing a fold would leave more energy behind than it takes away.
        Args:
            filtered: the filtered samples
            start: the first index of an anchor run
            params: the encoder parameters
        Returns:
            the final SweepState"""
        N = self.N
        lambda_h = params.lambda_h
        theta_beta = self.theta_beta if self.theta_beta is not None else lambda_h
        base = detectionThreshold(params, N)
        second = stepKernel(N)[1] if N >= 2 else 0.0
        last = len(filtered) - N
        state = SweepState(k=start, corrected=np.array(filtered, dtype=float))
        # Index of the last sample that belongs to the anchor or to a detection
        consumed = start - 1
        raised = {}
        # The detection committed whole at the previous sample, and the threshold it was found with
        whole = None

        while state.k <= last:
            k = state.k
            value = state.corrected[k]
            theta = raised.pop(k, base) if N >= 2 else base
            whole, pending = None, whole
            magnitude = abs(value)
            if magnitude < theta:
                state.k += 1
                continue
            s = -int(np.sign(value))
            m = k + N - 1

            if pending is not None and magnitude <= 2 * lambda_h - theta:
                index, found_with = pending
                remainder = magnitude / (2 * lambda_h * N)
                if self._isRemainder(state, index, found_with + base, k, last, lambda_h):
                    log.debug("fold %d keeps %.4f of its step for the next sample", index, remainder)
                    state.resplit(index, remainder, lambda_h, N)
                    consumed = k
                    raised = {k + 1: 2 * lambda_h / N, k + 2: lambda_h / N}
                    state.k = k + 1
                    continue

            if magnitude > 2 * lambda_h - theta:
                log.debug("full fold at k=%d, s=%+d", k, s)
                state.commit(m, s, 1.0, lambda_h, N)
                whole = (state.p - 1, theta)
                consumed = k
                raised = {k + 2: 2 * lambda_h / N, k + 3: lambda_h / N}
                state.k = k + 1
                continue

            # A transient sample, either the first (H1) or the second (H2) part of a fold split over two samples
            target = 2 * lambda_h * np.sign(value)
            r1 = r2 = np.inf
            if k + 1 <= last:
                following = state.corrected[k + 1] - value * second
                r1 = abs(value + following - target)
            if k - 1 > consumed and k - 1 >= 1:
                previous = state.corrected[k - 1]
                current = value - previous * second
                r2 = abs(previous + current - target)
            beta_first = float(np.clip(magnitude / (2 * lambda_h), 0.0, 1.0))
            beta_second = float(np.clip(1.0 - abs(current) / (2 * lambda_h), 0.0, 1.0)) if np.isfinite(r2) else None

            diagnostic = None
            if r1 <= theta_beta and r1 <= r2:
                first = True
            elif r2 <= theta_beta and (np.isfinite(r1) or abs(previous) >= base):
                first = False
            elif np.isinf(r1):
                # Nothing follows k, the transient is cut by the end of the trace
                first = True
                diagnostic = "transient at k={} is cut by the end of the trace".format(k)
            else:
                lo, hi = max(consumed + 1, 1, k - 1), min(k + N, last)
                energies = {None: float(np.sum(state.corrected[lo:hi + 1] ** 2)),
                            True: float(np.sum(state.trial(splitSteps(m, s, beta_first, lambda_h), N)[lo:hi + 1] ** 2))}
                if beta_second is not None:
                    steps = splitSteps(m - 1, s, beta_second, lambda_h)
                    energies[False] = float(np.sum(state.trial(steps, N)[lo:hi + 1] ** 2))
                first = min(energies, key=energies.get)
                if first is None:
                    log.debug("no fold explains k=%d (residuals %.3g and %.3g)", k, r1, r2)
                    state.skipped.append(k)
                    state.k = k + 1
                    continue
                diagnostic = "contradictory transient split at k={} (residuals {:.3g} and {:.3g})".format(k, r1, r2)

            if first:
                log.debug("fold split at k=%d and k=%d, s=%+d, beta=%.4f", k, k + 1, s, beta_first)
                state.commit(m, s, beta_first, lambda_h, N, diagnostic)
                consumed = k + 1
                raised = {k + 2: 2 * lambda_h / N, k + 3: lambda_h / N}
                state.k = k + 2
            else:
                log.debug("fold split at k=%d and k=%d, s=%+d, beta=%.4f", k - 1, k, s, beta_second)
                state.commit(m - 1, s, beta_second, lambda_h, N, diagnostic)
                consumed = k
                raised = {k + 1: 2 * lambda_h / N, k + 2: lambda_h / N}
                state.k = k + 1
        return state

    def _isRemainder(self, state: SweepState, index: int, bound: float, k: int, last: int, lambda_h: float) -> bool:
        """ Whether sample k is better explained by part of the step of the whole fold index than by a new fold
        A whole fold found with threshold theta leaves at most N (theta + base) behind, with its sign."""
        N = self.N
        n, s, _ = state.detections[index]
        value = state.corrected[k]
        if -np.sign(value) != s or abs(value) > N * bound:
            return False
        if k + 1 > last:
            return True
        amount = s * abs(value) / N
        kept = abs(state.trial([(n, amount), (n + 1, -amount)], N)[k + 1])
        second = stepKernel(N)[1] if N >= 2 else 0.0
        fresh = abs(value + state.corrected[k + 1] - value * second - 2 * lambda_h * np.sign(value))
        return kept <= fresh

    def refine(self,
               detections: List[Tuple[Detection, Optional[str]]],
               filtered: np.ndarray,
               params: ModuloParams,
               T: float,
               t0: float) -> List[FoldEstimate]:
        """ Turn the detections into fold estimates, using the cluster estimate of the threshold recovery
        for every fold that stands alone in its own cluster
        Args:
            detections: the sorted detections with their diagnostics
            filtered: the filtered samples
            params: the encoder parameters
            T: the sampling period, in seconds
            t0: the time of the first sample, in seconds
        Returns:
            one FoldEstimate per detection"""
        N = self.N
        estimates = [_foldEstimate(n, s, beta, params, T, t0, diagnostic)
                     for (n, s, beta), diagnostic in detections]
        supports = [(n - N + 1, n + 1) for (n, _, _), _ in detections]
        clusters = detectFoldClusters(filtered, detectionThreshold(params, N), N)
        for cluster in clusters:
            touching = [i for i, (lo, hi) in enumerate(supports) if _overlaps(lo, hi, cluster.k_m, cluster.k_M)]
            if len(touching) != 1:
                continue
            i = touching[0]
            (n, s, _), _ = detections[i]
            lo, hi = supports[i]
            if any(abs(other[0][0] - n) <= N for j, other in enumerate(detections) if j != i):
                continue
            if sum(_overlaps(lo, hi, other.k_m, other.k_M) for other in clusters) != 1:
                continue
            try:
                estimate = estimateFold(cluster, filtered, params, N, T, t0)
            except DegenerateClusterError:
                continue
            if estimate.s_tilde != s or abs(estimate.n_tilde - estimates[i].n_tilde) > 1:
                continue
            if estimate.diagnostic is not None and estimate.case != FoldCase.TRUNCATED:
                continue
            estimates[i] = estimate
        return estimates

    def reconstruct(self, trace: EncodedTrace, offset: float = 0.0) -> RecoveryReport:
        params = self.traceParams(trace)
        N = self.N
        K = len(trace)
        filtered = filterSamples(trace.y, N)
        threshold = detectionThreshold(params, N)
        start = findAnchor(filtered, threshold, N)
        if start is None:
            raise UnrecoverableTraceError("no run of {} filtered samples below {:g}".format(N, threshold))
        log.info("anchor at k=%d", start)

        report = RecoveryReport(method=self.method, gamma_tilde=trace.y, N=N, filtered=filtered, threshold=threshold)
        forward = self.sweep(filtered, start, params)
        detections = list(zip(forward.detections, forward.diagnostics))
        skipped = list(forward.skipped)
        if start > 1:
            # The samples before the anchor are unfolded by the same sweep on the time reversed trace,
            # where a fold (n, s, beta) shows as (K - 1 - n, -s, 1 - beta) and filtered index k as K - N + 1 - k
            backward = self.sweep(filterSamples(trace.y[::-1], N), K - 2 * N + 2 - start, params)
            detections += [((K - 1 - n, -s, 1.0 - beta), diagnostic)
                           for (n, s, beta), diagnostic in zip(backward.detections, backward.diagnostics)]
            skipped += [K - N + 1 - k for k in backward.skipped]
        detections.sort(key=lambda detection: detection[0][0])

        for _, diagnostic in detections:
            if diagnostic is not None:
                report.warn(diagnostic)
        for k in sorted(skipped):
            report.warn("filtered sample k={} is above the threshold but no fold explains it".format(k))
        report.folds = self.refine(detections, filtered, params, trace.T, trace.t0)

        self.checkRegime(trace, report)
        report.residual_tilde = rebuildResidual(trace.times(), report.folds, params)
        report.gamma_tilde = trace.y + report.residual_tilde + offset
        log.info("low rate recovery with N=%d found %d folds", N, report.P)
        return report

    @staticmethod
    def checkRegime(trace: EncodedTrace, report: RecoveryReport):
        """ Warn when the ground truth folds are too close for one sample to fall between them"""
        if trace.ground_truth is None or len(trace.ground_truth.folds) < 2:
            return
        taus = np.array([fold.tau for fold in trace.ground_truth.folds])
        margin = float(np.min(np.diff(taus))) - trace.ground_truth.params.alpha
        if not trace.T < margin:
            report.warn("sampling period T={:g} is not below the smallest fold gap minus alpha ({:g})".format(
                trace.T, margin))
