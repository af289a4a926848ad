import logging
from dataclasses import dataclass, field
from typing import List, Optional
import numpy as np
from scipy.optimize import brentq
from .errors import ParameterError
from .signals import BandlimitedSignal, supNorm

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class ModuloParams:
    """ The parameters H = [lambda, h, alpha] of the generalized modulo encoder"""
    # The folding threshold lambda, the output is kept in [-lambda, lambda]
    lam: float
    # The hysteresis h in [0, 2 lambda). After a fold the output resets to -/+(lambda - h)
    h: float = 0.0
    # The duration of the folding transient, in seconds. Zero gives instantaneous folds
    alpha: float = 0.0

    def __post_init__(self):
        if not self.lam > 0:
            raise ParameterError("lambda must be positive, got {}".format(self.lam))
        if not 0 <= self.h < 2 * self.lam:
            raise ParameterError("h must lie in [0, 2 lambda), got h={} lambda={}".format(self.h, self.lam))
        if not self.alpha >= 0:
            raise ParameterError("alpha must not be negative, got {}".format(self.alpha))

    @property
    def lambda_h(self) -> float:
        """ Half of the amplitude displacement 2 lambda_h caused by each fold"""
        return self.lam - self.h / 2

    @property
    def h_star(self) -> float:
        """ min{h, 2 lambda - h}, the smallest amplitude change between two folds"""
        return min(self.h, 2 * self.lam - self.h)

    def toDict(self):
        return {"lambda": self.lam, "h": self.h, "alpha": self.alpha}

    @classmethod
    def fromDict(cls, description: dict):
        try:
            return cls(float(description["lambda"]), float(description.get("h", 0.0)),
                       float(description.get("alpha", 0.0)))
        except KeyError as missing:
            raise ParameterError("modulo parameters are missing {}".format(missing))


@dataclass(frozen=True)
class FoldEvent():
    """ A fold of the encoder output"""
    # The fold time, in seconds
    tau: float
    # +1 when the output reached +lambda, -1 when it reached -lambda
    s: int


@dataclass
class GroundTruth():
    """ What the encoder knows about a trace and a recovery has to find"""
    # The clean input samples gamma[k] = g(t0 + kT)
    gamma: np.ndarray
    # The folds that happened inside the sampling window, sorted by time
    folds: List[FoldEvent]
    # The encoder parameters
    params: ModuloParams
    # Constant offset already folded away before the first sample (a multiple of 2 lambda)
    offset: float = 0.0
    # Sup norm of the input over the sampling window
    g_inf: Optional[float] = None


@dataclass
class EncodedTrace():
    """ Uniform samples of the encoder output"""
    # The sampling period, in seconds
    T: float
    # The samples y[k]
    y: np.ndarray
    # The time of the first sample, in seconds
    t0: float = 0.0
    # The bound on the additive sample noise
    eta_inf: float = 0.0
    # The encoder parameters, when known (always set when ground truth is present)
    params: Optional[ModuloParams] = None
    # The input bandwidth in rad/s, when known
    omega: Optional[float] = None
    # Simulation ground truth, absent for ingested traces
    ground_truth: Optional[GroundTruth] = None
    # True when params were estimated from the samples rather than known
    estimated: bool = False
    # Model violations found while encoding
    warnings: List[str] = field(default_factory=list)

    def __post_init__(self):
        self.y = np.asarray(self.y, dtype=float)
        if not self.T > 0:
            raise ParameterError("the sampling period must be positive, got {}".format(self.T))
        if self.ground_truth is not None and len(self.ground_truth.gamma) != len(self.y):
            raise ParameterError("ground truth has {} samples, the trace has {}".format(
                len(self.ground_truth.gamma), len(self.y)))

    def __len__(self):
        return len(self.y)

    def times(self) -> np.ndarray:
        """ The sample times t0 + kT"""
        return self.t0 + self.T * np.arange(len(self.y))

    def discreteFolds(self):
        """ Compute the discrete description of the ground truth folds
        Returns:
            n: the first sample index at or after each fold, ceil((tau - t0) / T)
            s: the fold signs
            beta: the position (nT - tau) / alpha of sample n inside the transient, 1 when past it"""
        if self.ground_truth is None:
            raise ParameterError("the trace has no ground truth")
        folds = self.ground_truth.folds
        taus = np.array([fold.tau for fold in folds], dtype=float)
        signs = np.array([fold.s for fold in folds], dtype=int)
        n = np.ceil((taus - self.t0) / self.T).astype(int)
        lag = self.t0 + n * self.T - taus
        alpha = self.ground_truth.params.alpha
        if alpha > 0:
            beta = np.where(lag < alpha, lag / alpha, 1.0)
        else:
            beta = np.ones_like(taus)
        return n, signs, beta


def idealModulo(x, lam: float):
    """ The ideal modulo map 2 lambda ([[x / (2 lambda) + 1/2]] - 1/2), with values in [-lambda, lambda)
    Args:
        x: a value or a numpy array of values
        lam: the threshold lambda
    Returns:
        the folded values, with the same shape as x"""
    if not lam > 0:
        raise ParameterError("lambda must be positive, got {}".format(lam))
    u = np.asarray(x, dtype=float) / (2 * lam) + 0.5
    folded = 2 * lam * (u - np.floor(u) - 0.5)
    if np.ndim(x) == 0:
        return float(folded)
    return folded


def epsilon0(t, params: ModuloParams):
    """ The transient of a single fold: 0 before it, a ramp of height 2 lambda_h over [0, alpha), then flat
    Args:
        t: the time since the fold, a value or a numpy array, in seconds
        params: the encoder parameters
    Returns:
        the transient values, with the same shape as t"""
    times = np.asarray(t, dtype=float)
    if params.alpha > 0:
        values = 2 * params.lambda_h * np.clip(times / params.alpha, 0.0, 1.0)
    else:
        values = 2 * params.lambda_h * (times >= 0)
    if np.ndim(t) == 0:
        return float(values)
    return values


def residual(t, folds: List[FoldEvent], params: ModuloParams):
    """ The residual function eps_g(t) = sum_p s_p epsilon0(t - tau_p)
    Args:
        t: a time or a numpy array of times, in seconds
        folds: the folds, sorted by time
        params: the encoder parameters
    Returns:
        the residual, with the same shape as t"""
    times = np.atleast_1d(np.asarray(t, dtype=float))
    values = np.zeros_like(times)
    if folds:
        taus = np.array([fold.tau for fold in folds], dtype=float)
        signs = np.array([fold.s for fold in folds], dtype=float)
        signed_counts = np.concatenate([[0.0], np.cumsum(signs)])
        # Folds whose transient is over contribute a full step
        if params.alpha > 0:
            n_full = np.searchsorted(taus, times - params.alpha, side="right")
            n_started = np.searchsorted(taus, times, side="right")
        else:
            n_full = np.searchsorted(taus, times, side="right")
            n_started = n_full
        values = 2 * params.lambda_h * signed_counts[n_full]
        # Folds still in their transient contribute a partial ramp
        in_ramp = n_started - n_full
        for j in range(int(in_ramp.max(initial=0))):
            active = in_ramp > j
            idx = n_full[active] + j
            values[active] += signs[idx] * epsilon0(times[active] - taus[idx], params)
    if np.ndim(t) == 0:
        return float(values[0])
    return values


def minFoldSeparationBound(params: ModuloParams, omega: float, g_inf: float, T: float) -> int:
    """ Minimum number of samples between two consecutive folds, floor(h* / (T omega g_inf))
    Args:
        params: the encoder parameters
        omega: the input bandwidth, in rad/s
        g_inf: the input sup norm
        T: the sampling period, in seconds
    Returns:
        the guaranteed lower bound on n_{p+1} - n_p"""
    if not (T > 0 and omega > 0 and g_inf > 0):
        raise ParameterError("T, omega and g_inf must be positive")
    return int(np.floor(params.h_star / (T * omega * g_inf)))


def _firstExit(values: np.ndarray, start: int, lower: float, upper: float, chunk: int = 512):
    """ Index of the first value at or after start that is <= lower or >= upper, or None"""
    i = start
    while i < len(values):
        block = values[i:i + chunk]
        hits = np.flatnonzero((block >= upper) | (block <= lower))
        if hits.size:
            return i + int(hits[0])
        i += chunk
    return None


class ModuloEncoder:
    """ A ModuloEncoder simulates the generalized modulo encoder with hysteresis and folding transients,
    followed by a uniform sampler"""
    def __init__(self, params: ModuloParams):
        """ Create a ModuloEncoder object
        Args:
            params: the encoder parameters"""
        self.params = params

    def initialOffset(self, signal: BandlimitedSignal, t_lo: float) -> float:
        """ The multiple of 2 lambda already folded away at t_lo"""
        g0 = signal.evaluate(t_lo)
        return g0 - idealModulo(g0, self.params.lam)

    def findFolds(self,
                  signal: BandlimitedSignal,
                  t_lo: float,
                  t_hi: float,
                  scan_step: float = None,
                  tol: float = None):
        """ Locate the folds of the encoder driven by signal over [t_lo, t_hi]
        The crossings of the fold levels are bracketed on a uniform grid, then refined with brentq.
        Args:
            signal: the input g
            t_lo: start of the window, in seconds
            t_hi: end of the window, in seconds
            scan_step: the grid spacing, (pi / omega) / 64 when not given
            tol: the fold time accuracy, in seconds
        Returns:
            folds: the FoldEvent list, sorted by time
            warnings: model violations (overlapping transients)"""
        lam, lambda_h = self.params.lam, self.params.lambda_h
        if scan_step is None:
            scan_step = (np.pi / signal.omega) / 64
        if tol is None:
            tol = 1e-12 * max(1.0, abs(t_lo), abs(t_hi))
        if not (scan_step > 0 and tol > 0):
            raise ParameterError("scan_step and tol must be positive")
        if not t_hi > t_lo:
            return [], []
        n_points = int(np.ceil((t_hi - t_lo) / scan_step)) + 1
        grid = np.linspace(t_lo, t_hi, n_points)
        values = signal.evaluate(grid)

        # The virtual output z = g - offset folds when it reaches +lambda or -lambda
        offset = self.initialOffset(signal, t_lo)
        folds = []
        start = 1
        t_left = t_lo
        while True:
            j = _firstExit(values, start, offset - lam, offset + lam)
            if j is None:
                break
            sign = 1 if values[j] >= offset + lam else -1
            level = offset + sign * lam
            a = max(grid[j - 1], t_left)
            tau = self._refine(signal, level, sign, a, grid[j], tol)
            folds.append(FoldEvent(tau, sign))
            offset += sign * 2 * lambda_h
            # Several folds can share a grid cell, so keep scanning from the same point
            start = j
            t_left = min(tau + tol, grid[j])

        warnings = []
        for previous, current in zip(folds, folds[1:]):
            if current.tau - previous.tau <= self.params.alpha:
                message = "folds at t={:.12g} and t={:.12g} are closer than alpha={:g}, transients overlap".format(
                    previous.tau, current.tau, self.params.alpha)
                log.warning(message)
                warnings.append(message)
        log.debug("found %d folds in [%g, %g]", len(folds), t_lo, t_hi)
        return folds, warnings

    @staticmethod
    def _refine(signal: BandlimitedSignal, level: float, sign: int, a: float, b: float, tol: float) -> float:
        """ Find the time in [a, b] where signal crosses level going in the direction of sign"""
        def distance(t):
            return sign * (signal.evaluate(t) - level)
        if distance(a) >= 0:
            return a
        try:
            return brentq(distance, a, b, xtol=tol)
        except ValueError:
            log.debug("no bracket for level %g in [%g, %g], using the grid point", level, a, b)
            return b

    def residual(self, t, folds: List[FoldEvent]):
        """ The residual function of this encoder, see residual()"""
        return residual(t, folds, self.params)

    def encodeAndSample(self,
                        signal: BandlimitedSignal,
                        T: float,
                        K: int,
                        t0: float = 0.0,
                        eta_inf: float = 0.0,
                        seed: int = 0,
                        scan_step: float = None,
                        tol: float = None) -> EncodedTrace:
        """ Encode a signal and sample the encoder output
        Args:
            signal: the input g
            T: the sampling period, in seconds
            K: the number of samples
            t0: the time of the first sample, in seconds
            eta_inf: the samples get i.i.d. noise uniform on [-eta_inf, eta_inf]
            seed: the seed of the noise generator
            scan_step: see findFolds
            tol: see findFolds
        Returns:
            an EncodedTrace with its ground truth"""
        if not T > 0:
            raise ParameterError("the sampling period must be positive, got {}".format(T))
        if K < 1:
            raise ParameterError("at least one sample is needed, got K={}".format(K))
        if eta_inf < 0:
            raise ParameterError("eta_inf must not be negative, got {}".format(eta_inf))
        warnings = []
        if T < self.params.alpha:
            message = "sampling period T={:g} is shorter than the transient alpha={:g}".format(T, self.params.alpha)
            log.warning(message)
            warnings.append(message)
        t_hi = t0 + (K - 1) * T
        folds, fold_warnings = self.findFolds(signal, t0, t_hi, scan_step, tol)
        warnings += fold_warnings
        offset = self.initialOffset(signal, t0)

        times = t0 + T * np.arange(K)
        gamma = signal.evaluate(times)
        y = gamma - offset - self.residual(times, folds)
        if eta_inf > 0:
            rng = np.random.Generator(np.random.Philox(seed))
            y = y + rng.uniform(-eta_inf, eta_inf, K)
        log.info("encoded %d samples with %d folds", K, len(folds))
        g_inf = supNorm(signal, t0, t_hi) if t_hi > t0 else abs(float(gamma[0]))
        ground_truth = GroundTruth(gamma=gamma, folds=folds, params=self.params, offset=offset, g_inf=g_inf)
        return EncodedTrace(T=T, y=y, t0=t0, eta_inf=eta_inf, params=self.params, omega=signal.omega,
                            ground_truth=ground_truth, warnings=warnings)
