import logging
import numpy as np
from scipy.optimize import minimize_scalar
from .errors import ParameterError

log = logging.getLogger(__name__)


def _asOutput(values: np.ndarray, t):
    """ Return a float for scalar inputs and an array otherwise"""
    if np.ndim(t) == 0:
        return float(values)
    return values


class BandlimitedSignal:
    """ A BandlimitedSignal is an input g(t) whose spectrum is limited to [-omega, omega] rad/s
    A derived class should implement the evaluate function, which computes g at arbitrary times,
    the scaled function, which multiplies the amplitude, and the toDict function used to save it."""
    kind = None

    def __init__(self, omega: float):
        """ Create a BandlimitedSignal object
        Args:
            omega: the bandwidth of the signal, in rad/s"""
        if not omega > 0:
            raise ParameterError("omega must be positive, got {}".format(omega))
        self.omega = float(omega)

    def evaluate(self, t):
        """ Evaluate the signal
        Args:
            t: a time or a numpy array of times, in seconds
        Returns:
            the signal amplitude, with the same shape as t"""
        raise NotImplementedError("evaluate() is not implemented")

    def scaled(self, factor: float):
        """ Create a copy of the signal with its amplitude multiplied by factor"""
        raise NotImplementedError("scaled() is not implemented")

    def toDict(self):
        """ Describe the signal as a JSON compatible dictionary"""
        raise NotImplementedError("toDict() is not implemented")

    def __call__(self, t):
        return self.evaluate(t)


class SincSumSignal(BandlimitedSignal):
    """ A SincSumSignal is a finite sum of shifted sinc atoms, plus an optional constant bias"""
    kind = "sinc_sum"

    def __init__(self, omega: float, centers, coeffs, bias: float = 0.0):
        """ Create a SincSumSignal object
        Args:
            omega: the bandwidth, in rad/s
            centers: the times of the sinc atoms, in seconds
            coeffs: the amplitude of each atom
            bias: a constant added to the sum"""
        super().__init__(omega)
        self.centers = np.atleast_1d(np.asarray(centers, dtype=float))
        self.coeffs = np.atleast_1d(np.asarray(coeffs, dtype=float))
        if self.centers.size == 0 or self.centers.shape != self.coeffs.shape:
            raise ParameterError("centers and coeffs must have the same non-zero length")
        self.bias = float(bias)

    def evaluate(self, t):
        times = np.asarray(t, dtype=float)
        # numpy's sinc is the normalized sin(pi u) / (pi u), and handles u = 0
        u = self.omega * (times[..., np.newaxis] - self.centers) / np.pi
        values = np.sinc(u) @ self.coeffs + self.bias
        return _asOutput(values, t)

    def scaled(self, factor: float):
        return SincSumSignal(self.omega, self.centers, self.coeffs * factor, self.bias * factor)

    def toDict(self):
        description = {"kind": self.kind,
                       "omega": self.omega,
                       "centers": self.centers.tolist(),
                       "coeffs": self.coeffs.tolist()}
        if self.bias != 0.0:
            description["bias"] = self.bias
        return description


class SinusoidSignal(BandlimitedSignal):
    """ A SinusoidSignal is amp * sin(omega * t + phase)"""
    kind = "sinusoid"

    def __init__(self, omega: float, amp: float, phase: float = 0.0):
        """ Create a SinusoidSignal object
        Args:
            omega: the angular frequency, which is also the bandwidth, in rad/s
            amp: the amplitude
            phase: the phase at t = 0, in radians"""
        super().__init__(omega)
        self.amp = float(amp)
        self.phase = float(phase)

    def evaluate(self, t):
        values = self.amp * np.sin(self.omega * np.asarray(t, dtype=float) + self.phase)
        return _asOutput(values, t)

    def scaled(self, factor: float):
        return SinusoidSignal(self.omega, self.amp * factor, self.phase)

    def toDict(self):
        return {"kind": self.kind, "omega": self.omega, "amp": self.amp, "phase": self.phase}


def signalFromDict(description: dict) -> BandlimitedSignal:
    """ Build a signal from its JSON description
    Args:
        description: a dictionary as produced by BandlimitedSignal.toDict
    Returns:
        a SincSumSignal or a SinusoidSignal"""
    kind = description.get("kind")
    try:
        if kind == SincSumSignal.kind:
            return SincSumSignal(description["omega"], description["centers"], description["coeffs"],
                                 description.get("bias", 0.0))
        if kind == SinusoidSignal.kind:
            return SinusoidSignal(description["omega"], description["amp"], description.get("phase", 0.0))
    except KeyError as missing:
        raise ParameterError("signal description is missing {}".format(missing))
    raise ParameterError("unknown signal kind {!r}".format(kind))


def generateRandomSinc(omega: float,
                       n_centers: int,
                       t_start: float,
                       spacing: float = None,
                       amp_bound: float = 1.0,
                       seed: int = 0) -> SincSumSignal:
    """ Generate a sum of sinc atoms with uniformly distributed random coefficients
    Args:
        omega: the bandwidth, in rad/s
        n_centers: the number of atoms
        t_start: the time of the first atom, in seconds
        spacing: the time between atoms, pi / omega when not given
        amp_bound: the coefficients are drawn uniformly in [-amp_bound, amp_bound]
        seed: the seed of the counter based generator; the same seed gives the same signal
    Returns:
        a SincSumSignal"""
    if not omega > 0:
        raise ParameterError("omega must be positive, got {}".format(omega))
    if n_centers < 1:
        raise ParameterError("at least one center is needed, got {}".format(n_centers))
    if amp_bound < 0:
        raise ParameterError("amp_bound must not be negative, got {}".format(amp_bound))
    if spacing is None:
        spacing = np.pi / omega
    rng = np.random.Generator(np.random.Philox(seed))
    centers = t_start + spacing * np.arange(n_centers)
    coeffs = rng.uniform(-amp_bound, amp_bound, n_centers)
    return SincSumSignal(omega, centers, coeffs)


def supNorm(signal: BandlimitedSignal, t_lo: float, t_hi: float, grid_step: float = None) -> float:
    """ Estimate max |g(t)| over a time window
    The maximum is first located on a uniform grid, then refined with a bounded scalar search
    in the two grid cells around it.
    Args:
        signal: the signal
        t_lo: start of the window, in seconds
        t_hi: end of the window, in seconds
        grid_step: the grid spacing, (pi / omega) / 64 when not given
    Returns:
        the estimated sup norm g_inf"""
    if not t_lo < t_hi:
        raise ParameterError("empty window [{}, {}]".format(t_lo, t_hi))
    if grid_step is None:
        grid_step = (np.pi / signal.omega) / 64
    if not grid_step > 0:
        raise ParameterError("grid_step must be positive, got {}".format(grid_step))
    n_points = int(np.ceil((t_hi - t_lo) / grid_step)) + 1
    grid = np.linspace(t_lo, t_hi, n_points)
    magnitudes = np.abs(signal.evaluate(grid))
    best = int(np.argmax(magnitudes))
    g_inf = float(magnitudes[best])
    if g_inf == 0.0:
        return 0.0
    lo = grid[max(best - 1, 0)]
    hi = grid[min(best + 1, n_points - 1)]
    refined = minimize_scalar(lambda t: -abs(signal.evaluate(t)), bounds=(lo, hi), method="bounded",
                              options={"xatol": grid_step * 1e-9})
    return max(g_inf, float(-refined.fun))


def scaleToSupNorm(signal: BandlimitedSignal, target: float, t_lo: float, t_hi: float) -> BandlimitedSignal:
    """ Scale the signal coefficients so that its sup norm over a window equals target"""
    g_inf = supNorm(signal, t_lo, t_hi)
    if g_inf == 0.0:
        raise ParameterError("cannot scale a zero signal")
    return signal.scaled(target / g_inf)


def derivativeSupBound(g_inf: float, omega: float) -> float:
    """ Bernstein's bound on the derivative of a bandlimited signal, omega * g_inf"""
    return omega * g_inf
