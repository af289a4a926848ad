import copy
import dataclasses
import json
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple, Union
import numpy as np
from .encoder import EncodedTrace, ModuloEncoder, ModuloParams
from .errors import ParameterError, UnrecoverableTraceError
from .lowrate import LowRateRecovery
from .metrics import NOT_APPLICABLE, scoreReport
from .recovery import Recovery, RecoveryReport
from .signals import BandlimitedSignal, generateRandomSinc, scaleToSupNorm, signalFromDict, supNorm
from .threshold import ThresholdRecovery, maxOrder
from .traces import writePlotCsv, writeReport, writeRows, writeTrace
from .usalg import USAlgRecovery, effectiveThresholdSearch

log = logging.getLogger(__name__)

METHODS = ("threshold", "lowrate", "usalg")
SWEEP_KINDS = ("N", "T", "lambda_eff", "seed")

# Configurations of the synthetic experiments and of the simulated hardware captures
PRESETS = {
    "exp1": {"signal": {"kind": "random_sinc", "omega": 4.4, "n_centers": 10, "t_start": 0.0,
                        "amp_bound": 6.0, "seed": 0},
             "params": {"lambda": 1.5, "h": 1.5, "alpha": 0.02},
             "T": 0.02, "K": 400, "method": "threshold", "N": 3,
             "usalg_grid": [0.2, 1.5, 200]},
    # The capture was recovered with N=1, but TH1 only holds from N=2 on this simulated sinusoid
    "exp2": {"signal": {"kind": "sinusoid", "omega": 188.0, "amp": 12.0, "phase": 0.0},
             "params": {"lambda": 2.01, "h": 3.23, "alpha": 9e-5},
             "T": 1e-4, "K": 1000, "method": "threshold", "N": 2,
             "usalg_grid": [0.01, 2.0, 200]},
    "exp3": {"signal": {"kind": "random_sinc", "omega": 188.0, "n_centers": 10, "t_start": 0.0,
                        "amp_bound": 1.0, "seed": 0, "sup_norm": 4.5},
             "params": {"lambda": 2.05, "h": 1.0, "alpha": 7e-5},
             "T": 3.6e-4, "K": 500, "method": "threshold", "N": 2,
             "usalg_grid": [0.01, 2.0, 200]},
    "exp4": {"signal": {"kind": "random_sinc", "omega": 1.5, "n_centers": 5, "t_start": 0.0,
                        "amp_bound": 20.0, "seed": 0, "sup_norm": 14.0},
             "params": {"lambda": 1.0, "h": 0.1, "alpha": 0.02},
             "T": 0.09, "K": 112, "method": "lowrate", "N": 2,
             "usalg_grid": [0.1, 2.0, 200]},
    "separation": {"signal": {"kind": "sinc_sum", "omega": float(np.pi), "centers": [0.0], "coeffs": [1.0],
                              "bias": -0.8499},
                   "params": {"lambda": 0.15, "h": 0.005, "alpha": 0.0},
                   "T": 0.01, "K": 400, "t0": -2.0, "method": "threshold", "N": 1},
}


@dataclass
class ExperimentConfig():
    """ Everything needed to run one generate, encode, recover and score pipeline"""
    # The signal description, a signal file description or {"kind": "random_sinc", ...}
    signal: dict
    # The encoder parameters
    params: ModuloParams
    # The sampling period, in seconds
    T: float
    # The number of samples
    K: int
    # The time of the first sample, in seconds
    t0: float = 0.0
    # The noise bound
    eta_inf: float = 0.0
    # The seed of the noise generator
    noise_seed: int = 0
    # "threshold", "lowrate" or "usalg"
    method: str = "threshold"
    # The filter order, or "auto" for the largest guaranteed order
    N: Union[int, str] = 1
    # The transient split tolerance of the low rate recovery, lambda_h when not given
    theta_beta: Optional[float] = None
    # A fixed usalg threshold. When not given, the best one on usalg_grid is searched
    lambda_eff: Optional[float] = None
    # The usalg search grid [lo, hi, count], [0.1 lambda, lambda, 200] when not given
    usalg_grid: Optional[Tuple[float, float, int]] = None
    # The sweep {"kind": one of SWEEP_KINDS, "values": [...]}
    sweep: Optional[dict] = None
    # Output files, keyed by "report", "plot", "trace", "sweep" and "html"
    outputs: Dict[str, str] = field(default_factory=dict)
    # Threads used to run the sweep points
    workers: int = 1
    # The preset the configuration started from
    preset: Optional[str] = None

    @classmethod
    def fromDict(cls, description: dict):
        """ Build a configuration from its JSON description. A "preset" key starts from a named preset,
        the other keys override it"""
        description = dict(description)
        name = description.get("preset")
        if name is not None:
            if name not in PRESETS:
                raise ParameterError("unknown preset {!r}, expected one of {}".format(name, ", ".join(PRESETS)))
            description = mergeDicts(PRESETS[name], description)
        if "noise" in description:
            noise = description.pop("noise")
            description.setdefault("eta_inf", noise.get("eta_inf", 0.0))
            description.setdefault("noise_seed", noise.get("seed", 0))
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(description) - known
        if unknown:
            raise ParameterError("unknown configuration fields {}".format(", ".join(sorted(unknown))))
        for required in ("signal", "params", "T", "K"):
            if required not in description:
                raise ParameterError("the configuration is missing {!r}".format(required))
        params = description["params"]
        if not isinstance(params, ModuloParams):
            description["params"] = ModuloParams.fromDict(params)
        if description.get("usalg_grid") is not None:
            lo, hi, count = description["usalg_grid"]
            description["usalg_grid"] = (float(lo), float(hi), int(count))
        config = cls(**description)
        config.validate()
        return config

    @classmethod
    def fromFile(cls, path, overrides: dict = None):
        """ Read a configuration from a JSON file, with optional overriding fields"""
        with open(path, encoding="utf-8") as stream:
            try:
                description = json.load(stream)
            except json.JSONDecodeError as error:
                raise ParameterError("{}: line {}: {}".format(path, error.lineno, error.msg))
        return cls.fromDict(mergeDicts(description, overrides or {}))

    def validate(self):
        """ Check the fields before anything runs"""
        if not isinstance(self.K, (int, np.integer)) or self.K < 1:
            raise ParameterError("K must be a positive integer, got {!r}".format(self.K))
        if not self.T > 0:
            raise ParameterError("T must be positive, got {}".format(self.T))
        if self.eta_inf < 0:
            raise ParameterError("eta_inf must not be negative, got {}".format(self.eta_inf))
        if self.method not in METHODS:
            raise ParameterError("unknown method {!r}, expected one of {}".format(self.method, ", ".join(METHODS)))
        if self.N != "auto":
            if not isinstance(self.N, (int, np.integer)) or self.N < 1:
                raise ParameterError("N must be a positive integer or \"auto\", got {!r}".format(self.N))
            if self.K < self.N + 2:
                raise ParameterError("K={} is too small for N={}".format(self.K, self.N))
        if self.theta_beta is not None and not self.theta_beta > 0:
            raise ParameterError("theta_beta must be positive, got {}".format(self.theta_beta))
        if self.lambda_eff is not None and not self.lambda_eff > 0:
            raise ParameterError("lambda_eff must be positive, got {}".format(self.lambda_eff))
        if self.usalg_grid is not None:
            lo, hi, count = self.usalg_grid
            if not (0 < lo <= hi and count >= 2):
                raise ParameterError("invalid usalg grid {}".format(list(self.usalg_grid)))
        if self.sweep is not None:
            if self.sweep.get("kind") not in SWEEP_KINDS:
                raise ParameterError("unknown sweep kind {!r}, expected one of {}".format(
                    self.sweep.get("kind"), ", ".join(SWEEP_KINDS)))
            if not self.sweep.get("values"):
                raise ParameterError("the sweep has no values")
            if self.sweep["kind"] == "lambda_eff" and self.method != "usalg":
                raise ParameterError("a lambda_eff sweep needs the usalg method")
        if self.workers < 1:
            raise ParameterError("workers must be at least 1, got {}".format(self.workers))
        kind = self.signal.get("kind")
        if kind not in ("random_sinc", "sinc_sum", "sinusoid"):
            raise ParameterError("unknown signal kind {!r}".format(kind))

    def toDict(self):
        description = dataclasses.asdict(self)
        description["params"] = self.params.toDict()
        if self.usalg_grid is not None:
            description["usalg_grid"] = list(self.usalg_grid)
        return description

    def searchGrid(self) -> Tuple[float, float, int]:
        if self.usalg_grid is not None:
            return self.usalg_grid
        return (0.1 * self.params.lam, self.params.lam, 200)


def mergeDicts(base: dict, overrides: dict) -> dict:
    """ Recursively override the entries of base, without modifying either"""
    merged = copy.deepcopy(base)
    for key, value in overrides.items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = mergeDicts(merged[key], value)
        else:
            merged[key] = copy.deepcopy(value)
    return merged


def buildSignal(config: ExperimentConfig) -> BandlimitedSignal:
    """ Create the input signal of an experiment"""
    wanted = config.signal
    if wanted.get("kind") == "random_sinc":
        try:
            signal = generateRandomSinc(wanted["omega"], int(wanted["n_centers"]), wanted.get("t_start", config.t0),
                                        wanted.get("spacing"), wanted.get("amp_bound", 1.0), int(wanted.get("seed", 0)))
        except KeyError as missing:
            raise ParameterError("the random signal description is missing {}".format(missing))
    else:
        signal = signalFromDict(wanted)
    if wanted.get("sup_norm") is not None:
        signal = scaleToSupNorm(signal, float(wanted["sup_norm"]), config.t0, config.t0 + (config.K - 1) * config.T)
    return signal


def simulate(config: ExperimentConfig) -> Tuple[BandlimitedSignal, EncodedTrace]:
    """ Generate the input and encode it"""
    signal = buildSignal(config)
    encoder = ModuloEncoder(config.params)
    trace = encoder.encodeAndSample(signal, config.T, config.K, config.t0, config.eta_inf, config.noise_seed)
    return signal, trace


def filterOrder(config: ExperimentConfig, trace: EncodedTrace) -> int:
    """ The filter order of an experiment, resolving "auto" with maxOrder"""
    if config.N != "auto":
        return int(config.N)
    truth = trace.ground_truth
    if truth is None or truth.g_inf is None or trace.omega is None:
        raise ParameterError("N=\"auto\" needs the input sup norm and bandwidth")
    N = maxOrder(config.params, trace.T, trace.omega, truth.g_inf, trace.eta_inf)
    if N is None:
        raise ParameterError("no filter order is guaranteed for these parameters, set N")
    log.info("automatic filter order N=%d", N)
    return N


def makeRecovery(config: ExperimentConfig, N: int, lambda_eff: float = None) -> Recovery:
    if config.method == "threshold":
        return ThresholdRecovery(N, config.params)
    if config.method == "lowrate":
        return LowRateRecovery(N, config.params, config.theta_beta)
    return USAlgRecovery(N, lambda_eff, config.params)


def reconstructOrWarn(recovery: Recovery, trace: EncodedTrace, offset: float = 0.0) -> RecoveryReport:
    """ Run a recovery, reporting a trace it cannot unfold as a warning with the samples left folded"""
    try:
        return recovery.reconstruct(trace, offset)
    except UnrecoverableTraceError as error:
        report = RecoveryReport(method=recovery.method, gamma_tilde=trace.y + offset, N=recovery.N)
        report.warn(str(error))
        return report


def recoverTrace(config: ExperimentConfig, trace: EncodedTrace) -> RecoveryReport:
    """ Recover a simulated trace with the configured method and score it against its ground truth"""
    N = filterOrder(config, trace)
    offset = trace.ground_truth.offset if trace.ground_truth is not None else 0.0
    lambda_eff = config.lambda_eff
    search = None
    if config.method == "usalg" and lambda_eff is None:
        lo, hi, count = config.searchGrid()
        search = effectiveThresholdSearch(trace, N, lo, hi, count, offset)
        lambda_eff = search["lambda_usalg"]
    report = reconstructOrWarn(makeRecovery(config, N, lambda_eff), trace, offset)
    report.warnings = trace.warnings + report.warnings
    if trace.ground_truth is not None:
        scoreReport(report, trace)
    if search is not None:
        report.metrics["lambda_usalg"] = search["lambda_usalg"]
    return report


def runPipeline(config: ExperimentConfig) -> Tuple[EncodedTrace, RecoveryReport]:
    """ Generate, encode, recover and score"""
    _, trace = simulate(config)
    return trace, recoverTrace(config, trace)


def runExperiment(config: ExperimentConfig) -> RecoveryReport:
    """ Run the pipeline of a configuration and write its output files
    Args:
        config: the experiment configuration
    Returns:
        the RecoveryReport, with its metrics"""
    config.validate()
    trace, report = runPipeline(config)
    outputs = config.outputs
    if outputs.get("trace"):
        writeTrace(trace, outputs["trace"])
    if outputs.get("report"):
        writeReport(report, outputs["report"], {"config": config.toDict()})
    if outputs.get("plot"):
        writePlotCsv(outputs["plot"], trace, report)
    if outputs.get("html"):
        from .display import display
        display(report, trace, filename=outputs["html"], auto_open=False)
    log.info("experiment done, %s folds recovered", report.P)
    return report


def _sweepRow(config: ExperimentConfig, kind: str, value, trace: EncodedTrace = None) -> dict:
    """ Run one point of a sweep"""
    if kind == "N":
        point = dataclasses.replace(config, N=int(value))
    elif kind == "T":
        point = dataclasses.replace(config, T=float(value))
    elif kind == "lambda_eff":
        point = dataclasses.replace(config, lambda_eff=float(value))
    else:
        signal = dict(config.signal, seed=int(value))
        point = dataclasses.replace(config, signal=signal, noise_seed=int(value))
    if trace is None:
        _, trace = simulate(point)
    report = recoverTrace(point, trace)
    metrics = report.metrics
    row = {kind: value, "P": report.P, "P_true": metrics.get("P_true"), "err": metrics.get("err"),
           "mse": metrics.get("mse"), "rmse_tau": metrics.get("rmse_tau", NOT_APPLICABLE),
           "rmse_tau_coarse": metrics.get("rmse_tau_coarse", NOT_APPLICABLE),
           "fold_count_bound": metrics.get("fold_count_bound", NOT_APPLICABLE),
           "noiseless_bound": metrics.get("noiseless_bound", NOT_APPLICABLE)}
    return row


def runSweep(config: ExperimentConfig) -> List[dict]:
    """ Run the pipeline over the values of the configured sweep
    Sweeps over N and lambda_eff share one encoded trace, sweeps over T and the seed encode again per point.
    Returns:
        one row per value, with the errors and the bounds that apply"""
    config.validate()
    if config.sweep is None:
        raise ParameterError("the configuration has no sweep")
    kind = config.sweep["kind"]
    values = list(config.sweep["values"])
    trace = simulate(config)[1] if kind in ("N", "lambda_eff") else None
    with ThreadPoolExecutor(max_workers=config.workers) as pool:
        rows = list(pool.map(lambda value: _sweepRow(config, kind, value, trace), values))
    if config.outputs.get("sweep"):
        writeRows(config.outputs["sweep"], rows)
    log.info("sweep over %s done, %d points", kind, len(rows))
    return rows


def separationDemo(config: ExperimentConfig = None, hysteresis=(0.0, 5e-3)) -> List[dict]:
    """ Measure the smallest gap between folds with and without hysteresis
    Args:
        config: the experiment, the "separation" preset when not given
        hysteresis: the values of h compared
    Returns:
        one row per h with the smallest gap and the guaranteed one, h* / (omega g_inf)"""
    if config is None:
        config = ExperimentConfig.fromDict({"preset": "separation"})
    signal = buildSignal(config)
    t_hi = config.t0 + (config.K - 1) * config.T
    g_inf = supNorm(signal, config.t0, t_hi)
    rows = []
    for h in hysteresis:
        params = dataclasses.replace(config.params, h=float(h))
        folds, _ = ModuloEncoder(params).findFolds(signal, config.t0, t_hi)
        taus = np.array([fold.tau for fold in folds])
        gap = float(np.min(np.diff(taus))) if len(taus) > 1 else np.inf
        rows.append({"h": float(h), "folds": len(folds), "min_gap": gap,
                     "guaranteed_gap": params.h_star / (signal.omega * g_inf)})
        log.info("h=%g: %d folds, smallest gap %g", h, len(folds), gap)
    return rows
