import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, List, Optional
import numpy as np
from .encoder import EncodedTrace, FoldEvent, ModuloParams, residual
from .errors import ParameterError

log = logging.getLogger(__name__)


class FoldCase(Enum):
    """ How a fold time was estimated"""
    # A sample fell inside the transient, the fine estimate uses its filtered value
    MID_TRANSIENT = "a"
    # The first sample after the fold is at the start of the transient or past it
    EDGE_OR_PAST = "b"
    # The cluster may be cut by the start or the end of the trace, it was estimated from one filtered sample
    TRUNCATED = "truncated"


@dataclass
class FoldEstimate():
    """ A recovered fold"""
    # The discrete fold index
    n_tilde: int
    # The fold sign, +1 or -1
    s_tilde: int
    # The fold time, in seconds
    tau_tilde: float
    # The estimated transient position of sample n_tilde, absent when the case gives no fine estimate
    beta_tilde: Optional[float]
    # Which estimate was used
    case: FoldCase
    # Anything unusual about the estimate (unexpected cluster width, ambiguous split...)
    diagnostic: Optional[str] = None

    def toDict(self):
        return {"n": self.n_tilde,
                "s": self.s_tilde,
                "tau": self.tau_tilde,
                "beta": self.beta_tilde,
                "case": self.case.value}


@dataclass
class RecoveryReport():
    """ The result of a recovery, with what is needed to assess and plot it"""
    # "threshold", "lowrate" or "usalg"
    method: str
    # The reconstructed input samples
    gamma_tilde: np.ndarray
    # The recovered folds, in increasing order
    folds: List[FoldEstimate] = field(default_factory=list)
    # The filter order
    N: Optional[int] = None
    # The reconstructed residual samples
    residual_tilde: Optional[np.ndarray] = None
    # The filtered samples the folds were detected on
    filtered: Optional[np.ndarray] = None
    # The detection threshold
    threshold: Optional[float] = None
    # The effective threshold, for usalg
    lambda_eff: Optional[float] = None
    # The sufficient recovery conditions, {"TH1": bool, "TH2": bool} when g_inf is known
    conditions: Dict[str, bool] = field(default_factory=dict)
    # Errors and bounds, filled when the ground truth is known
    metrics: Dict[str, object] = field(default_factory=dict)
    # Model violations and per fold problems
    warnings: List[str] = field(default_factory=list)

    @property
    def P(self) -> int:
        """ The number of recovered folds"""
        return len(self.folds)

    def warn(self, message: str):
        """ Log a warning and keep it with the report"""
        log.warning(message)
        self.warnings.append(message)

    def toDict(self):
        description = {"method": self.method,
                       "gamma_tilde": np.asarray(self.gamma_tilde).tolist(),
                       "folds": [fold.toDict() for fold in self.folds],
                       "P": self.P,
                       "diagnostics": {"TH1": self.conditions.get("TH1"),
                                       "TH2": self.conditions.get("TH2"),
                                       "warnings": list(self.warnings)}}
        if self.N is not None:
            description["N"] = self.N
        if self.threshold is not None:
            description["threshold"] = self.threshold
        if self.lambda_eff is not None:
            description["lambda_eff"] = self.lambda_eff
        if self.metrics:
            description["metrics"] = dict(self.metrics)
            if "err" in self.metrics:
                description["err"] = self.metrics["err"]
        return description


def rebuildResidual(times: np.ndarray, folds: List[FoldEstimate], params: ModuloParams) -> np.ndarray:
    """ The residual sum_p s_p epsilon0(t - tau_p) of the recovered folds, at the given times"""
    events = sorted((FoldEvent(fold.tau_tilde, fold.s_tilde) for fold in folds), key=lambda event: event.tau)
    if params.alpha > 0 or not events:
        return residual(times, events, params)
    # Without transient a fold estimated at n T stands for one in (n T, (n + 1) T], seen from sample n + 1 on
    taus = np.array([event.tau for event in events])
    signed_counts = np.concatenate([[0.0], np.cumsum([event.s for event in events])])
    return 2 * params.lambda_h * signed_counts[np.searchsorted(taus, times, side="left")]


class Recovery:
    """ A Recovery reconstructs the input samples from the samples of a modulo encoder.
    A derived class should implement the reconstruct function."""
    method = None

    def __init__(self, params: ModuloParams = None):
        """ Create a Recovery object
        Args:
            params: the encoder parameters. When not given, the parameters of each trace are used"""
        self.params = params

    def traceParams(self, trace: EncodedTrace) -> ModuloParams:
        """ The encoder parameters to use for a trace"""
        params = self.params if self.params is not None else trace.params
        if params is None:
            raise ParameterError("the encoder parameters are unknown, give them or estimate them")
        return params

    def reconstruct(self, trace: EncodedTrace, offset: float = 0.0) -> RecoveryReport:
        """ Reconstruct the input samples
        Args:
            trace: the encoded samples
            offset: the known constant offset of the first sample (a multiple of 2 lambda)
        Returns:
            a RecoveryReport"""
        raise NotImplementedError("reconstruct() is not implemented")
