from .encoder import EncodedTrace, FoldEvent, GroundTruth, ModuloEncoder, ModuloParams, epsilon0, idealModulo, \
    minFoldSeparationBound, residual
from .errors import DegenerateClusterError, EstimationError, ModSamplingError, OutOfRegimeError, ParameterError, \
    TraceFormatError, UnrecoverableTraceError
from .experiment import ExperimentConfig, runExperiment, runPipeline, runSweep, separationDemo
from .filtering import Cluster, detectFoldClusters, detectionThreshold, filterSamples
from .lowrate import LowRateRecovery, findAnchor
from .metrics import errPercent, mse, rmseFoldTimes, scoreReport
from .recovery import FoldCase, FoldEstimate, Recovery, RecoveryReport
from .signals import SincSumSignal, SinusoidSignal, generateRandomSinc, scaleToSupNorm, supNorm
from .threshold import ThresholdRecovery, checkConditions, estimateFold, maxOrder
from .traces import estimateParams, ingestTrace, readTrace, writeTrace
from .usalg import USAlgRecovery, effectiveThresholdSearch, usalg
