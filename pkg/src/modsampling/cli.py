import argparse
import json
import logging
import sys
import numpy as np
from .encoder import ModuloParams, minFoldSeparationBound
from .errors import (EstimationError, ModSamplingError, OutOfRegimeError, ParameterError, TraceFormatError,
                     UnrecoverableTraceError)
from .experiment import PRESETS, ExperimentConfig, buildSignal, makeRecovery, reconstructOrWarn, runExperiment, \
    runPipeline, runSweep, separationDemo, simulate
from .filtering import detectionThreshold
from .metrics import NOT_APPLICABLE, foldCountBound, foldRateBound, noiselessBound, noiselessRegime, noisyBound, \
    noisyRegime, scoreReport
from .threshold import checkConditions, maxOrder
from .traces import ingestTrace, jsonDefault, readTrace, writePlotCsv, writeReport, writeRows, writeTrace

log = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_IO = 3
EXIT_INGESTION = 4


def printJson(description):
    print(json.dumps(description, indent=2, default=jsonDefault))


def orderArgument(value: str):
    """ A filter order, a positive integer or auto"""
    if value == "auto":
        return value
    try:
        return int(value)
    except ValueError:
        raise argparse.ArgumentTypeError("expected an integer or auto, got {!r}".format(value))


def addConfigArguments(parser: argparse.ArgumentParser):
    """ Flags that build or override an ExperimentConfig"""
    parser.add_argument("--config", help="experiment configuration JSON file")
    parser.add_argument("--preset", choices=sorted(PRESETS), help="start from a named experiment")
    parser.add_argument("--method", choices=["threshold", "lowrate", "usalg"])
    parser.add_argument("--N", type=orderArgument, help="filter order, or auto")
    parser.add_argument("--T", type=float, help="sampling period in seconds")
    parser.add_argument("--K", type=int, help="number of samples")
    parser.add_argument("--t0", type=float, help="time of the first sample in seconds")
    parser.add_argument("--lambda", dest="lam", type=float, help="folding threshold")
    parser.add_argument("--h", type=float, help="hysteresis")
    parser.add_argument("--alpha", type=float, help="transient duration in seconds")
    parser.add_argument("--eta-inf", type=float, help="bound of the uniform sample noise")
    parser.add_argument("--seed", type=int, help="seed of the random signal")
    parser.add_argument("--noise-seed", type=int, help="seed of the sample noise")
    parser.add_argument("--theta-beta", type=float, help="transient split tolerance of the low rate recovery")
    parser.add_argument("--lambda-eff", type=float, help="fixed usalg threshold")
    parser.add_argument("--sup-norm", type=float, help="scale the signal to this sup norm")


def configFromArgs(args) -> ExperimentConfig:
    """ Build the configuration from a file or a preset, then apply the flags"""
    overrides = {}
    for name in ("method", "T", "K", "t0", "eta_inf", "noise_seed", "theta_beta", "lambda_eff"):
        value = getattr(args, name, None)
        if value is not None:
            overrides[name] = value
    if getattr(args, "N", None) is not None:
        overrides["N"] = args.N
    params = {key: value for key, value in (("lambda", args.lam), ("h", args.h), ("alpha", args.alpha))
              if value is not None}
    if params:
        overrides["params"] = params
    signal = {}
    if args.seed is not None:
        signal["seed"] = args.seed
    if args.sup_norm is not None:
        signal["sup_norm"] = args.sup_norm
    if signal:
        overrides["signal"] = signal
    if args.config:
        return ExperimentConfig.fromFile(args.config, overrides)
    return ExperimentConfig.fromDict(dict(overrides, preset=args.preset or "exp1"))


def summary(report) -> dict:
    return {"method": report.method, "N": report.N, "P": report.P, "metrics": report.metrics,
            "diagnostics": {"TH1": report.conditions.get("TH1"), "TH2": report.conditions.get("TH2"),
                            "warnings": report.warnings}}


def genSignalCommand(args):
    config = configFromArgs(args)
    description = buildSignal(config).toDict()
    if args.output:
        with open(args.output, "w", encoding="utf-8") as stream:
            json.dump(description, stream, indent=2)
    else:
        printJson(description)


def encodeCommand(args):
    config = configFromArgs(args)
    _, trace = simulate(config)
    writeTrace(trace, args.output)
    printJson({"K": len(trace), "folds": len(trace.ground_truth.folds), "warnings": trace.warnings})


def traceConfig(trace, method: str, N: int, theta_beta: float = None, lambda_eff: float = None) -> ExperimentConfig:
    """ The configuration of a recovery run on a trace read from a file"""
    if trace.params is None:
        raise ParameterError("the trace metadata has no encoder parameters")
    config = ExperimentConfig(signal={"kind": "sinusoid"}, params=trace.params, T=trace.T, K=len(trace),
                              method=method, N=N, theta_beta=theta_beta, lambda_eff=lambda_eff)
    config.validate()
    return config


def recoverCommand(args):
    trace = readTrace(args.trace)
    N = args.N
    config = traceConfig(trace, args.method, N, args.theta_beta, args.lambda_eff)
    offset = args.offset
    if offset is None:
        offset = trace.ground_truth.offset if trace.ground_truth is not None else 0.0
    report = reconstructOrWarn(makeRecovery(config, N, args.lambda_eff), trace, offset)
    if trace.ground_truth is not None:
        scoreReport(report, trace)
    writeOutputs(args, trace, report)
    printJson(summary(report))


def writeOutputs(args, trace, report, extra: dict = None):
    if getattr(args, "report", None):
        writeReport(report, args.report, extra)
    if getattr(args, "plot", None):
        writePlotCsv(args.plot, trace, report)
    if getattr(args, "html", None) or getattr(args, "show", False):
        from .display import display
        display(report, trace, filename=args.html or "modsampling.html", auto_open=args.show)


def experimentCommand(args):
    config = configFromArgs(args)
    if args.show:
        trace, report = runPipeline(config)
        writeOutputs(args, trace, report, {"config": config.toDict()})
    else:
        config.outputs = {"report": args.report, "plot": args.plot, "trace": args.trace_out, "html": args.html}
        report = runExperiment(config)
    printJson(summary(report))


def sweepCommand(args):
    config = configFromArgs(args)
    if args.values:
        values = [float(value) for value in args.values.split(",")]
    else:
        lo, hi, count = args.range
        values = np.linspace(float(lo), float(hi), int(count)).tolist()
    if args.kind in ("N", "seed"):
        values = [int(value) for value in values]
    config.sweep = {"kind": args.kind, "values": values}
    config.workers = args.workers
    config.outputs = {"sweep": args.output}
    rows = runSweep(config)
    if args.html or args.show:
        from .display import display
        display(rows, filename=args.html or "modsampling.html", auto_open=args.show)
    if not args.output:
        printJson(rows)


def ingestCommand(args):
    meta = None
    if args.lam is not None:
        meta = ModuloParams(args.lam, args.h or 0.0, args.alpha or 0.0)
    trace = ingestTrace(args.csv, meta, args.T)
    result = {"T": trace.T, "params": trace.params.toDict(), "estimated": trace.estimated, "warnings": trace.warnings}
    if args.trace_out:
        writeTrace(trace, args.trace_out)
    if args.method:
        N = args.N
        config = traceConfig(trace, args.method, N, args.theta_beta)
        report = reconstructOrWarn(makeRecovery(config, N), trace, args.offset)
        writeOutputs(args, trace, report)
        result["recovery"] = summary(report)
    printJson(result)


def boundsCommand(args):
    params = ModuloParams(args.lam, args.h, args.alpha)
    N = args.N
    result = {"lambda_h": params.lambda_h, "h_star": params.h_star,
              "detection_threshold": detectionThreshold(params, N)}
    if args.omega is not None and args.g_inf is not None:
        result["conditions"] = checkConditions(params, args.T, args.omega, args.g_inf, args.eta_inf, N)
        result["max_order"] = maxOrder(params, args.T, args.omega, args.g_inf, args.eta_inf)
        result["min_fold_separation"] = minFoldSeparationBound(params, args.omega, args.g_inf, args.T)
        try:
            result["fold_rate_bound"] = foldRateBound(params, N, args.T, args.omega, args.g_inf, args.K)
        except ParameterError:
            result["fold_rate_bound"] = NOT_APPLICABLE
        if noiselessRegime(params, args.T, args.omega, args.g_inf, args.K):
            result["noiseless_bound"] = noiselessBound(params, args.T, args.omega, args.g_inf)
        else:
            result["noiseless_bound"] = NOT_APPLICABLE
        try:
            if noisyRegime(params, args.T, args.omega, args.g_inf):
                result["noisy_bound"] = noisyBound(params, args.T, args.omega, args.g_inf, args.eta_inf)
            else:
                result["noisy_bound"] = NOT_APPLICABLE
        except OutOfRegimeError:
            result["noisy_bound"] = NOT_APPLICABLE
    if args.P is not None:
        result["fold_count_bound"] = foldCountBound(params, N, args.P, args.K)
    printJson(result)


def separationCommand(args):
    rows = separationDemo(hysteresis=[float(h) for h in args.h.split(",")])
    if args.output:
        writeRows(args.output, rows)
    printJson(rows)


def addOutputArguments(parser: argparse.ArgumentParser):
    parser.add_argument("--report", help="write the recovery report JSON here")
    parser.add_argument("--plot", help="write the plot CSV here")
    parser.add_argument("--html", help="write an interactive figure here")
    parser.add_argument("--show", action="store_true", help="open the interactive figure")


def parser() -> argparse.ArgumentParser:
    main_parser = argparse.ArgumentParser(prog="modsampling",
                                          description="Modulo sampling with hysteresis and folding transients")
    main_parser.add_argument("-v", "--verbose", action="count", default=0, help="-v for info, -vv for debug")
    commands = main_parser.add_subparsers(dest="command", required=True)

    command = commands.add_parser("gen-signal", help="generate an input signal description")
    addConfigArguments(command)
    command.add_argument("-o", "--output", help="signal JSON file, printed when not given")
    command.set_defaults(handler=genSignalCommand)

    command = commands.add_parser("encode", help="encode and sample a signal")
    addConfigArguments(command)
    command.add_argument("-o", "--output", required=True, help="trace CSV file, the metadata goes next to it")
    command.set_defaults(handler=encodeCommand)

    command = commands.add_parser("recover", help="recover the input of a trace file")
    command.add_argument("trace", help="trace CSV file with its JSON sidecar")
    command.add_argument("--method", choices=["threshold", "lowrate", "usalg"], default="threshold")
    command.add_argument("--N", type=int, default=1, help="filter order")
    command.add_argument("--theta-beta", type=float)
    command.add_argument("--lambda-eff", type=float)
    command.add_argument("--offset", type=float, help="known initial offset, from the metadata when not given")
    addOutputArguments(command)
    command.set_defaults(handler=recoverCommand)

    command = commands.add_parser("experiment", help="generate, encode, recover and score")
    addConfigArguments(command)
    command.add_argument("--trace-out", help="write the encoded trace here")
    addOutputArguments(command)
    command.set_defaults(handler=experimentCommand)

    command = commands.add_parser("sweep", help="run an experiment over a grid of N, T, lambda_eff or seeds")
    addConfigArguments(command)
    command.add_argument("--kind", choices=["N", "T", "lambda_eff", "seed"], required=True)
    grid = command.add_mutually_exclusive_group(required=True)
    grid.add_argument("--values", help="comma separated values")
    grid.add_argument("--range", nargs=3, metavar=("LO", "HI", "COUNT"), help="evenly spaced values")
    command.add_argument("--workers", type=int, default=1, help="threads running the grid points")
    command.add_argument("-o", "--output", help="sweep CSV file, printed when not given")
    command.add_argument("--html", help="write an interactive figure here")
    command.add_argument("--show", action="store_true", help="open the interactive figure")
    command.set_defaults(handler=sweepCommand)

    command = commands.add_parser("ingest", help="read a capture, estimate the encoder parameters and recover")
    command.add_argument("csv", help="CSV file with columns k,t,y[,gamma] or t,y")
    command.add_argument("--T", type=float, help="sampling period, from the t column when not given")
    command.add_argument("--lambda", dest="lam", type=float, help="known folding threshold")
    command.add_argument("--h", type=float)
    command.add_argument("--alpha", type=float)
    command.add_argument("--method", choices=["threshold", "lowrate", "usalg"])
    command.add_argument("--N", type=int, default=1)
    command.add_argument("--theta-beta", type=float)
    command.add_argument("--offset", type=float, default=0.0)
    command.add_argument("--trace-out", help="write the ingested trace with its parameters here")
    addOutputArguments(command)
    command.set_defaults(handler=ingestCommand)

    command = commands.add_parser("bounds", help="evaluate the recovery conditions and error bounds")
    command.add_argument("--lambda", dest="lam", type=float, required=True)
    command.add_argument("--h", type=float, default=0.0)
    command.add_argument("--alpha", type=float, default=0.0)
    command.add_argument("--N", type=int, default=1)
    command.add_argument("--T", type=float, required=True)
    command.add_argument("--K", type=int, default=1000)
    command.add_argument("--P", type=int, help="number of folds")
    command.add_argument("--omega", type=float)
    command.add_argument("--g-inf", type=float)
    command.add_argument("--eta-inf", type=float, default=0.0)
    command.set_defaults(handler=boundsCommand)

    command = commands.add_parser("separation", help="compare the fold gaps with and without hysteresis")
    command.add_argument("--h", default="0,0.005", help="comma separated hysteresis values")
    command.add_argument("-o", "--output", help="CSV file")
    command.set_defaults(handler=separationCommand)
    return main_parser


def main(argv=None) -> int:
    """ Run the command line
    Args:
        argv: the arguments, sys.argv[1:] when not given
    Returns:
        the exit code"""
    args = parser().parse_args(argv)
    level = logging.WARNING
    if args.verbose == 1:
        level = logging.INFO
    elif args.verbose >= 2:
        level = logging.DEBUG
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    try:
        args.handler(args)
    except (TraceFormatError, EstimationError, UnrecoverableTraceError) as error:
        log.error("%s", error)
        return EXIT_INGESTION
    except (ParameterError, ModSamplingError) as error:
        log.error("%s", error)
        return EXIT_VALIDATION
    except OSError as error:
        log.error("%s", error)
        return EXIT_IO
    return EXIT_OK


def run():
    sys.exit(main())
