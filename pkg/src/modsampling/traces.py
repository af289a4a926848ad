import csv
import json
import logging
from pathlib import Path
from typing import List, Optional
import numpy as np
from .encoder import EncodedTrace, FoldEvent, GroundTruth, ModuloParams
from .errors import EstimationError, TraceFormatError
from .recovery import RecoveryReport

log = logging.getLogger(__name__)

TRACE_HEADERS = (["k", "t", "y"], ["k", "t", "y", "gamma"], ["t", "y"])
PLOT_COLUMNS = ["k", "t", "y", "gamma", "gamma_tilde", "residual_tilde", "filtered"]


def formatValue(value) -> str:
    """ Format a number with 17 significant digits, enough to read back the same double"""
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return "%.17g" % value


def sidecarPath(csv_path) -> Path:
    """ The metadata file that goes with a trace file"""
    return Path(csv_path).with_suffix(".json")


def writeTrace(trace: EncodedTrace, csv_path, meta_path=None):
    """ Write a trace to a CSV file and its metadata to a JSON sidecar
    Args:
        trace: the trace
        csv_path: the CSV file, with columns k,t,y and gamma when the ground truth is known
        meta_path: the sidecar, next to the CSV file with a .json suffix when not given"""
    truth = trace.ground_truth
    header = ["k", "t", "y"] + (["gamma"] if truth is not None else [])
    times = trace.times()
    with open(csv_path, "w", newline="", encoding="utf-8") as stream:
        writer = csv.writer(stream, lineterminator="\n")
        writer.writerow(header)
        for k in range(len(trace)):
            row = [str(k), formatValue(times[k]), formatValue(trace.y[k])]
            if truth is not None:
                row.append(formatValue(truth.gamma[k]))
            writer.writerow(row)

    meta = {"T": trace.T, "t0": trace.t0, "eta_inf": trace.eta_inf, "omega": trace.omega,
            "estimated": trace.estimated, "warnings": trace.warnings}
    if trace.params is not None:
        meta.update(trace.params.toDict())
    if truth is not None:
        meta["offset"] = truth.offset
        meta["g_inf"] = truth.g_inf
        meta["folds"] = [{"tau": fold.tau, "s": fold.s} for fold in truth.folds]
    meta_path = sidecarPath(csv_path) if meta_path is None else meta_path
    with open(meta_path, "w", encoding="utf-8") as stream:
        json.dump(meta, stream, indent=2)
    log.info("wrote %d samples to %s", len(trace), csv_path)


def readColumns(csv_path):
    """ Read a trace CSV file
    Args:
        csv_path: the file
    Returns:
        header: the column names, one of TRACE_HEADERS
        values: a (rows, columns) float array"""
    with open(csv_path, newline="", encoding="utf-8") as stream:
        rows = list(csv.reader(stream))
    if not rows:
        raise TraceFormatError("the file is empty", line=1)
    header = [name.strip() for name in rows[0]]
    if header not in TRACE_HEADERS:
        raise TraceFormatError("unexpected header {}, expected one of {}".format(
            ",".join(header), " or ".join(",".join(h) for h in TRACE_HEADERS)), line=1)
    values = []
    for line, row in enumerate(rows[1:], start=2):
        if not row:
            continue
        if len(row) != len(header):
            raise TraceFormatError("expected {} columns, got {}".format(len(header), len(row)), line=line)
        try:
            values.append([float(cell) for cell in row])
        except ValueError as error:
            raise TraceFormatError(str(error), line=line)
    if not values:
        raise TraceFormatError("the file has no samples", line=2)
    return header, np.array(values, dtype=float)


def readMeta(meta_path) -> dict:
    """ Read a JSON sidecar"""
    with open(meta_path, encoding="utf-8") as stream:
        try:
            return json.load(stream)
        except json.JSONDecodeError as error:
            raise TraceFormatError(error.msg, line=error.lineno)


def readTrace(csv_path, meta_path=None) -> EncodedTrace:
    """ Read a trace written by writeTrace, with its ground truth when the file has one"""
    header, values = readColumns(csv_path)
    if "k" not in header:
        raise TraceFormatError("a full trace needs the k,t,y columns", line=1)
    meta = readMeta(sidecarPath(csv_path) if meta_path is None else meta_path)
    try:
        params = ModuloParams.fromDict(meta) if "lambda" in meta else None
        T = float(meta["T"])
    except KeyError as missing:
        raise TraceFormatError("the metadata is missing {}".format(missing))
    column = {name: values[:, i] for i, name in enumerate(header)}
    ground_truth = None
    if "gamma" in column and "folds" in meta and params is not None:
        folds = [FoldEvent(float(fold["tau"]), int(fold["s"])) for fold in meta["folds"]]
        ground_truth = GroundTruth(gamma=column["gamma"], folds=folds, params=params,
                                   offset=float(meta.get("offset", 0.0)), g_inf=meta.get("g_inf"))
    return EncodedTrace(T=T, y=column["y"], t0=float(meta.get("t0", column["t"][0])),
                        eta_inf=float(meta.get("eta_inf", 0.0)), params=params, omega=meta.get("omega"),
                        ground_truth=ground_truth, estimated=bool(meta.get("estimated", False)),
                        warnings=list(meta.get("warnings", [])))


def ingestTrace(csv_path, meta: ModuloParams = None, T: float = None) -> EncodedTrace:
    """ Read samples of an encoder whose input is unknown, such as a hardware capture
    Args:
        csv_path: a CSV file with columns k,t,y[,gamma] or t,y
        meta: the encoder parameters, estimated from the samples when not given
        T: the sampling period, from the t column when not given
    Returns:
        an EncodedTrace without ground truth"""
    header, values = readColumns(csv_path)
    t = values[:, header.index("t")]
    y = values[:, header.index("y")]
    warnings = []
    steps = np.diff(t)
    if T is None:
        if steps.size == 0:
            raise TraceFormatError("a single sample does not give the sampling period")
        T = float(np.median(steps))
    if steps.size and np.max(np.abs(steps - T)) > 1e-6 * T:
        message = "the sample times are not uniform with period {:g}".format(T)
        log.warning(message)
        warnings.append(message)
    estimated = meta is None
    params = estimateParams(y, T) if estimated else meta
    log.info("ingested %d samples from %s", len(y), csv_path)
    return EncodedTrace(T=T, y=y, t0=float(t[0]), params=params, estimated=estimated, warnings=warnings)


def estimateParams(y, T: float, jump_fraction: float = 0.5) -> ModuloParams:
    """ Estimate the encoder parameters from its samples
    Jumps are located where the samples move by more than jump_fraction of their range over one or
    two sampling periods. The median slope corrected jump gives 2 lambda_h, the largest sample outside
    the transients gives lambda, and the share of jumps that are split over two samples gives alpha / T.
    Args:
        y: the samples
        T: the sampling period, in seconds
        jump_fraction: the share of the sample range a jump has to cover
    Returns:
        the estimated ModuloParams"""
    y = np.asarray(y, dtype=float)
    K = len(y)
    if K < 8:
        raise EstimationError("{} samples are too few to estimate the encoder parameters".format(K))
    limit = jump_fraction * (np.max(y) - np.min(y))
    steps = np.diff(y)
    double_steps = np.abs(y[2:] - y[:-2])
    candidates = np.flatnonzero((np.abs(steps[:-1]) > limit) | (double_steps > limit))

    jumps = []
    split = []
    transient = np.zeros(K, dtype=bool)
    previous = -10
    for k in candidates:
        if k - previous <= 2:
            continue
        previous = k
        # The jump lies in steps[k], steps[k + 1] and steps[k + 2], the slope is taken on each side
        if k < 1 or k + 3 >= len(steps):
            continue
        slope = (steps[k - 1] + steps[k + 3]) / 2
        jump = y[k + 3] - y[k] - 3 * slope
        parts = np.sort(np.abs(steps[k:k + 3] - slope))
        jumps.append(abs(jump))
        is_split = parts[-2] > 0.05 * abs(jump)
        split.append(is_split)
        if is_split:
            transient[k + 1:k + 3] = True
    if len(jumps) < 2:
        raise EstimationError("found {} jumps, at least 2 are needed".format(len(jumps)))

    lambda_h = float(np.median(jumps)) / 2
    lam = float(np.max(np.abs(y[~transient])))
    h = min(max(2 * (lam - lambda_h), 0.0), 2 * lam * (1 - 1e-9))
    alpha = T * float(np.mean(split))
    log.info("estimated lambda=%g h=%g alpha=%g from %d jumps", lam, h, alpha, len(jumps))
    return ModuloParams(lam, h, alpha)


def writeReport(report: RecoveryReport, path, extra: dict = None):
    """ Write a recovery report as JSON"""
    description = report.toDict()
    if extra:
        description.update(extra)
    with open(path, "w", encoding="utf-8") as stream:
        json.dump(description, stream, indent=2, default=jsonDefault)
    log.info("wrote the %s report to %s", report.method, path)


def jsonDefault(value):
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, (np.integer, np.floating, np.bool_)):
        return value.item()
    raise TypeError("cannot serialize {!r}".format(value))


def writePlotCsv(path, trace: EncodedTrace, report: RecoveryReport):
    """ Write the samples of a recovery in the columns k,t,y,gamma,gamma_tilde,residual_tilde,filtered
    Missing columns are written as nan so that every row has the same length."""
    K = len(trace)
    missing = np.full(K, np.nan)
    truth = trace.ground_truth
    columns = [np.arange(K), trace.times(), trace.y,
               truth.gamma if truth is not None else missing,
               report.gamma_tilde,
               report.residual_tilde if report.residual_tilde is not None else missing,
               report.filtered if report.filtered is not None else missing]
    with open(path, "w", newline="", encoding="utf-8") as stream:
        writer = csv.writer(stream, lineterminator="\n")
        writer.writerow(PLOT_COLUMNS)
        for k in range(K):
            writer.writerow([str(k)] + [formatValue(column[k]) for column in columns[1:]])


def writeRows(path, rows: List[dict], columns: Optional[List[str]] = None):
    """ Write sweep results, one row per grid point"""
    if columns is None:
        columns = list(rows[0].keys()) if rows else []
    with open(path, "w", newline="", encoding="utf-8") as stream:
        writer = csv.DictWriter(stream, fieldnames=columns, lineterminator="\n", restval="nan")
        writer.writeheader()
        for row in rows:
            writer.writerow({key: formatValue(value) if isinstance(value, (float, np.floating)) else value
                             for key, value in row.items() if key in columns})
