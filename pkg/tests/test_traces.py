import csv
import json
import numpy as np
import pytest
from modsampling.encoder import ModuloEncoder, ModuloParams
from modsampling.errors import EstimationError, TraceFormatError
from modsampling.signals import SinusoidSignal
from modsampling.threshold import ThresholdRecovery
from modsampling.traces import PLOT_COLUMNS, estimateParams, ingestTrace, readTrace, sidecarPath, writePlotCsv, \
    writeReport, writeRows, writeTrace


def slowTrace():
    params = ModuloParams(1.0, 1.0, 0.01)
    return ModuloEncoder(params).encodeAndSample(SinusoidSignal(1.0, 5.0), 0.01, 1000)


def writeLines(path, lines):
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


def test_trace_round_trip(tmp_path):
    trace = slowTrace()
    path = tmp_path / "trace.csv"
    writeTrace(trace, path)
    assert sidecarPath(path).exists()
    copy = readTrace(path)
    assert np.array_equal(copy.y, trace.y)
    assert np.array_equal(copy.ground_truth.gamma, trace.ground_truth.gamma)
    assert copy.ground_truth.folds == trace.ground_truth.folds
    assert copy.ground_truth.offset == trace.ground_truth.offset
    assert copy.params == trace.params
    assert copy.T == trace.T
    assert copy.omega == trace.omega
    assert not copy.estimated


def test_ingested_trace_recovers_the_same(tmp_path):
    trace = slowTrace()
    path = tmp_path / "capture.csv"
    writeTrace(trace, path)
    ingested = ingestTrace(path, trace.params, trace.T)
    assert ingested.ground_truth is None
    assert not ingested.estimated
    offset = trace.ground_truth.offset
    direct = ThresholdRecovery(2).reconstruct(trace, offset)
    again = ThresholdRecovery(2).reconstruct(ingested, offset)
    assert np.array_equal(direct.gamma_tilde, again.gamma_tilde)


def test_ingest_two_columns(tmp_path):
    path = writeLines(tmp_path / "capture.csv", ["t,y", "0,0.5", "1,0.25", "2,0", "4,-0.25"])
    trace = ingestTrace(path, ModuloParams(1.0))
    assert trace.T == 1.0
    assert len(trace) == 4
    assert len(trace.warnings) == 1
    assert "not uniform" in trace.warnings[0]


def test_ingest_format_errors(tmp_path):
    with pytest.raises(TraceFormatError) as error:
        ingestTrace(writeLines(tmp_path / "a.csv", ["time,value", "0,1"]), ModuloParams(1.0))
    assert error.value.line == 1
    with pytest.raises(TraceFormatError) as error:
        ingestTrace(writeLines(tmp_path / "b.csv", ["t,y", "0,1", "0.1,abc"]), ModuloParams(1.0))
    assert error.value.line == 3
    with pytest.raises(TraceFormatError) as error:
        ingestTrace(writeLines(tmp_path / "c.csv", ["t,y", "0,1,2"]), ModuloParams(1.0))
    assert error.value.line == 2
    with pytest.raises(TraceFormatError):
        readTrace(writeLines(tmp_path / "d.csv", ["t,y", "0,1"]))
    with pytest.raises(FileNotFoundError):
        readTrace(tmp_path / "missing.csv")


def test_estimate_params(tmp_path):
    params = ModuloParams(1.0, 0.5, 0.0)
    trace = ModuloEncoder(params).encodeAndSample(SinusoidSignal(1.0, 20.0), 2.5e-4, 50000)
    assert len(trace.ground_truth.folds) > 20
    estimate = estimateParams(trace.y, trace.T)
    assert estimate.lam == pytest.approx(1.0, rel=0.02)
    assert estimate.h == pytest.approx(0.5, rel=0.05)
    assert estimate.alpha == 0.0

    path = tmp_path / "capture.csv"
    writeTrace(trace, path)
    ingested = ingestTrace(path)
    assert ingested.estimated
    assert ingested.params.lambda_h == pytest.approx(params.lambda_h, rel=1e-3)


def test_estimate_params_without_folds():
    with pytest.raises(EstimationError):
        estimateParams(0.1 * np.sin(np.linspace(0.0, 1.0, 100)), 0.01)
    with pytest.raises(EstimationError):
        estimateParams(np.zeros(5), 0.01)


def test_write_report_and_plot(tmp_path):
    trace = slowTrace()
    report = ThresholdRecovery(2).reconstruct(trace, trace.ground_truth.offset)
    writeReport(report, tmp_path / "report.json", {"config": {"N": 2}})
    with open(tmp_path / "report.json", encoding="utf-8") as stream:
        description = json.load(stream)
    assert description["P"] == report.P
    assert description["config"] == {"N": 2}
    assert len(description["gamma_tilde"]) == len(trace)

    writePlotCsv(tmp_path / "plot.csv", trace, report)
    with open(tmp_path / "plot.csv", newline="", encoding="utf-8") as stream:
        rows = list(csv.reader(stream))
    assert rows[0] == PLOT_COLUMNS
    assert len(rows) == len(trace) + 1
    assert float(rows[1][2]) == trace.y[0]


def test_write_rows(tmp_path):
    writeRows(tmp_path / "sweep.csv", [{"N": 1, "err": 0.5}, {"N": 2, "err": 0.25}])
    with open(tmp_path / "sweep.csv", newline="", encoding="utf-8") as stream:
        rows = list(csv.DictReader(stream))
    assert rows == [{"N": "1", "err": "0.5"}, {"N": "2", "err": "0.25"}]
