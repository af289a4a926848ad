import pytest
from modsampling.display import display, figure
from modsampling.threshold import ThresholdRecovery


def test_trace_figure(singleFold):
    fig = figure(singleFold)
    names = [data.name for data in fig.data]
    assert names == ["folded samples y", "input gamma", "+/- lambda"]
    assert len(figure(singleFold, show_input=False).data) == 2


def test_report_figure(singleFold, tmp_path):
    report = ThresholdRecovery(2).reconstruct(singleFold)
    fig = figure(report, singleFold)
    names = [data.name for data in fig.data]
    assert "reconstruction" in names
    assert "estimated folds" in names
    assert "detection threshold" in names
    assert "estimated folds" not in [data.name for data in figure(report, singleFold, show_folds=False).data]

    path = tmp_path / "report.html"
    display(report, singleFold, filename=path, auto_open=False)
    assert path.exists()
    with pytest.raises(ValueError):
        figure(report)


def test_sweep_figure():
    rows = [{"N": 1, "err": 0.5}, {"N": 2, "err": "not applicable"}]
    fig = figure(rows)
    assert list(fig.data[0].x) == [1, 2]
    assert fig.layout.xaxis.title.text == "N"


def test_unknown_object():
    with pytest.raises(NotImplementedError):
        figure(object())
