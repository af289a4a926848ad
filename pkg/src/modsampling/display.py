from .encoder import EncodedTrace
from .recovery import RecoveryReport
from plotly.offline import plot
from plotly.subplots import make_subplots
import plotly.graph_objs as graphs
import numpy as np


def tracePlotData(trace: EncodedTrace, show_input: bool):
    """ Generate the data to display the samples of a trace
    Args:
        trace: an EncodedTrace object
        show_input: a boolean indicating if the clean input samples should be displayed, when known
    Returns:
        a list of graph objects that can be displayed with plotly"""
    times = trace.times()
    plot_data = [graphs.Scatter(x=times, y=trace.y, mode='markers', name='folded samples y',
                                marker=dict(color='black', size=4))]
    if show_input and trace.ground_truth is not None:
        plot_data.append(graphs.Scatter(x=times, y=trace.ground_truth.gamma, mode='lines', name='input gamma',
                                        line=dict(color='gray', width=2)))
    if trace.params is not None:
        # The folding thresholds +/- lambda
        lam = trace.params.lam
        plot_data.append(graphs.Scatter(x=[times[0], times[-1], np.nan, times[0], times[-1]],
                                        y=[lam, lam, np.nan, -lam, -lam], mode='lines', name='+/- lambda',
                                        line=dict(color='gray', width=1, dash='dot')))
    return plot_data


def reportPlotData(report: RecoveryReport, trace: EncodedTrace, show_folds: bool):
    """ Generate the data to display a reconstruction
    Args:
        report: a RecoveryReport object
        trace: the trace it was recovered from
        show_folds: a boolean indicating if the estimated fold times should be displayed
    Returns:
        a list of graph objects that can be displayed with plotly"""
    times = trace.times()
    plot_data = [graphs.Scatter(x=times, y=report.gamma_tilde, mode='lines+markers', name='reconstruction',
                                line=dict(color='blue', width=1), marker=dict(size=3))]
    if show_folds and report.folds:
        # One vertical line per fold, separated by NaNs
        low = float(np.nanmin(report.gamma_tilde))
        high = float(np.nanmax(report.gamma_tilde))
        taus = np.array([fold.tau_tilde for fold in report.folds])
        nans = np.full(len(taus), np.nan)
        x = np.vstack((taus, taus, nans)).T.flatten()
        y = np.vstack((np.full(len(taus), low), np.full(len(taus), high), nans)).T.flatten()
        plot_data.append(graphs.Scatter(x=x, y=y, mode='lines', name='estimated folds',
                                        line=dict(color='red', width=1, dash='dash'), opacity=0.5))
    return plot_data


def filteredPlotData(report: RecoveryReport, trace: EncodedTrace):
    """ Generate the data to display the filtered samples and the detection threshold"""
    plot_data = []
    if report.filtered is None:
        return plot_data
    times = trace.times()
    plot_data.append(graphs.Scatter(x=times, y=report.filtered, mode='markers', name='filtered samples',
                                    marker=dict(color='green', size=4)))
    if report.threshold is not None:
        threshold = report.threshold
        plot_data.append(graphs.Scatter(x=[times[0], times[-1], np.nan, times[0], times[-1]],
                                        y=[threshold, threshold, np.nan, -threshold, -threshold], mode='lines',
                                        name='detection threshold', line=dict(color='red', width=1, dash='dot')))
    return plot_data


def sweepPlotData(rows, kind: str):
    """ Generate the data to display the error along a sweep"""
    values = [row[kind] for row in rows]
    errs = [row["err"] if isinstance(row.get("err"), (int, float)) else np.nan for row in rows]
    return [graphs.Scatter(x=values, y=errs, mode='lines+markers', name='Err (%)')]


def figure(object: object,
           trace: EncodedTrace = None,
           show_input: bool = True,
           show_folds: bool = True,
           show_filtered: bool = True):
    """ Build the figure of an object of the library
    Args:
        object: an EncodedTrace, a RecoveryReport (with its trace) or a list of sweep rows
        trace: the trace a RecoveryReport was recovered from
        show_input: a boolean indicating if the clean input samples should be displayed
        show_folds: a boolean indicating if the estimated fold times should be displayed
        show_filtered: a boolean indicating if the filtered samples should be displayed under the samples
    Returns:
        a plotly Figure"""
    if isinstance(object, EncodedTrace):
        fig = graphs.Figure(data=tracePlotData(object, show_input))
        fig.update_layout(title='Modulo samples', xaxis_title='t (s)')
        return fig

    if isinstance(object, RecoveryReport):
        report = object
        if trace is None:
            raise ValueError("a report needs its trace to be displayed")
        rows = 2 if show_filtered and report.filtered is not None else 1
        fig = make_subplots(rows=rows, cols=1, shared_xaxes=True)
        for data in tracePlotData(trace, show_input) + reportPlotData(report, trace, show_folds):
            fig.add_trace(data, row=1, col=1)
        if rows == 2:
            for data in filteredPlotData(report, trace):
                fig.add_trace(data, row=2, col=1)
        fig.update_layout(title='{} recovery, {} folds'.format(report.method, report.P), autosize=True)
        fig.update_xaxes(title_text='t (s)', row=rows, col=1)
        return fig

    if isinstance(object, list) and object and isinstance(object[0], dict):
        kind = next(iter(object[0]))
        fig = graphs.Figure(data=sweepPlotData(object, kind))
        fig.update_layout(title='Err along the {} sweep'.format(kind), xaxis_title=kind, yaxis_title='Err (%)',
                          yaxis_type='log')
        return fig

    raise NotImplementedError("display() is not implemented for this object")


def display(object: object,
            trace: EncodedTrace = None,
            show_input: bool = True,
            show_folds: bool = True,
            show_filtered: bool = True,
            filename: str = 'modsampling.html',
            auto_open: bool = True):
    """ Display an object of the library in the browser
    Args:
        object: an EncodedTrace, a RecoveryReport (with its trace) or a list of sweep rows
        trace: the trace a RecoveryReport was recovered from
        show_input: see figure()
        show_folds: see figure()
        show_filtered: see figure()
        filename: the HTML file written
        auto_open: a boolean indicating if the file should be opened
    Returns:
        the path of the HTML file"""
    fig = figure(object, trace, show_input=show_input, show_folds=show_folds, show_filtered=show_filtered)
    return plot(fig, filename=str(filename), auto_open=auto_open)
