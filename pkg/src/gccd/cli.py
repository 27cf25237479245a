"""Command-line entry point: ``gccd solve|learn|eval|plot-data|synth``."""

from __future__ import annotations

import functools
import sys
from pathlib import Path

import click

from . import io
from .evaluation import DEFAULT_TOLERANCE_MS, format_report, match_detections, tolerance_samples
from .learning import LearnConfig, count_label_errors, learn, peak_bands, split_folds
from .model import LabelSet, two_state_graph
from .pwq import InfeasibleModel
from .solver import extract_peaks, solve
from .synth import noisy_ecg, pulse_train

EXIT_INPUT = 2
EXIT_INFEASIBLE = 3


def _guarded(fn):
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except InfeasibleModel as exc:
            click.echo(f"error: {exc}", err=True)
            sys.exit(EXIT_INFEASIBLE)
        except (OSError, ValueError) as exc:
            click.echo(f"error: {exc}", err=True)
            sys.exit(EXIT_INPUT)

    return wrapper


def _states(graph, names: str | None):
    if not names or names == "any":
        return "any"
    out = set()
    for name in names.split(","):
        try:
            out.add(graph.vertex_by_name(name.strip()).id)
        except KeyError:
            raise ValueError(f"unknown state {name!r}") from None
    return out


@click.group()
def main():
    """Graph-constrained changepoint detection for R-peak delineation."""


@main.command("solve")
@click.argument("signal_path")
@click.argument("graph_path")
@click.option("-o", "--out", "out_path", required=True, help="Segmentation table to write.")
@click.option("--peaks", "peaks_path", default=None, help="Peak list to write [default: OUT.peaks].")
@click.option("--start", default="any", show_default=True, help="Comma-separated allowed first states.")
@click.option("--end", default="any", show_default=True, help="Comma-separated allowed last states.")
@click.option("--peak-state", default="R", show_default=True)
@_guarded
def cmd_solve(signal_path, graph_path, out_path, peaks_path, start, end, peak_state):
    """Optimal segmentation of SIGNAL_PATH under the graph in GRAPH_PATH."""
    signal = io.read_signal(signal_path)
    graph = io.read_graph(graph_path)
    seg = solve(signal, graph, _states(graph, start), _states(graph, end))
    Path(out_path).write_text(io.format_segmentation(seg, graph))
    try:
        peak = graph.vertex_by_name(peak_state).id
        peaks = extract_peaks(seg, peak)
    except KeyError:
        peaks = []
    Path(peaks_path or f"{out_path}.peaks").write_text(io.format_indices(peaks))


def _labels_from(path, signal, band_ms):
    ann = io.read_annotations(path, len(signal))
    if isinstance(ann, LabelSet):
        return ann
    return peak_bands(ann, int(round(band_ms * signal.rate / 1000.0)), len(signal))


@main.command("learn")
@click.argument("signal_path")
@click.argument("labels_path")
@click.option("--init", "init_path", default=None, help="Initial graph file.")
@click.option("--default-init", is_flag=True, help="Start from the two-state A/R cycle.")
@click.option("--g0", default=100.0, show_default=True, type=float, help="Initial gap.")
@click.option("--lambda0", default=5e5, show_default=True, type=float, help="Initial penalty.")
@click.option("--max-iter", default=50, show_default=True, type=int)
@click.option("--folds", default=0, type=int, help="Also report k-fold validation errors.")
@click.option("--seed", default=0, show_default=True, type=int)
@click.option("--band-ms", default=100.0, show_default=True, type=float, help="Half-width of bands around peak labels.")
@click.option("--peak-name", default="R", show_default=True)
@click.option("-o", "--out", "out_path", required=True, help="Learned graph file to write.")
@click.option("--trace", "trace_path", default=None, help="Training trace [default: OUT.trace].")
@_guarded
def cmd_learn(signal_path, labels_path, init_path, default_init, g0, lambda0, max_iter, folds, seed, band_ms, peak_name, out_path, trace_path):
    """Greedy graph learning from labelled peaks."""
    signal = io.read_signal(signal_path)
    labels = _labels_from(labels_path, signal, band_ms)
    if not len(labels):
        raise ValueError(f"{labels_path}: no label regions")
    if init_path and default_init:
        raise ValueError("use either --init or --default-init")
    initial = io.read_graph(init_path) if init_path else two_state_graph(g0, lambda0)
    config = LearnConfig(initial_gap=g0, initial_penalty=lambda0, max_iterations=max_iter, peak_name=peak_name)
    graph, trace = learn(signal, labels, initial, config)
    io.write_graph(out_path, graph)
    Path(trace_path or f"{out_path}.trace").write_text(trace.to_text())
    click.echo(f"final label error {trace.errors[-1]} after {len(trace.records) - 1} accepted edits")
    if folds:
        click.echo("fold\ttrain\tvalidation\ttrain_error\tvalidation_error")
        for k, (train, val) in enumerate(split_folds(labels, folds, seed)):
            fold_graph, fold_trace = learn(signal, train, initial, config, ignore=val)
            seg = solve(signal, fold_graph)
            peaks = extract_peaks(seg, fold_graph.vertex_by_name(peak_name).id)
            val_err = count_label_errors(peaks, val, ignore=train).total
            click.echo(f"{k + 1}\t{len(train)}\t{len(val)}\t{fold_trace.errors[-1]}\t{val_err}")


@main.command("eval")
@click.argument("annotations_path")
@click.argument("detections_path")
@click.option("--tolerance-ms", default=DEFAULT_TOLERANCE_MS, show_default=True, type=float)
@click.option("--rate", default=360.0, show_default=True, type=float, help="Sampling rate in Hz.")
@click.option("--method", default="GCCD", show_default=True)
@_guarded
def cmd_eval(annotations_path, detections_path, tolerance_ms, rate, method):
    """Sen / PPR / DER of detections against reference annotations."""
    ann = io.read_annotations(annotations_path)
    det = io.read_annotations(detections_path)
    if isinstance(ann, LabelSet) or isinstance(det, LabelSet):
        raise ValueError("eval expects one sample index per line")
    result = match_detections(ann, det, tolerance_samples(tolerance_ms, rate))
    click.echo(format_report([(method, result)]), nl=False)


@main.command("plot-data")
@click.argument("segmentation_path")
@click.argument("signal_path")
@_guarded
def cmd_plot_data(segmentation_path, signal_path):
    """Per-sample table: index, sample, segment mean, state."""
    rows = io.parse_segmentation(io.read_text(segmentation_path))
    signal = io.read_signal(signal_path)
    if not rows or rows[-1][1] != len(signal):
        raise ValueError(f"segmentation covers {rows[-1][1] if rows else 0} samples, signal has {len(signal)}")
    out = ["index\tsample\tsegment_mean\tstate"]
    for first, last, mean, state in rows:
        for i in range(first, last + 1):
            out.append(f"{i - 1}\t{signal.samples[i - 1]!r}\t{mean!r}\t{state}")
    click.echo("\n".join(out))


@main.command("synth")
@click.argument("kind", type=click.Choice(["pulse-train", "noisy-ecg"]))
@click.option("--n", "n", default=3600, show_default=True, type=click.IntRange(min=10))
@click.option("--seed", default=0, show_default=True, type=int)
@click.option("--noise", default=None, type=float, help="Noise standard deviation.")
@click.option("--baseline-wander", default=0.0, show_default=True, type=float)
@click.option("-o", "--out", "out_path", required=True, help="Signal file to write.")
@click.option("--annotations", "ann_path", default=None, help="Annotation file [default: OUT.ann].")
@_guarded
def cmd_synth(kind, n, seed, noise, baseline_wander, out_path, ann_path):
    """Write a synthetic signal and its true peak positions."""
    if kind == "pulse-train":
        signal, peaks = pulse_train(n, seed, noise=noise or 0.0, baseline_wander=baseline_wander)
    else:
        signal, peaks = noisy_ecg(n, seed, noise=0.02 if noise is None else noise, baseline_wander=baseline_wander)
    io.write_signal(out_path, signal)
    Path(ann_path or f"{out_path}.ann").write_text(io.format_indices(peaks))


if __name__ == "__main__":
    main()
