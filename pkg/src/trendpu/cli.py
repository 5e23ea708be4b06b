"""Command-line interface: ``trendpu <subcommand>``.

Exit codes
    0  success
    1  a verification property failed
    2  usage error, bad flag value, unreadable or malformed input
    3  degenerate partition (all trend scores equal, or an empty pseudo-class)
    4  numeric abort (non-finite loss or gradient)
    5  ground-truth labels required but absent
    6  any other pipeline stage failure
"""
from __future__ import annotations

import functools
import sys
from pathlib import Path

import click
import numpy as np

from . import jenks, tpp_stats
from .data import GaussianConfig, LabeledDataset, gen_two_gaussians, load_csv, make_pu_split, \
    reveal_truth, save_csv
from .errors import (
    ConfigurationError,
    DegenerateDistributionError,
    DegeneratePartitionError,
    EvaluationUnavailableError,
    NumericError,
    ParseError,
    StageError,
    TrendPUError,
)
from .model import predict_scores, save_params
from .pipeline import (
    PipelineConfig,
    compute_trend_scores,
    estimate_prior,
    evaluate,
    read_scores,
    read_traces,
    retrain,
    run_pipeline,
    select_stop,
    train_and_trace,
    write_scores,
    write_traces,
)
from .tpp_stats import Direction, TrendScoreParams

EXIT_VERIFY = 1
EXIT_USAGE = 2
EXIT_DEGENERATE = 3
EXIT_NUMERIC = 4
EXIT_NO_TRUTH = 5
EXIT_STAGE = 6


def _exit_code(exc: BaseException) -> int:
    if isinstance(exc, StageError):
        return _exit_code(exc.cause) if isinstance(exc.cause, TrendPUError) else EXIT_STAGE
    if isinstance(exc, (DegenerateDistributionError, DegeneratePartitionError)):
        return EXIT_DEGENERATE
    if isinstance(exc, NumericError):
        return EXIT_NUMERIC
    if isinstance(exc, EvaluationUnavailableError):
        return EXIT_NO_TRUTH
    if isinstance(exc, (ParseError, ConfigurationError, ValueError, OSError)):
        return EXIT_USAGE
    return EXIT_STAGE


def _guard(fn):
    """Map package errors to exit codes with a one-line message."""

    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except click.exceptions.Exit:
            raise
        except click.ClickException:
            raise
        except (TrendPUError, ValueError, OSError) as exc:
            click.echo(f"error: {exc}", err=True)
            sys.exit(_exit_code(exc))

    return wrapper


# -- configuration -----------------------------------------------------------------

def read_config_file(path) -> dict:
    """Parse ``key=value`` lines (``#`` comments allowed).

    A run report is accepted too: when any key carries the ``config.``
    prefix, only those keys are used.
    """
    values = {}
    for lineno, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ParseError(f"expected key=value, got {raw!r}", lineno)
        key, val = (s.strip() for s in line.split("=", 1))
        values[key] = val
    if any(k.startswith("config.") for k in values):
        values = {k[len("config."):]: v for k, v in values.items() if k.startswith("config.")}
    return values


_CONFIG_FLAGS = [
    click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False),
                 help="key=value configuration file (or a previous report.txt)."),
    click.option("--hidden-dims", default=None, help="Comma-separated hidden widths; empty = logistic."),
    click.option("--lr", type=float, default=None),
    click.option("--batch-size", type=int, default=None),
    click.option("--snapshot-interval", type=int, default=None, help="Optimizer steps per snapshot."),
    click.option("--max-snapshots", type=int, default=None),
    click.option("--alpha", type=float, default=None),
    click.option("--estimator", type=click.Choice(["full", "simplified", "empirical_mean"]), default=None),
    click.option("--stopping", type=click.Choice(["fixed", "mixup"]), default=None),
    click.option("--retrain-epochs", type=int, default=None),
    click.option("--seed", type=int, default=None),
]


def config_options(fn):
    for opt in reversed(_CONFIG_FLAGS):
        fn = opt(fn)
    return fn


def resolve_config(config_path=None, **flags) -> PipelineConfig:
    values = read_config_file(config_path) if config_path else {}
    values.update({k: v for k, v in flags.items() if v is not None})
    return PipelineConfig.from_dict(values)


def _split_flags(kwargs):
    keys = ("config_path", "hidden_dims", "lr", "batch_size", "snapshot_interval", "max_snapshots",
            "alpha", "estimator", "stopping", "retrain_epochs", "seed")
    return {k: kwargs.pop(k) for k in keys}


def _labeled_view(path) -> LabeledDataset:
    ds = load_csv(path)
    return LabeledDataset(ds.features, reveal_truth(ds), ds.ids)


# -- commands --------------------------------------------------------------------------

@click.group()
def main():
    """Trend-based positive-unlabeled learning."""


@main.command("gen-data")
@click.option("--dim", type=click.IntRange(min=1), required=True)
@click.option("--sigma", type=click.FloatRange(min=0, min_open=True), required=True)
@click.option("--n", "n", type=click.IntRange(min=2), required=True)
@click.option("--pi", type=click.FloatRange(0, 1, min_open=True, max_open=True), required=True)
@click.option("--n-labeled", type=click.IntRange(min=0), required=True)
@click.option("--seed", type=int, required=True)
@click.option("--out", type=click.Path(dir_okay=False), required=True)
@_guard
def gen_data(dim, sigma, n, pi, n_labeled, seed, out):
    """Sample two Gaussians and write a PU dataset CSV."""
    cfg = GaussianConfig(dim, sigma, n, pi)
    try:
        ds = gen_two_gaussians(cfg, seed)
        pu = make_pu_split(ds, n_labeled, seed + 1)
    except (ConfigurationError, ValueError) as exc:
        raise click.UsageError(str(exc))
    save_csv(pu, out)
    n_pos = int(np.sum(ds.labels == 0))
    click.echo(f"rows={n} positives={n_pos} negatives={n - n_pos} labeled={pu.n_labeled} "
               f"unlabeled={pu.n_unlabeled}")
    note = "ok" if cfg.radius > 2 else "WARNING: <= 2, near-trivial separation"
    click.echo(f"sigma*sqrt(dim)={cfg.radius:.4f} ({note})")


@main.command()
@click.option("--data", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--out-dir", type=click.Path(file_okay=False), required=True)
@config_options
@_guard
def train(data, out_dir, **kwargs):
    """Resampled PU training; writes traces.csv and model.csv."""
    config = resolve_config(**_split_flags(kwargs))
    pu = load_csv(data)
    traces, params = train_and_trace(pu, config)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_traces(traces, out / "traces.csv")
    save_params(params, out / "model.csv")
    t_stop = select_stop(traces, pu, config)
    (out / "t_stop.txt").write_text(f"{t_stop}\n", encoding="utf-8")
    if traces.validation is not None:
        (out / "validation.csv").write_text(
            "snapshot,score\n" + "".join(f"{k + 1},{v!r}\n" for k, v in enumerate(traces.validation.tolist())),
            encoding="utf-8")
    click.echo(f"snapshots={traces.n_snapshots} unlabeled={len(traces.ids)} t_stop={t_stop}")


@main.command("score-trends")
@click.option("--traces", "traces_path", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--out", type=click.Path(dir_okay=False), required=True)
@click.option("--t-stop", type=int, default=None, help="Leading snapshots to use (default: all).")
@click.option("--alpha", type=float, default=2.0, show_default=True)
@click.option("--estimator", type=click.Choice(["full", "simplified", "empirical_mean"]), default="full",
              show_default=True)
@_guard
def score_trends(traces_path, out, t_stop, alpha, estimator):
    """Trend score per unlabeled example."""
    traces = read_traces(traces_path)
    scores = compute_trend_scores(traces, t_stop or traces.n_snapshots, TrendScoreParams(alpha, estimator))
    write_scores(scores, None, out)
    click.echo(f"scored {len(scores)} traces over {t_stop or traces.n_snapshots} snapshots")


@main.command("mk-test")
@click.option("--traces", "traces_path", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--out", type=click.Path(dir_okay=False), required=True)
@click.option("--level", type=click.FloatRange(0, 1, min_open=True, max_open=True), default=0.05,
              show_default=True)
@_guard
def mk_test_cmd(traces_path, out, level):
    """Mann-Kendall verdict per trace."""
    traces = read_traces(traces_path)
    counts = {d: 0 for d in Direction}
    with open(out, "w", encoding="utf-8") as fh:
        fh.write("example_id,s,variance,z,gamma,direction\n")
        for key, row in traces.rows().items():
            v = tpp_stats.mk_test(row, level)
            counts[v.direction] += 1
            fh.write(f"{key},{v.s_statistic},{v.variance!r},{v.z_value!r},{v.gamma!r},{v.direction.value}\n")
    click.echo(" ".join(f"{d.value}={c}" for d, c in counts.items()))


@main.command()
@click.option("--scores", "scores_path", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--out", type=click.Path(dir_okay=False), required=True)
@_guard
def partition(scores_path, out):
    """Natural-break pseudo-labels from a trend-score file."""
    scores, _ = read_scores(scores_path)
    labels, brk = jenks.partition_by_trend(scores)
    write_scores(scores, labels, out)
    n_pos = sum(1 for v in labels.values() if v == jenks.PseudoLabel.POSITIVE)
    click.echo(f"break_index={brk.break_index} objective={brk.objective!r} "
               f"pseudo_negative={brk.low_size} pseudo_positive={n_pos} prior={estimate_prior(labels)!r}")


@main.command("retrain")
@click.option("--data", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--scores", "scores_path", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--out", type=click.Path(dir_okay=False), required=True, help="Model checkpoint path.")
@click.option("--test", "test_path", type=click.Path(exists=True, dir_okay=False), default=None)
@config_options
@_guard
def retrain_cmd(data, scores_path, out, test_path, **kwargs):
    """Supervised retraining on pseudo-labels."""
    config = resolve_config(**_split_flags(kwargs))
    pu = load_csv(data)
    _, labels = read_scores(scores_path)
    if labels is None:
        raise click.UsageError("score file has no pseudo-labels; run 'partition' first")
    params = retrain(pu, labels, config)
    save_params(params, out)
    if test_path:
        test = _labeled_view(test_path)
        p = predict_scores(params, test.features)
        m = evaluate((p < 0.5).astype(int), test.labels, p)
        click.echo(" ".join(f"test.{k}={v:.4f}" for k, v in m.as_dict().items() if k != "n"))


@main.command("pipeline")
@click.option("--data", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--out-dir", type=click.Path(file_okay=False), required=True)
@click.option("--test", "test_path", type=click.Path(exists=True, dir_okay=False), default=None)
@config_options
@_guard
def pipeline_cmd(data, out_dir, test_path, **kwargs):
    """Run every stage and write traces, scores, model and report."""
    config = resolve_config(**_split_flags(kwargs))
    pu = load_csv(data)
    test = _labeled_view(test_path) if test_path else None
    report = run_pipeline(config, pu, test, out_dir)
    click.echo(f"t_stop={report.t_stop} break_index={report.break_index} "
               f"pseudo_positive={report.n_pseudo_positive} pseudo_negative={report.n_pseudo_negative}")
    click.echo(f"prior.unlabeled={report.prior:.4f} prior.whole={report.prior_whole:.4f}")
    click.echo(f"estimator_agreement={report.estimator_agreement:.4f}")
    for name, m in (("unlabeled", report.unlabeled_metrics), ("test", report.test_metrics)):
        if m is not None:
            click.echo(" ".join(f"{name}.{k}={v:.4f}" for k, v in m.as_dict().items() if k != "n"))


@main.command()
@click.option("--suite", type=click.Choice(["jenks", "gradients", "concentration", "hyperplane", "all"]),
              default="all", show_default=True)
@click.option("--trials", type=click.IntRange(min=1), default=None,
              help="Trials per suite (defaults: jenks 200, gradients 50, concentration 1000, hyperplane 50).")
@click.option("--max-n", type=click.IntRange(min=2), default=500, show_default=True)
@click.option("--epsilon", type=click.FloatRange(0, 0.5, min_open=True, max_open=True), default=0.05,
              show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@_guard
def verify(suite, trials, max_n, epsilon, seed):
    """Run verification suites; exit 1 if any property fails."""
    from . import verify as v

    names = list(v.SUITES) if suite == "all" else [suite]
    checks = []
    for name in names:
        kw = {"seed": seed}
        if trials is not None:
            kw["trials"] = trials
        if name == "jenks":
            kw["max_n"] = max_n
        if name == "concentration":
            kw["epsilon"] = epsilon
        checks += [(name, c) for c in v.SUITES[name](**kw)]
    failed = 0
    for name, c in checks:
        click.echo(f"{'PASS' if c.passed else 'FAIL'} {name}: {c.name}: {c.detail}")
        if not c.passed:
            failed += 1
            click.echo(f"  reproduce: {c.reproduce}")
    click.echo(f"{len(checks) - failed}/{len(checks)} properties passed")
    if failed:
        sys.exit(EXIT_VERIFY)


@main.command("trace-summary")
@click.option("--traces", "traces_path", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--out", type=click.Path(dir_okay=False), required=True,
              help="Per-snapshot mean/std by true label.")
@click.option("--verdicts-out", type=click.Path(dir_okay=False), default=None,
              help="Mann-Kendall verdict fractions by true label (default: <out>_verdicts.csv).")
@click.option("--level", type=click.FloatRange(0, 1, min_open=True, max_open=True), default=0.05,
              show_default=True)
@_guard
def trace_summary(traces_path, out, verdicts_out, level):
    """Plot-ready class-wise mean traces and trend-verdict fractions."""
    traces = read_traces(traces_path)
    if traces.truth is None:
        raise EvaluationUnavailableError("trace file carries no true labels")
    if verdicts_out is None:
        p = Path(out)
        verdicts_out = p.with_name(p.stem + "_verdicts.csv")
    names = {0: "positive", 1: "negative"}
    with open(out, "w", encoding="utf-8") as fh:
        fh.write("label,snapshot,mean,std,count\n")
        for lab in sorted(set(traces.truth.tolist())):
            block = traces.scores[traces.truth == lab]
            for k in range(traces.n_snapshots):
                col = block[:, k]
                fh.write(f"{names[lab]},{k + 1},{float(col.mean())!r},{float(col.std())!r},{col.size}\n")
    with open(verdicts_out, "w", encoding="utf-8") as fh:
        fh.write("label,decreasing,increasing,no_trend,count\n")
        for lab in sorted(set(traces.truth.tolist())):
            block = traces.scores[traces.truth == lab]
            dirs = [tpp_stats.mk_test(row, level).direction for row in block]
            frac = {d: dirs.count(d) / len(dirs) for d in Direction}
            fh.write(f"{names[lab]},{frac[Direction.DECREASING]!r},{frac[Direction.INCREASING]!r},"
                     f"{frac[Direction.NO_TREND]!r},{len(dirs)}\n")
            click.echo(f"{names[lab]}: decreasing={frac[Direction.DECREASING]:.3f} "
                       f"increasing={frac[Direction.INCREASING]:.3f} no_trend={frac[Direction.NO_TREND]:.3f}")


if __name__ == "__main__":
    main()
