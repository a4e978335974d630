"""Command-line interface.

Subcommands cover the whole pipeline: generate a synthetic corpus, extract
the feature matrix, run feature selection, evaluate, train, predict, and
serve the capture API. Results go to stdout; every run first echoes the
resolved, result-affecting configuration as ``#``-prefixed lines so output
is self-describing and reruns are comparable byte for byte. Execution-only
knobs (``--jobs``) are deliberately not echoed: they must not change output.

Exit codes: 0 success, 1 domain error (bad data, bad file), 2 usage error.
"""

from __future__ import annotations

import functools
import json
from pathlib import Path

import click

from . import __version__, dataio
from .errors import EmgAffectError
from .evaluation import EvalPlan, Scheme, run_eval
from .features import FeatureKind
from .selection import Granularity, SelectionSpec, Strategy, select_features, sweep_k
from .signals import (
    DEFAULT_HEAD_S,
    DEFAULT_SAMPLE_RATE_HZ,
    DEFAULT_SLOT_COUNT,
    DEFAULT_TAIL_S,
)
from .svm import SvmHyperparams, train as train_model

_FORMATS = click.Choice(["table", "csv", "json-lines"])


def _fail_on_domain_errors(fn):
    """Map package errors to exit code 1 with a clean message."""

    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except EmgAffectError as exc:
            raise click.ClickException(str(exc)) from exc

    return wrapper


def _parse_gamma(text: str) -> float | str:
    if text == "auto":
        return "auto"
    try:
        value = float(text)
    except ValueError:
        raise click.BadParameter("gamma must be a positive number or 'auto'") from None
    if value <= 0:
        raise click.BadParameter("gamma must be a positive number or 'auto'")
    return value


def _parse_int_list(text: str, what: str) -> tuple[int, ...]:
    try:
        values = tuple(int(part) for part in text.split(","))
    except ValueError:
        raise click.BadParameter(f"{what} must be comma-separated integers") from None
    if not values:
        raise click.BadParameter(f"{what} must be non-empty")
    return values


def _echo_config(pairs: dict) -> None:
    for key, value in pairs.items():
        click.echo(f"# {key}={value}")


def _kind_names(members) -> str:
    return "+".join(FeatureKind(m).name for m in members)


seed_option = click.option(
    "--seed",
    type=int,
    default=0,
    show_default=True,
    envvar="EMG_AFFECT_SEED",
    help="Base random seed (env: EMG_AFFECT_SEED).",
)


@click.group()
@click.version_option(version=__version__, prog_name="emg-affect")
def cli():
    """Forearm-EMG relaxed/angry classification pipeline."""


@cli.command()
@click.option("--out", required=True, type=click.Path(), help="Corpus root directory.")
@click.option("--users", type=int, default=10, show_default=True)
@click.option("--typing-s", type=float, default=60.0, show_default=True)
@click.option("--rate", type=int, default=DEFAULT_SAMPLE_RATE_HZ, show_default=True)
@seed_option
@click.option("--force", is_flag=True, help="Overwrite existing files.")
@_fail_on_domain_errors
def generate(out, users, typing_s, rate, seed, force):
    """Write a synthetic recording corpus plus its manifest."""
    _echo_config(
        {"users": users, "typing_s": typing_s, "rate": rate, "seed": seed}
    )
    manifest = dataio.generate_corpus(
        out,
        user_count=users,
        seed=seed,
        typing_s=typing_s,
        sample_rate_hz=rate,
        overwrite=force,
    )
    click.echo(f"manifest {manifest}")
    click.echo(f"recordings {users * 4}")


@cli.command()
@click.option("--manifest", "manifest_path", required=True, type=click.Path())
@click.option("--out", required=True, type=click.Path(), help="Matrix CSV path.")
@click.option("--slots", type=int, default=DEFAULT_SLOT_COUNT, show_default=True)
@click.option("--head-s", type=float, default=DEFAULT_HEAD_S, show_default=True)
@click.option("--tail-s", type=float, default=DEFAULT_TAIL_S, show_default=True)
@click.option("--force", is_flag=True, help="Overwrite an existing matrix.")
@_fail_on_domain_errors
def extract(manifest_path, out, slots, head_s, tail_s, force):
    """Trim, slot and featurize every recording in a manifest."""
    _echo_config({"slots": slots, "head_s": head_s, "tail_s": tail_s})
    matrix = dataio.load_corpus(
        manifest_path, head_s=head_s, tail_s=tail_s, slot_count=slots
    )
    dataio.write_matrix(matrix, out, overwrite=force)
    click.echo(f"matrix {out}")
    click.echo(f"shape {matrix.n_rows}x{matrix.n_cols}")


def _hyperparams(c, gamma, tolerance, max_passes, folds, seed) -> SvmHyperparams:
    return SvmHyperparams(
        c=c,
        gamma=_parse_gamma(gamma),
        tolerance=tolerance,
        max_passes=max_passes,
        folds=folds,
        seed=seed,
    )


def svm_options(fn):
    decorators = [
        click.option("--c", type=float, default=1.0, show_default=True, help="Soft-margin C."),
        click.option("--gamma", default="auto", show_default=True, help="RBF gamma or 'auto'."),
        click.option("--tolerance", type=float, default=1e-3, show_default=True),
        click.option("--max-passes", type=int, default=200, show_default=True),
        click.option("--folds", type=int, default=5, show_default=True),
    ]
    for dec in reversed(decorators):
        fn = dec(fn)
    return fn


@cli.command()
@click.option("--matrix", "matrix_path", required=True, type=click.Path())
@click.option("--k", type=int, default=5, show_default=True)
@click.option(
    "--strategy",
    type=click.Choice([s.value for s in Strategy]),
    default=Strategy.AUTO.value,
    show_default=True,
)
@click.option(
    "--granularity",
    type=click.Choice([g.value for g in Granularity]),
    default=Granularity.FEATURE_TYPE.value,
    show_default=True,
)
@click.option("--budget", type=int, default=100_000, show_default=True)
@click.option("--sweep", default=None, help="Comma-separated k values to sweep instead of one k.")
@click.option("--format", "fmt", type=_FORMATS, default="table", show_default=True)
@svm_options
@seed_option
@_fail_on_domain_errors
def select(matrix_path, k, strategy, granularity, budget, sweep, fmt, c, gamma, tolerance, max_passes, folds, seed):
    """Search feature subsets by cross-validated accuracy."""
    matrix = dataio.read_matrix(matrix_path)
    hp = _hyperparams(c, gamma, tolerance, max_passes, folds, seed)
    spec = SelectionSpec(
        k=k,
        strategy=Strategy(strategy),
        granularity=Granularity(granularity),
        budget=budget,
        seed=seed,
    )
    _echo_config(
        {
            "k": "sweep" if sweep else k,
            "strategy": strategy,
            "granularity": granularity,
            "budget": budget,
            "c": c,
            "gamma": gamma,
            "tolerance": tolerance,
            "max_passes": max_passes,
            "folds": folds,
            "seed": seed,
        }
    )
    if sweep:
        results = sweep_k(matrix, _parse_int_list(sweep, "sweep"), spec, hp)
    else:
        results = (select_features(matrix, spec, hp),)

    rows = [
        {
            "k": len(r.members),
            "strategy": r.strategy.value,
            "members": _kind_names(r.members)
            if r.granularity is Granularity.FEATURE_TYPE
            else ",".join(str(m) for m in r.members),
            "cv_accuracy": f"{r.cv_accuracy:.6f}",
            "evaluated": r.evaluated,
        }
        for r in results
    ]
    _emit_rows(rows, fmt)


def _emit_rows(rows: list[dict], fmt: str) -> None:
    if not rows:
        return
    keys = list(rows[0].keys())
    if fmt == "json-lines":
        for row in rows:
            click.echo(json.dumps(row, separators=(",", ":")))
    elif fmt == "csv":
        click.echo(",".join(keys))
        for row in rows:
            click.echo(",".join(str(row[k]) for k in keys))
    else:
        widths = {
            k: max(len(k), *(len(str(row[k])) for row in rows)) for k in keys
        }
        click.echo("  ".join(k.ljust(widths[k]) for k in keys))
        for row in rows:
            click.echo("  ".join(str(row[k]).ljust(widths[k]) for k in keys))


@cli.command(name="eval")
@click.option("--matrix", "matrix_path", required=True, type=click.Path())
@click.option(
    "--scheme",
    type=click.Choice([s.value for s in Scheme]),
    default=Scheme.LOUO.value,
    show_default=True,
)
@click.option("--iterations", type=int, default=50, show_default=True)
@click.option("--jobs", type=int, default=1, show_default=True, help="Worker processes (does not affect output).")
@click.option("--k", type=int, default=5, show_default=True, help="Subset size for per-iteration selection.")
@click.option("--no-selection", is_flag=True, help="Train on all features.")
@click.option(
    "--no-reselect",
    is_flag=True,
    help="Select once on the full matrix instead of per iteration.",
)
@click.option("--format", "fmt", type=_FORMATS, default="table", show_default=True)
@svm_options
@seed_option
@_fail_on_domain_errors
def eval_command(matrix_path, scheme, iterations, jobs, k, no_selection, no_reselect, fmt, c, gamma, tolerance, max_passes, folds, seed):
    """Evaluate with leave-one-user-out or stratified 80-20 iterations."""
    matrix = dataio.read_matrix(matrix_path)
    hp = _hyperparams(c, gamma, tolerance, max_passes, folds, seed)
    selection = None if no_selection else SelectionSpec(k=k, seed=seed)
    plan = EvalPlan(
        scheme=Scheme(scheme),
        iterations=iterations,
        seed=seed,
        reselect_per_iteration=not no_reselect,
        jobs=jobs,
        selection=selection,
        hp=hp,
    )
    _echo_config(
        {
            "scheme": scheme,
            "iterations": iterations,
            "selection": "none" if no_selection else f"k={k}",
            "reselect": not no_reselect,
            "c": c,
            "gamma": gamma,
            "tolerance": tolerance,
            "max_passes": max_passes,
            "folds": folds,
            "seed": seed,
        }
    )
    report = run_eval(matrix, plan)
    rows = [
        {
            "iteration": it.index,
            "held": it.held_user if it.held_user is not None else "8020",
            "selected": _kind_names(it.selected_members) if it.selected_members else "-",
            "tp": it.confusion.tp,
            "fp": it.confusion.fp,
            "fn": it.confusion.fn,
            "tn": it.confusion.tn,
            "accuracy": f"{it.accuracy:.6f}",
        }
        for it in report.iterations
    ]
    _emit_rows(rows, fmt)
    cm = report.confusion
    summary = {
        "tp": cm.tp,
        "fp": cm.fp,
        "fn": cm.fn,
        "tn": cm.tn,
        "mean_accuracy": f"{report.mean_accuracy:.6f}",
        "accuracy_sd": f"{report.accuracy_sd:.6f}",
    }
    for name, value in report.report.as_dict().items():
        summary[name] = f"{value:.6f}"
    if fmt == "json-lines":
        click.echo(json.dumps({"aggregate": summary}, separators=(",", ":")))
    else:
        for key, value in summary.items():
            click.echo(f"# {key}={value}")


@cli.command(name="train")
@click.option("--matrix", "matrix_path", required=True, type=click.Path())
@click.option("--out", required=True, type=click.Path(), help="Model file path.")
@click.option("--columns", default=None, help="Comma-separated column indices to train on.")
@click.option("--k", type=int, default=None, help="Run feature-type selection with this k first.")
@click.option("--force", is_flag=True, help="Overwrite an existing model file.")
@svm_options
@seed_option
@_fail_on_domain_errors
def train_command(matrix_path, out, columns, k, force, c, gamma, tolerance, max_passes, folds, seed):
    """Train one model on a feature matrix and save it."""
    if columns is not None and k is not None:
        raise click.UsageError("--columns and --k are mutually exclusive")
    matrix = dataio.read_matrix(matrix_path)
    hp = _hyperparams(c, gamma, tolerance, max_passes, folds, seed)
    _echo_config(
        {
            "columns": columns if columns is not None else ("all" if k is None else f"select k={k}"),
            "c": c,
            "gamma": gamma,
            "tolerance": tolerance,
            "max_passes": max_passes,
            "folds": folds,
            "seed": seed,
        }
    )
    active = None
    if columns is not None:
        active = _parse_int_list(columns, "columns")
    elif k is not None:
        chosen = select_features(matrix, SelectionSpec(k=k, seed=seed), hp)
        active = chosen.columns
        click.echo(f"selected {_kind_names(chosen.members)}")
    model = train_model(matrix, hp, active)
    dataio.save_model(model, out, overwrite=force)
    click.echo(f"model {out}")
    click.echo(
        f"support_vectors {model.support_vectors.shape[0]} gamma {model.gamma!r} "
        f"converged {str(model.converged).lower()} passes {model.passes}"
    )


@cli.command(name="predict")
@click.option("--model", "model_path", required=True, type=click.Path())
@click.option("--slots", type=int, default=DEFAULT_SLOT_COUNT, show_default=True)
@click.option("--head-s", type=float, default=DEFAULT_HEAD_S, show_default=True)
@click.option("--tail-s", type=float, default=DEFAULT_TAIL_S, show_default=True)
@click.option("--format", "fmt", type=_FORMATS, default="table", show_default=True)
@click.argument("recordings", nargs=-1, required=True)
@_fail_on_domain_errors
def predict_command(model_path, slots, head_s, tail_s, fmt, recordings):
    """Classify recordings with a saved model."""
    from .features import extract_row
    from .signals import partition_slots, trim_rest_windows

    model = dataio.load_model(model_path)
    _echo_config({"slots": slots, "head_s": head_s, "tail_s": tail_s})
    rows = []
    for path in recordings:
        recording = dataio.read_recording(path)
        trimmed = trim_rest_windows(recording.series, head_s, tail_s)
        partition = partition_slots(trimmed, slots)
        vector = extract_row(
            trimmed, partition, recording.label, recording.user_id, recording.condition
        )
        decision = float(model.decision_values([list(vector.values)])[0])
        predicted = model.predict_row(list(vector.values))
        rows.append(
            {
                "path": path,
                "predicted": predicted.value,
                "decision": f"{decision:.6f}",
                "annotated": recording.label.value,
            }
        )
    _emit_rows(rows, fmt)


@cli.command(name="serve")
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", type=int, default=8000, show_default=True)
@click.option("--data-dir", required=True, type=click.Path())
@click.option("--pre-rest-s", type=float, default=10.0, show_default=True)
@click.option("--post-rest-s", type=float, default=5.0, show_default=True)
@click.option("--typing-limit-s", type=float, default=60.0, show_default=True)
@_fail_on_domain_errors
def serve_command(host, port, data_dir, pre_rest_s, post_rest_s, typing_limit_s):
    """Run the capture service (simulated sensor source)."""
    import uvicorn

    from .service import RealClock, ServiceConfig, create_app

    config = ServiceConfig(
        data_dir=Path(data_dir),
        clock=RealClock(),
        pre_rest_s=pre_rest_s,
        post_rest_s=post_rest_s,
        open_typing_limit_s=typing_limit_s,
    )
    uvicorn.run(create_app(config), host=host, port=port)


def main():
    cli()


if __name__ == "__main__":
    main()
