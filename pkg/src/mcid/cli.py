"""Command-line surface: CSV in, JSON or CSV reports out.

CSV schema: a header row of ``x,y`` followed by optional ``z1..zp`` columns,
comma-delimited, ``.`` decimal point.  Labels are -1/+1, or 0/1 when
``--zero-one-labels`` is passed (never remapped silently).  Exit codes:
0 success, 1 numerical failure, 2 input error.
"""

from __future__ import annotations

import csv
import functools
import json
import os
import sys

import click
import numpy as np

from . import __version__
from .data_model import Dataset, validate_columns
from .errors import DataError, McidError, NumericError
from .kernels import gaussian_kernel, linear_kernel
from .losses import (
    CAPPED_HINGE,
    DEMO_THRESHOLD,
    HINGE,
    LOGISTIC,
    ramp,
    surrogate_gap_demo_spec,
    surrogate_minimizer,
)
from .model_selection import CvPlan, cross_validate, default_lambda_grid
from .personalized import dca_fit, load_model, save_model
from .population import fit_neyman_pearson, fit_population, fit_weighted
from .simulate import (
    DEFAULT_DELTA_GRID,
    SimulationScenario,
    delta_sensitivity,
    mce,
    run_replications,
)

REPORT_SCHEMA_VERSION = 1


class _InputError(click.ClickException):
    exit_code = 2


def read_dataset_csv(path, zero_one_labels=False, require_x=True):
    """Parse the x,y,z1..zp schema with line-numbered diagnostics."""
    try:
        fh = open(path, newline="", encoding="utf-8")
    except OSError as exc:
        raise _InputError(f"{path}: {exc}") from exc
    with fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise _InputError(f"{path}: empty file") from None
        header = [h.strip() for h in header]
        cols, has_x, has_y = _check_header(path, header, require_x)
        xs, ys, zs = [], [], []
        p = len(cols)
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not cell.strip() for cell in row):
                continue
            if len(row) != len(header):
                raise _InputError(
                    f"{path}:{lineno}: expected {len(header)} fields, found {len(row)}"
                )
            try:
                vals = [float(cell) for cell in row]
            except ValueError as exc:
                raise _InputError(f"{path}:{lineno}: {exc}") from exc
            at = 0
            if has_x:
                xs.append(vals[0])
                at = 1
            if has_y:
                ys.append(vals[at])
                at += 1
            if p:
                zs.append(vals[at:])
    if has_y:
        ys = _map_labels(path, ys, zero_one_labels)
    x = np.asarray(xs) if has_x else np.zeros(len(zs))
    y = np.asarray(ys, dtype=int) if has_y else np.ones(max(len(xs), len(zs)), dtype=int)
    z = np.asarray(zs) if p else None
    report = validate_columns(x, y, z)
    if report.errors:
        raise _InputError(f"{path}: " + "; ".join(msg for _, msg in report.errors))
    return Dataset(x, y, z), has_x, has_y


def _check_header(path, header, require_x):
    has_x = bool(header) and header[0] == "x"
    at = 1 if has_x else 0
    has_y = len(header) > at and header[at] == "y"
    if has_y:
        at += 1
    if require_x and not (has_x and has_y):
        raise _InputError(f"{path}: header must start with 'x,y', found {header}")
    zcols = header[at:]
    for j, name in enumerate(zcols, start=1):
        if name != f"z{j}":
            raise _InputError(f"{path}: covariate columns must be z1..zp in order, found {name!r}")
    if not require_x and not (zcols or (has_x and has_y)):
        raise _InputError(f"{path}: need z1..zp columns (optionally preceded by x,y)")
    return zcols, has_x, has_y


def _map_labels(path, ys, zero_one):
    out = []
    for v in ys:
        if zero_one:
            if v not in (0.0, 1.0):
                raise _InputError(f"{path}: label {v} not in {{0, 1}}")
            out.append(1 if v == 1.0 else -1)
        else:
            if v not in (-1.0, 1.0):
                raise _InputError(f"{path}: label {v} not in {{-1, 1}} "
                                  "(use --zero-one-labels for 0/1 data)")
            out.append(int(v))
    return out


def write_dataset_csv(dataset: Dataset, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        p = dataset.covariate_dim
        writer.writerow(["x", "y"] + [f"z{j}" for j in range(1, p + 1)])
        for i in range(len(dataset)):
            row = [repr(float(dataset.x[i])), int(dataset.y[i])]
            if p:
                row += [repr(float(v)) for v in dataset.z[i]]
            writer.writerow(row)


def _emit(payload, as_json, output, text_lines):
    body = json.dumps(payload, indent=2, sort_keys=True)
    if output:
        with open(output, "w", encoding="utf-8") as fh:
            fh.write(body + "\n")
    if as_json:
        click.echo(body)
    else:
        for line in text_lines:
            click.echo(line)


def _handle_errors(fn):
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except DataError as exc:
            click.echo(f"error: {exc}", err=True)
            sys.exit(2)
        except NumericError as exc:
            click.echo(f"numerical failure: {exc}", err=True)
            sys.exit(1)
        except McidError as exc:
            click.echo(f"error: {exc}", err=True)
            sys.exit(1)

    return wrapper


def _fit_payload(fit, extra=None):
    payload = {
        "schema_version": REPORT_SCHEMA_VERSION,
        "kind": "threshold_fit",
        "mode": fit.mode,
        "c_hat": fit.c_hat,
        "empirical_risk": fit.empirical_risk,
        "minimizer_set": list(fit.minimizer_set),
        "weight_w": fit.weight_w,
        "alpha": fit.alpha,
        "type_i_error": fit.type_i_error,
        "type_ii_error": fit.type_ii_error,
    }
    payload.update(extra or {})
    return payload


@click.group()
@click.version_option(version=__version__, prog_name="mcid")
def main():
    """Estimate population-based and personalized MCID thresholds."""


_zero_one = click.option(
    "--zero-one-labels", is_flag=True, help="Map 0/1 labels onto -1/+1 while parsing."
)
_json_flag = click.option("--json", "as_json", is_flag=True, help="Emit a JSON report on stdout.")
_output = click.option("--output", type=click.Path(), default=None, help="Also write JSON here.")


@main.command("fit-population")
@click.argument("input_csv", type=click.Path())
@_zero_one
@_json_flag
@_output
@_handle_errors
def fit_population_cmd(input_csv, zero_one_labels, as_json, output):
    """Fit the single best threshold under the empirical 0-1 risk."""
    data, _, _ = read_dataset_csv(input_csv, zero_one_labels)
    fit = fit_population(data)
    payload = _fit_payload(fit, {"config": {"input": input_csv, "n": len(data)}})
    _emit(payload, as_json, output, [
        f"c_hat = {fit.c_hat:.6g}",
        f"empirical_risk = {fit.empirical_risk:.6g}",
        f"minimizers = {list(fit.minimizer_set)}",
    ])


@main.command("fit-weighted")
@click.argument("input_csv", type=click.Path())
@click.option("--w", type=float, required=True, help="Cost of a missed positive, in (0,1).")
@_zero_one
@_json_flag
@_output
@_handle_errors
def fit_weighted_cmd(input_csv, w, zero_one_labels, as_json, output):
    """Fit the threshold under asymmetric error costs w / (1-w)."""
    data, _, _ = read_dataset_csv(input_csv, zero_one_labels)
    fit = fit_weighted(data, w)
    payload = _fit_payload(fit, {"config": {"input": input_csv, "n": len(data), "w": w}})
    _emit(payload, as_json, output, [
        f"c_hat = {fit.c_hat:.6g}",
        f"weighted_risk = {fit.empirical_risk:.6g}",
    ])


@main.command("fit-np")
@click.argument("input_csv", type=click.Path())
@click.option("--alpha", type=float, required=True, help="Cap on the type-I error, in (0,1).")
@_zero_one
@_json_flag
@_output
@_handle_errors
def fit_np_cmd(input_csv, alpha, zero_one_labels, as_json, output):
    """Minimize the type-II error subject to a type-I error cap."""
    data, _, _ = read_dataset_csv(input_csv, zero_one_labels)
    fit = fit_neyman_pearson(data, alpha)
    payload = _fit_payload(fit, {"config": {"input": input_csv, "n": len(data), "alpha": alpha}})
    _emit(payload, as_json, output, [
        f"c_hat = {fit.c_hat:.6g}",
        f"type_i_error = {fit.type_i_error:.6g}",
        f"type_ii_error = {fit.type_ii_error:.6g}",
    ])


@main.command("fit-personalized")
@click.argument("input_csv", type=click.Path())
@click.option("--kernel", type=click.Choice(["linear", "gaussian"]), required=True)
@click.option("--sigma2", default="median", show_default=True,
              help="Gaussian bandwidth: a number or 'median'.")
@click.option("--delta", type=float, default=0.1, show_default=True)
@click.option("--lambda", "lam", default="cv", show_default=True,
              help="Penalty weight: a number or 'cv'.")
@click.option("--folds", type=int, default=5, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--model-out", type=click.Path(), default=None)
@_zero_one
@_json_flag
@_output
@_handle_errors
def fit_personalized_cmd(input_csv, kernel, sigma2, delta, lam, folds, seed,
                         model_out, zero_one_labels, as_json, output):
    """Fit the covariate-dependent threshold c(z)."""
    data, _, _ = read_dataset_csv(input_csv, zero_one_labels)
    if data.z is None:
        raise _InputError(f"{input_csv}: personalized fitting needs z1..zp columns")
    if kernel == "linear":
        spec = linear_kernel()
    else:
        if sigma2 != "median":
            try:
                sigma2 = float(sigma2)
            except ValueError:
                raise _InputError(f"--sigma2 must be a number or 'median', got {sigma2!r}")
        spec = gaussian_kernel(sigma2)
    cv_table = None
    if lam == "cv":
        lam_value, cv_table = cross_validate(
            data, spec, delta, plan=CvPlan(k=folds, seed=seed)
        )
    else:
        try:
            lam_value = float(lam)
        except ValueError:
            raise _InputError(f"--lambda must be a number or 'cv', got {lam!r}")
    model = dca_fit(data, spec, delta=delta, lam=lam_value)
    if model_out:
        save_model(model, model_out)
    payload = {
        "schema_version": REPORT_SCHEMA_VERSION,
        "kind": "personalized_fit",
        "kernel": {"kind": model.kernel.kind, "sigma2": model.kernel.sigma2},
        "delta": delta,
        "lambda": lam_value,
        "lambda_source": "cv" if lam == "cv" else "fixed",
        "objective": model.trace[-1],
        "n_outer_iterations": model.n_outer,
        "b": model.b,
        "model_file": model_out,
        "cv_table": [list(row) for row in cv_table] if cv_table else None,
        "config": {"input": input_csv, "n": len(data), "folds": folds, "seed": seed},
    }
    _emit(payload, as_json, output, [
        f"kernel = {model.kernel.kind}",
        f"lambda = {lam_value:.6g}" + (" (cv)" if cv_table else ""),
        f"objective = {model.trace[-1]:.6g} after {model.n_outer} outer iterations",
        f"model written to {model_out}" if model_out else "model not saved (no --model-out)",
    ])


@main.command("predict")
@click.option("--model", "model_path", type=click.Path(), required=True)
@click.argument("input_csv", type=click.Path())
@_zero_one
@_json_flag
@_output
@_handle_errors
def predict_cmd(model_path, input_csv, zero_one_labels, as_json, output):
    """Per-row thresholds c(z); adds a classification when x is present."""
    try:
        model = load_model(model_path)
    except (OSError, ValueError, KeyError) as exc:
        raise _InputError(f"{model_path}: {exc}") from exc
    data, has_x, _ = read_dataset_csv(input_csv, zero_one_labels, require_x=False)
    if data.z is None or data.covariate_dim != model.anchors.shape[1]:
        raise _InputError(
            f"{input_csv}: model expects {model.anchors.shape[1]} covariates, "
            f"found {data.covariate_dim}"
        )
    c_hat = model.predict(data.z)
    rows = []
    for i in range(len(data)):
        row = {"c_hat": float(c_hat[i])}
        if has_x:
            row["x"] = float(data.x[i])
            row["label_pred"] = 1 if data.x[i] >= c_hat[i] else -1
        rows.append(row)
    payload = {
        "schema_version": REPORT_SCHEMA_VERSION,
        "kind": "predictions",
        "model": model_path,
        "rows": rows,
    }
    lines = [
        ",".join(str(row[k]) for k in ("x", "c_hat", "label_pred") if k in row) for row in rows
    ]
    header = "x,c_hat,label_pred" if has_x else "c_hat"
    _emit(payload, as_json, output, [header] + lines)


@main.command("simulate")
@click.option("--scenario", type=click.Choice(["pop1", "pop2", "pers1", "pers2", "pers3"]),
              required=True)
@click.option("--n", "n_train", type=int, required=True, help="Training size per replication.")
@click.option("--n-test", type=int, default=2000, show_default=True)
@click.option("--reps", type=int, default=1, show_default=True)
@click.option("--method",
              type=click.Choice(["population", "personalized-linear", "personalized-gaussian"]),
              default="population", show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--delta", type=float, default=0.1, show_default=True)
@click.option("--lambda", "lam", default="cv", show_default=True)
@click.option("--threads", type=int, default=None,
              help="Worker processes; defaults to the available parallelism.")
@_json_flag
@_output
@_handle_errors
def simulate_cmd(scenario, n_train, n_test, reps, method, seed, delta, lam, threads,
                 as_json, output):
    """Replicate a synthetic scenario and aggregate MCID/MCE statistics."""
    if lam != "cv":
        try:
            lam = float(lam)
        except ValueError:
            raise _InputError(f"--lambda must be a number or 'cv', got {lam!r}")
    n_jobs = threads if threads is not None else (os.cpu_count() or 1)
    report = run_replications(
        SimulationScenario(scenario, n_train=n_train, n_test=n_test, seed=seed),
        method=method,
        reps=reps,
        base_seed=seed,
        delta=delta,
        lam=lam,
        n_jobs=max(1, n_jobs),
    )
    payload = {
        "schema_version": REPORT_SCHEMA_VERSION,
        "kind": "replication_report",
        "scenario": report.scenario_id,
        "method": report.method,
        "reps": report.reps,
        "mean_mce": report.mean_mce,
        "se_mce": report.se_mce,
        "mean_mcid": report.mean_mcid,
        "se_mcid": report.se_mcid,
        "per_rep_mce": list(report.mces),
        "per_rep_mcid": list(report.mcids) if report.mcids else None,
        "failures": [list(f) for f in report.failures],
        "runtime_seconds": report.runtime_seconds,
        "config": {"seed": seed, **report.params},
    }
    lines = [f"scenario = {scenario}, method = {method}, reps = {reps}"]
    if report.mean_mcid is not None:
        lines.append(f"mean MCID = {report.mean_mcid:.4f}"
                     + (f" (se {report.se_mcid:.4f})" if report.se_mcid is not None else ""))
    lines.append(f"mean MCE = {report.mean_mce:.4f}"
                 + (f" (se {report.se_mce:.4f})" if report.se_mce is not None else ""))
    if report.failures:
        lines.append(f"failures: {len(report.failures)}")
    lines.append(f"runtime = {report.runtime_seconds:.1f}s")
    _emit(payload, as_json, output, lines)


@main.command("sensitivity-delta")
@click.option("--n", type=int, default=250, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--deltas", default=",".join(str(d) for d in DEFAULT_DELTA_GRID),
              show_default=True, help="Comma-separated grid of surrogate widths.")
@click.option("--output", type=click.Path(), default=None, help="Write the CSV table here.")
@_handle_errors
def sensitivity_delta_cmd(n, seed, deltas, output):
    """Refit one fixed replication across surrogate widths; emits a CSV table."""
    try:
        grid = tuple(float(v) for v in deltas.split(","))
    except ValueError:
        raise _InputError(f"--deltas must be comma-separated numbers, got {deltas!r}")
    rows = delta_sensitivity(n=n, deltas=grid, seed=seed)
    p = len(rows[0].coefficients or ())
    header = ["delta", "lambda_star", "mce", "intercept"] + [f"coef{j+1}" for j in range(p)] + [
        "rkhs_norm"
    ]
    lines = [",".join(header)]
    for row in rows:
        cells = [repr(row.delta), repr(row.lambda_star), repr(row.mce), repr(row.intercept)]
        cells += [repr(c) for c in (row.coefficients or ())]
        cells.append(repr(row.rkhs_norm))
        lines.append(",".join(cells))
    body = "\n".join(lines) + "\n"
    if output:
        with open(output, "w", encoding="utf-8") as fh:
            fh.write(body)
    else:
        click.echo(body, nl=False)


@main.command("demo-inconsistency")
@click.option("--output", type=click.Path(), default=None, help="Write the CSV table here.")
@_handle_errors
def demo_inconsistency_cmd(output):
    """Where classical margin losses place the population threshold.

    On a fixed skewed-response instance the hinge, logistic and capped-hinge
    minimizers all land strictly above the zero-one threshold, while a narrow
    ramp loss recovers it; emits loss,minimizer,gap rows."""
    spec = surrogate_gap_demo_spec()
    losses = [("hinge", HINGE), ("logistic", LOGISTIC), ("capped_hinge", CAPPED_HINGE),
              ("ramp_0.01", ramp(0.01))]
    lines = ["loss,minimizer,zero_one_threshold,gap"]
    for name, kind in losses:
        c = surrogate_minimizer(kind, spec)
        lines.append(f"{name},{c!r},{DEMO_THRESHOLD!r},{c - DEMO_THRESHOLD!r}")
    body = "\n".join(lines) + "\n"
    if output:
        with open(output, "w", encoding="utf-8") as fh:
            fh.write(body)
    else:
        click.echo(body, nl=False)


if __name__ == "__main__":
    main()
