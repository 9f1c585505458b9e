import json

import numpy as np
import pytest
from click.testing import CliRunner
from hypothesis import given, settings
from hypothesis import strategies as st

from mcid import Dataset, load_model
from mcid.cli import main, read_dataset_csv, write_dataset_csv


@pytest.fixture
def runner():
    return CliRunner()


def write_csv(path, text):
    path.write_text(text, encoding="utf-8")
    return str(path)


TOY = "x,y\n1.0,1\n2.0,1\n0.0,-1\n"


def test_fit_population_json(runner, tmp_path):
    csv_path = write_csv(tmp_path / "toy.csv", TOY)
    result = runner.invoke(main, ["fit-population", csv_path, "--json"])
    assert result.exit_code == 0, result.output
    payload = json.loads(result.output)
    assert payload["c_hat"] == 1.0
    assert payload["empirical_risk"] == 0.0
    assert payload["schema_version"] == 1


def test_fit_population_text_output(runner, tmp_path):
    csv_path = write_csv(tmp_path / "toy.csv", TOY)
    result = runner.invoke(main, ["fit-population", csv_path])
    assert result.exit_code == 0
    assert "c_hat = 1" in result.output
    # without --json stdout must not be a JSON document
    with pytest.raises(json.JSONDecodeError):
        json.loads(result.output)


def test_malformed_csv_exits_2_with_line_number(runner, tmp_path):
    csv_path = write_csv(tmp_path / "bad.csv", "x,y\n1.0,1\noops,1\n")
    result = runner.invoke(main, ["fit-population", csv_path])
    assert result.exit_code == 2
    assert ":3:" in result.output


def test_bad_header_exits_2(runner, tmp_path):
    csv_path = write_csv(tmp_path / "bad.csv", "score,label\n1.0,1\n")
    result = runner.invoke(main, ["fit-population", csv_path])
    assert result.exit_code == 2


def test_nonbinary_label_exits_2(runner, tmp_path):
    csv_path = write_csv(tmp_path / "bad.csv", "x,y\n1.0,3\n")
    result = runner.invoke(main, ["fit-population", csv_path])
    assert result.exit_code == 2


def test_zero_one_labels_flag(runner, tmp_path):
    plain = write_csv(tmp_path / "zo.csv", "x,y\n1.0,1\n2.0,1\n0.0,0\n")
    refused = runner.invoke(main, ["fit-population", plain])
    assert refused.exit_code == 2
    result = runner.invoke(main, ["fit-population", plain, "--zero-one-labels", "--json"])
    assert result.exit_code == 0
    assert json.loads(result.output)["c_hat"] == 1.0


def test_csv_round_trip(tmp_path):
    ds = Dataset([0.5, -1.25, 3.0], [1, -1, 1], [[1.0, -2.0], [0.125, 4.5], [0.0, 0.0]])
    path = tmp_path / "ds.csv"
    write_dataset_csv(ds, path)
    back, has_x, has_y = read_dataset_csv(path)
    assert has_x and has_y
    assert back == ds


@given(
    rows=st.lists(
        st.tuples(
            st.floats(allow_nan=False, allow_infinity=False, width=64),
            st.sampled_from([-1, 1]),
            st.floats(-1e6, 1e6),
        ),
        min_size=1,
        max_size=8,
    )
)
@settings(max_examples=40, deadline=None)
def test_csv_round_trip_property(rows, tmp_path_factory):
    ds = Dataset(
        [r[0] for r in rows], [r[1] for r in rows], [[r[2]] for r in rows]
    )
    path = tmp_path_factory.mktemp("csv") / "ds.csv"
    write_dataset_csv(ds, path)
    back, _, _ = read_dataset_csv(path)
    assert back == ds


def test_fit_weighted_and_np(runner, tmp_path):
    csv_path = write_csv(tmp_path / "toy.csv", "x,y\n0.0,-1\n1.0,-1\n2.0,1\n")
    weighted = runner.invoke(main, ["fit-weighted", csv_path, "--w", "0.1", "--json"])
    assert weighted.exit_code == 0
    assert json.loads(weighted.output)["c_hat"] == 2.0
    np_fit = runner.invoke(main, ["fit-np", csv_path, "--alpha", "0.5", "--json"])
    assert np_fit.exit_code == 0
    payload = json.loads(np_fit.output)
    assert payload["c_hat"] == 1.0
    assert payload["type_i_error"] == 0.5


def test_fit_personalized_and_predict(runner, tmp_path):
    rng = np.random.default_rng(0)
    z = rng.normal(size=(40, 2))
    x = z @ [1.0, 2.0] + rng.normal(size=40)
    y = np.where(rng.random(40) < 0.5, 1, -1)
    y = np.where(x - z @ [1.0, 2.0] > 0, 1, -1)
    rows = ["x,y,z1,z2"] + [
        f"{float(x[i])!r},{int(y[i])},{float(z[i, 0])!r},{float(z[i, 1])!r}"
        for i in range(40)
    ]
    train_csv = write_csv(tmp_path / "train.csv", "\n".join(rows) + "\n")
    model_path = tmp_path / "model.json"
    result = runner.invoke(
        main,
        [
            "fit-personalized", train_csv, "--kernel", "linear",
            "--lambda", "0.5", "--model-out", str(model_path), "--json",
        ],
    )
    assert result.exit_code == 0, result.output
    payload = json.loads(result.output)
    assert payload["lambda"] == 0.5
    assert model_path.exists()

    model = load_model(model_path)
    query_csv = write_csv(
        tmp_path / "query.csv", "x,y,z1,z2\n0.0,1,0.5,0.5\n1.0,-1,-0.5,0.0\n"
    )
    predict = runner.invoke(
        main, ["predict", "--model", str(model_path), query_csv, "--json"]
    )
    assert predict.exit_code == 0, predict.output
    rows = json.loads(predict.output)["rows"]
    expect = model.predict(np.array([[0.5, 0.5], [-0.5, 0.0]]))
    assert rows[0]["c_hat"] == pytest.approx(expect[0])
    assert rows[1]["c_hat"] == pytest.approx(expect[1])
    assert rows[0]["label_pred"] in (-1, 1)


def test_predict_z_only_csv(runner, tmp_path):
    train = Dataset([1.0, -1.0, 2.0, -2.0], [1, -1, 1, -1],
                    [[0.5, 0.0], [-0.5, 0.0], [1.0, 1.0], [-1.0, -1.0]])
    train_csv = tmp_path / "train.csv"
    write_dataset_csv(train, train_csv)
    model_path = tmp_path / "m.json"
    fit = runner.invoke(
        main,
        ["fit-personalized", str(train_csv), "--kernel", "gaussian",
         "--lambda", "1.0", "--model-out", str(model_path)],
    )
    assert fit.exit_code == 0, fit.output
    query_csv = write_csv(tmp_path / "q.csv", "z1,z2\n0.1,0.2\n")
    result = runner.invoke(main, ["predict", "--model", str(model_path), str(query_csv)])
    assert result.exit_code == 0, result.output
    assert result.output.startswith("c_hat")


def test_predict_dimension_mismatch_exits_2(runner, tmp_path):
    train = Dataset([1.0, -1.0], [1, -1], [[0.5], [-0.5]])
    train_csv = tmp_path / "train.csv"
    write_dataset_csv(train, train_csv)
    model_path = tmp_path / "m.json"
    runner.invoke(
        main,
        ["fit-personalized", str(train_csv), "--kernel", "linear",
         "--lambda", "1.0", "--model-out", str(model_path)],
    )
    query_csv = write_csv(tmp_path / "q.csv", "z1,z2\n0.1,0.2\n")
    result = runner.invoke(main, ["predict", "--model", str(model_path), str(query_csv)])
    assert result.exit_code == 2


def test_simulate_population_json(runner):
    result = runner.invoke(
        main,
        ["simulate", "--scenario", "pop1", "--n", "200", "--n-test", "300",
         "--reps", "4", "--method", "population", "--seed", "5",
         "--threads", "1", "--json"],
    )
    assert result.exit_code == 0, result.output
    payload = json.loads(result.output)
    assert payload["reps"] == 4
    assert len(payload["per_rep_mce"]) == 4
    assert payload["mean_mcid"] is not None
    again = runner.invoke(
        main,
        ["simulate", "--scenario", "pop1", "--n", "200", "--n-test", "300",
         "--reps", "4", "--method", "population", "--seed", "5",
         "--threads", "1", "--json"],
    )
    assert json.loads(again.output)["per_rep_mce"] == payload["per_rep_mce"]


def test_simulate_pop1_benchmark_band(runner):
    result = runner.invoke(
        main,
        ["simulate", "--scenario", "pop1", "--n", "1000", "--reps", "100",
         "--method", "population", "--seed", "0", "--threads", "1", "--json"],
    )
    assert result.exit_code == 0, result.output
    assert json.loads(result.output)["mean_mce"] <= 0.26


def test_sensitivity_delta_csv(runner, tmp_path):
    out = tmp_path / "sweep.csv"
    result = runner.invoke(
        main,
        ["sensitivity-delta", "--n", "50", "--seed", "3",
         "--deltas", "0.1,0.5", "--output", str(out)],
    )
    assert result.exit_code == 0, result.output
    lines = out.read_text().strip().splitlines()
    assert lines[0].startswith("delta,lambda_star,mce,intercept")
    assert len(lines) == 3


def test_demo_inconsistency_table(runner, tmp_path):
    out = tmp_path / "demo.csv"
    result = runner.invoke(main, ["demo-inconsistency", "--output", str(out)])
    assert result.exit_code == 0, result.output
    lines = out.read_text().strip().splitlines()
    assert lines[0] == "loss,minimizer,zero_one_threshold,gap"
    table = {row.split(",")[0]: float(row.split(",")[3]) for row in lines[1:]}
    assert table["hinge"] > 1e-3
    assert table["logistic"] > 1e-3
    assert table["capped_hinge"] > 1e-3
    assert abs(table["ramp_0.01"]) <= 1e-2


def test_unknown_flag_rejected(runner, tmp_path):
    csv_path = write_csv(tmp_path / "toy.csv", TOY)
    result = runner.invoke(main, ["fit-population", csv_path, "--bogus"])
    assert result.exit_code != 0


def test_numerical_failure_exits_1(runner):
    import click

    from mcid.cli import _handle_errors
    from mcid.errors import QuadratureFailure

    @click.command()
    @_handle_errors
    def boom():
        raise QuadratureFailure("tolerance unreachable")

    result = runner.invoke(boom, [])
    assert result.exit_code == 1
    assert "numerical failure" in result.output
