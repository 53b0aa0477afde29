import json

import numpy as np
import pytest
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st

from wnnsid import cli, io
from wnnsid.errors import DataFormatError
from wnnsid.hankel_ops import TimeSeries
from wnnsid.sim_eval import random_model, simulate
from wnnsid.subspace import StateSpaceModel, stabilize

finite = st.floats(allow_nan=False, allow_infinity=False, width=64)


def run(argv):
    try:
        return cli.main([str(a) for a in argv])
    except SystemExit as exc:
        return exc.code


@pytest.fixture
def dataset(tmp_path):
    path = tmp_path / "data.csv"
    assert run(["generate", "--order", 3, "--sigma", 2, "--length", 500, "--seed", 7,
                "--out", path, "--model-out", tmp_path / "truth.json"]) == 0
    return path


# --- datasets ------------------------------------------------------------

@settings(max_examples=40, deadline=None, suppress_health_check=[HealthCheck.function_scoped_fixture])
@given(st.integers(1, 30), st.integers(1, 3), st.integers(1, 3), st.data())
def test_csv_round_trip_is_exact(tmp_path, T, m, p, data):
    vals = data.draw(st.lists(finite, min_size=T * (m + p), max_size=T * (m + p)))
    arr = np.array(vals).reshape(T, m + p)
    path = tmp_path / "rt.csv"
    io.write_dataset(path, TimeSeries(arr[:, :m]), TimeSeries(arr[:, m:]))
    u, y = io.read_dataset(path)
    assert np.array_equal(u.data, arr[:, :m]) and np.array_equal(y.data, arr[:, m:])


@pytest.mark.parametrize(
    "text, where",
    [
        ("", "empty"),
        ("x,u1,y1\n0,1,2\n", ":1:"),
        ("t,y1,u1\n0,1,2\n", ":1:"),
        ("t,u1\n0,1\n", ":1:"),
        ("t,u1,y1\n0,1,2\n1,3\n", ":3:"),
        ("t,u1,y1\n0,1,2\n1,abc,4\n", ":3:"),
        ("t,u1,y1\n0,1,2\n2,1,2\n", ":3:"),
        ("t,u1,y1\n0,1,nan\n", ":2:"),
        ("t,u1,y1\n", "no samples"),
    ],
)
def test_csv_errors_carry_location(tmp_path, text, where):
    path = tmp_path / "bad.csv"
    path.write_text(text)
    with pytest.raises(DataFormatError, match=where):
        io.read_dataset(path)


def test_missing_file(tmp_path):
    with pytest.raises(DataFormatError):
        io.read_dataset(tmp_path / "nope.csv")


# --- model files ---------------------------------------------------------

def test_model_round_trip_is_bit_exact(tmp_path, rng):
    m = stabilize(random_model(5, 3, n_inputs=2, n_outputs=3))
    m = StateSpaceModel(m.A, m.B, m.C, rng.standard_normal((3, 2)), m.K, m.stabilized)
    path = tmp_path / "m.json"
    io.write_model(path, m, {"scheme": "cva", "lambda": 0.1})
    back, meta = io.read_model(path)
    for name in "ABCDK":
        assert np.array_equal(getattr(back, name), getattr(m, name))
    assert back.stabilized and meta == {"scheme": "cva", "lambda": 0.1}


def test_model_document_validation(tmp_path):
    doc = io.model_to_dict(random_model(2, 0))
    doc["A"] = doc["A"][:3]
    with pytest.raises(DataFormatError):
        io.model_from_dict(doc)
    del doc["B"]
    with pytest.raises(DataFormatError):
        io.model_from_dict(doc)


# --- cli -----------------------------------------------------------------

def test_generate_matches_truth(tmp_path, dataset):
    truth, meta = io.read_model(tmp_path / "truth.json")
    u, y = io.read_dataset(dataset)
    assert u.length == 500
    assert np.array_equal(truth.D, np.zeros((1, 1)))
    from wnnsid.sim_eval import generate_record

    rec = generate_record(truth, 500, 2.0, 7)
    assert np.array_equal(rec.u.data, u.data) and np.array_equal(rec.y.data, y.data)
    assert np.array_equal(y.data, simulate(truth, rec.u, rec.e).data)


def test_identify_writes_model_and_report(tmp_path, dataset, capsys):
    out, rep, trace = tmp_path / "m.json", tmp_path / "r.json", tmp_path / "trace.csv"
    code = run(["identify", "--data", dataset, "--split", 300, "--scheme", "cva",
                "--lambda-grid", "1e-2:1e2:4", "--out", out, "--report", rep, "--trace", trace, "--jobs", 1])
    assert code == 0
    assert "average fit" in capsys.readouterr().out
    report = json.loads(rep.read_text())
    model, meta = io.read_model(out)
    assert model.order == report["order"] and meta["lambda"] == report["lambda_used"]
    assert len(report["sweep"]) == 4
    lines = trace.read_text().splitlines()
    assert lines and all(len(line.split(",")) == 7 for line in lines)


def test_identify_is_deterministic(tmp_path, dataset):
    outs = []
    for k in range(2):
        out, rep = tmp_path / f"m{k}.json", tmp_path / f"r{k}.json"
        assert run(["identify", "--data", dataset, "--split", 300, "--scheme", "moesp",
                    "--lambda-grid", "1e-1:1e1:3", "--seed", 5, "--out", out, "--report", rep]) == 0
        outs.append((out.read_bytes(), rep.read_bytes()))
    assert outs[0] == outs[1]


@pytest.mark.parametrize(
    "extra",
    [
        ["--split", 5000],            # longer than the record
        ["--split", 20],              # too short for the window
        ["--split", 300, "--r", 400],  # window too large
    ],
)
def test_identify_range_errors_exit_one(tmp_path, dataset, extra):
    assert run(["identify", "--data", dataset, "--scheme", "cva", "--out", tmp_path / "m.json",
                "--report", tmp_path / "r.json", *extra]) == 1


def test_bad_flags_exit_one(tmp_path, dataset):
    assert run(["identify", "--data", dataset, "--split", 300, "--scheme", "bogus"]) == 1
    assert run(["identify", "--data", dataset, "--split", 300, "--scheme", "cva", "--lambda-grid", "1:2"]) == 1
    assert run(["generate", "--order", 0, "--sigma", 1, "--length", 10, "--seed", 1]) == 1
    assert run(["frobnicate"]) == 1


def test_unreadable_data_exits_one(tmp_path):
    bad = tmp_path / "bad.csv"
    bad.write_text("t,u1,y1\n0,1\n")
    assert run(["identify", "--data", bad, "--split", 1, "--scheme", "cva"]) == 1
    assert run(["identify", "--data", tmp_path / "missing.csv", "--split", 1, "--scheme", "cva"]) == 1


def test_nonconverged_identify_exits_two(tmp_path, dataset):
    assert run(["identify", "--data", dataset, "--split", 300, "--scheme", "cva", "--lambda-grid", "1e-1:1e-1:1",
                "--max-iter", 1, "--out", tmp_path / "m.json", "--report", tmp_path / "r.json"]) == 2


def test_denoise_command(tmp_path, dataset):
    out = tmp_path / "den.csv"
    assert run(["denoise", "--data", dataset, "--lambda", 1e3, "--scheme", "cva", "--out", out]) == 0
    u0, y0 = io.read_dataset(dataset)
    u1, y1 = io.read_dataset(out)
    assert np.array_equal(u0.data, u1.data)
    assert np.linalg.norm(y1.data - y0.data) <= 1e-3 * np.linalg.norm(y0.data)
    side = json.loads((tmp_path / "den.csv.json").read_text())
    assert side["nuclear_norm_after"] <= side["nuclear_norm_before"]
    assert side["iterations"] >= 1 and side["converged"]


def test_benchmark_random_and_deterministic(tmp_path, capsys):
    docs = []
    for k in range(2):
        out = tmp_path / f"b{k}.json"
        assert run(["benchmark", "--random", "--orders", "2,3", "--sigmas", "2", "--seeds", 1,
                    "--lambda-grid", "1e-1:1e1:3", "--n-val", 300, "--out", out]) == 0
        docs.append(out.read_bytes())
    assert docs[0] == docs[1]
    table = json.loads(docs[0])
    assert len(table["rows"]) == 2 and table["columns"] == ["baseline", "cva"]
    wins = sum(r["fits"]["cva"] > r["fits"]["baseline"] for r in table["rows"])
    assert table["beats_baseline_percent"]["cva"] == 100.0 * wins / 2
    text = capsys.readouterr().out
    assert "Average" in text and "% > baseline" in text


def test_benchmark_datasets(tmp_path, dataset):
    folder = tmp_path / "sets"
    folder.mkdir()
    (folder / "a.csv").write_bytes(dataset.read_bytes())
    out = tmp_path / "b.json"
    assert run(["benchmark", "--datasets", folder, "--split", 300, "--schemes", "cva,n4sid",
                "--lambda-grid", "1e-1:1e1:2", "--out", out]) == 0
    table = json.loads(out.read_text())
    assert table["columns"] == ["baseline", "cva", "n4sid"]
    assert table["rows"][0]["system"] == "a"


def test_benchmark_empty_directory_exits_one(tmp_path):
    (tmp_path / "empty").mkdir()
    assert run(["benchmark", "--datasets", tmp_path / "empty", "--split", 10]) == 1
