import json

import numpy as np
import pandas as pd
import pytest

from scalereg.cli import EXIT_DEGENERATE, EXIT_INPUT, EXIT_OK, RunConfig, main
from scalereg.ingestion import load_csv


@pytest.fixture
def synth_file(tmp_path):
    out = tmp_path / "synth"
    argv = ["synth", "--kind", "setting1", "--length", "2048", "--d", "0.3", "--seed", "1",
            "--out-dir", str(out)]
    assert main(argv) == EXIT_OK
    return out / "synth.csv"


def roles(path):
    return ["--input", str(path), "--timestamp-col", "timestamp",
            "--y-col", "y", "--x1-col", "x1", "--x2-col", "x2"]


def meta(out):
    return json.loads((out / "metadata.json").read_text())


def test_synth_round_trips_through_loader(synth_file):
    ds = load_csv(synth_file, timestamp_col="timestamp")
    assert ds.names == ["y", "x1", "x2"] and len(ds) == 2048
    m = meta(synth_file.parent)
    assert m["seed"] == 1 and m["summary"]["generator"] == "numpy PCG64"
    assert m["versions"]["numpy"] == np.__version__


def test_synth_bmfs_contamination_recorded(tmp_path):
    argv = ["synth", "--kind", "bmfs", "--depth", "15", "--threshold", "1e-5",
            "--out-dir", str(tmp_path)]
    assert main(argv) == EXIT_OK
    assert meta(tmp_path)["summary"]["replaced"] == 16384


def test_dfa_command(synth_file, tmp_path, capsys):
    out = tmp_path / "dfa"
    assert main(["dfa", *roles(synth_file), "--scales", "10:200:8", "--out-dir", str(out)]) == EXIT_OK
    table = pd.read_csv(out / "dfa_all.csv")
    assert list(table.columns[:3]) == ["scale", "F2_y", "F_y"]
    assert len(table) == 8 and table["scale"].iloc[0] == 10
    np.testing.assert_allclose(table["F_x1"] ** 2, table["F2_x1"])
    slope = meta(out)["summary"]["all"]["slope"]["x1"]
    assert 0.6 < slope < 1.0
    assert "dfa: wrote" in capsys.readouterr().out


def test_dfa_constant_column_has_no_slope(tmp_path):
    path = tmp_path / "flat.csv"
    r = np.random.default_rng(0)
    pd.DataFrame({"a": r.normal(size=200), "b": np.full(200, 2.5)}).to_csv(path, index=False)
    out = tmp_path / "out"
    assert main(["dfa", "--input", str(path), "--scales", "10:50:4", "--out-dir", str(out)]) == EXIT_OK
    assert meta(out)["summary"]["all"]["slope"]["b"] is None


def test_regress_csv_and_json_agree(synth_file, tmp_path):
    base = ["regress", *roles(synth_file), "--scales", "10:400:10", "--season", "winter"]
    assert main([*base, "--out-dir", str(tmp_path / "c")]) == EXIT_OK
    assert main([*base, "--format", "json", "--out-dir", str(tmp_path / "j")]) == EXIT_OK
    csv = pd.read_csv(tmp_path / "c" / "regress_winter.csv")
    js = pd.DataFrame(json.loads((tmp_path / "j" / "regress_winter.json").read_text()))
    assert list(csv.columns) == list(js.columns)
    np.testing.assert_allclose(csv.to_numpy(float), js.to_numpy(float), rtol=1e-12)
    assert np.all(np.abs(csv["beta1"] - 1) < 0.2)
    assert np.all(csv["beta1_ci_lower"] < csv["beta1"])


def test_significance_is_reproducible(synth_file, tmp_path):
    base = ["significance", *roles(synth_file), "--scales", "10:200:5", "--reps", "100",
            "--seed", "7"]
    assert main([*base, "--out-dir", str(tmp_path / "a")]) == EXIT_OK
    assert main([*base, "--out-dir", str(tmp_path / "b")]) == EXIT_OK
    a = (tmp_path / "a" / "significance_all.csv").read_text()
    assert a == (tmp_path / "b" / "significance_all.csv").read_text()
    table = pd.read_csv(tmp_path / "a" / "significance_all.csv")
    assert table["significant1"].all()  # true beta1 = 1 is far from zero
    assert {"pdcca_y_x1", "pdcca_critical", "significant_x1_x2"} <= set(table.columns)
    pdf = pd.read_csv(tmp_path / "a" / "t_null_pdf_all.csv")
    assert set(pdf["scale"]) == set(table["scale"])


def test_seed_from_environment(synth_file, tmp_path, monkeypatch):
    monkeypatch.setenv("SCALEREG_SEED", "42")
    out = tmp_path / "env"
    argv = ["significance", *roles(synth_file), "--scales", "10:100:3", "--reps", "100",
            "--out-dir", str(out)]
    assert main(argv) == EXIT_OK
    assert meta(out)["seed"] == 42


def test_partial_command(synth_file, tmp_path):
    out = tmp_path / "p"
    assert main(["partial", *roles(synth_file), "--out-dir", str(out)]) == EXIT_OK
    table = pd.read_csv(out / "partial_all.csv", keep_default_na=False)
    assert table["pair"].tolist() == ["y~x1", "y~x2", "x1~x2"]
    assert table["control"].tolist() == ["x2", "x1", "y"]
    assert (table["n"] == 2048).all()


def test_partial_collinear_is_noted(tmp_path):
    path = tmp_path / "c.csv"
    r = np.random.default_rng(0)
    a, b = r.normal(size=(2, 100))
    pd.DataFrame({"y": a, "x1": 2 * a, "x2": b}).to_csv(path, index=False)
    out = tmp_path / "o"
    argv = ["partial", "--input", str(path), "--y-col", "y", "--x1-col", "x1", "--x2-col", "x2",
            "--out-dir", str(out)]
    assert main(argv) == EXIT_OK
    table = pd.read_csv(out / "partial_all.csv")
    assert table["note"].str.contains("collinear").all()


def test_exit_codes(synth_file, tmp_path):
    out = str(tmp_path / "x")
    assert main(["regress", *roles(synth_file)[:-2], "--x2-col", "nope", "--out-dir", out]) == EXIT_INPUT
    assert main(["regress", "--input", str(tmp_path / "missing.csv"), "--y-col", "a",
                 "--x1-col", "b", "--x2-col", "c", "--out-dir", out]) == EXIT_INPUT
    assert main(["regress", *roles(synth_file), "--scales", "10:5000:5", "--out-dir", out]) == EXIT_INPUT
    assert main(["significance", *roles(synth_file), "--reps", "50", "--out-dir", out]) == EXIT_INPUT
    assert main(["regress", *roles(synth_file), "--season", "summer", "--out-dir", out]) == EXIT_INPUT
    with pytest.raises(SystemExit) as exc:
        main(["regress", "--format", "xml"])
    assert exc.value.code == 2

    path = tmp_path / "degenerate.csv"
    r = np.random.default_rng(0)
    x = r.normal(size=300)
    pd.DataFrame({"y": r.normal(size=300), "x1": x, "x2": 3 * x}).to_csv(path, index=False)
    argv = ["regress", "--input", str(path), "--y-col", "y", "--x1-col", "x1", "--x2-col", "x2",
            "--scales", "10:100:4", "--out-dir", out]
    assert main(argv) == EXIT_DEGENERATE


def test_run_config_validation():
    with pytest.raises(ValueError, match="distinct"):
        RunConfig("regress", input="f", y_col="a", x1_col="a", x2_col="b")
    with pytest.raises(ValueError):
        RunConfig("regress", input="f", alpha=0.7)
    with pytest.raises(ValueError, match="--input"):
        RunConfig("dfa")
