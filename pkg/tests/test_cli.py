from __future__ import annotations

import csv
import json

import numpy as np
import pytest

from tessforest.cli import main
from tessforest.tessellation import FORMAT_VERSION


def _cfg(tmp_path, name="run.json", **kw):
    doc = {"seed": 3, "dimension": 2, "lambda": 4.0, "M": 3}
    doc.update(kw)
    path = tmp_path / name
    path.write_text(json.dumps(doc))
    return str(path)


def _train(tmp_path, n=100, seed=0):
    g = np.random.default_rng(seed)
    X = g.random((n, 2))
    y = X.sum(axis=1) + 0.1 * g.standard_normal(n)
    path = tmp_path / "train.csv"
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["x1", "x2", "y"])
        for xi, yi in zip(X, y):
            w.writerow([repr(float(xi[0])), repr(float(xi[1])), repr(float(yi))])
    return str(path), X, y


def test_sample_is_deterministic(tmp_path):
    cfg = _cfg(tmp_path, phi={"kind": "isotropic"})
    for sub in ("a", "b"):
        assert main(["sample", "--config", cfg, "--out", str(tmp_path / sub), "--svg"]) == 0
    for f in ("partition.json", "partition.svg"):
        assert (tmp_path / "a" / f).read_bytes() == (tmp_path / "b" / f).read_bytes()
    doc = json.loads((tmp_path / "a" / "partition.json").read_text())
    assert doc["run"]["format_version"] == FORMAT_VERSION
    assert doc["run"]["config"]["seed"] == 3
    assert main(["sample", "--config", cfg, "--seed", "4", "--out", str(tmp_path / "c")]) == 0
    assert (tmp_path / "c" / "partition.json").read_bytes() != (tmp_path / "a" / "partition.json").read_bytes()


def test_small_lambda_has_few_cuts(tmp_path):
    cfg = _cfg(tmp_path, **{"lambda": 0.1})
    assert main(["sample", "--config", cfg, "--out", str(tmp_path)]) == 0
    doc = json.loads((tmp_path / "partition.json").read_text())
    assert len(doc["nodes"]) <= 5


def test_fit_predict_round_trip(tmp_path):
    data, X, y = _train(tmp_path)
    cfg = _cfg(tmp_path)
    assert main(["fit", "--config", cfg, "--data", data, "--out", str(tmp_path / "m")]) == 0
    model = str(tmp_path / "m" / "model.json")
    assert main(["predict", "--model", model, "--data", data, "--out", str(tmp_path / "p1")]) == 0
    assert main(["predict", "--model", model, "--data", data, "--out", str(tmp_path / "p2")]) == 0
    a = (tmp_path / "p1" / "predictions.csv").read_text()
    assert a == (tmp_path / "p2" / "predictions.csv").read_text()
    header = a.splitlines()[0].split(",")
    assert header == ["x1", "x2", "y", "y_hat"]
    from tessforest.forest import load_model

    direct = load_model(model).predict(X)
    got = np.array([float(r.split(",")[-1]) for r in a.splitlines()[1:]])
    assert np.array_equal(direct, got)


def test_single_cell_predicts_global_mean(tmp_path):
    data, X, y = _train(tmp_path)
    cfg = _cfg(tmp_path, M=1, **{"lambda": 1e-9})
    assert main(["fit", "--config", cfg, "--data", data, "--out", str(tmp_path)]) == 0
    xs = tmp_path / "q.csv"
    xs.write_text("x1,x2\n0.5,0.5\n0.1,0.9\n")
    assert main(["predict", "--model", str(tmp_path / "model.json"), "--data", str(xs), "--out", str(tmp_path)]) == 0
    rows = (tmp_path / "predictions.csv").read_text().splitlines()[1:]
    assert rows[0].split(",")[-1] == rows[1].split(",")[-1]
    assert float(rows[0].split(",")[-1]) == pytest.approx(y.mean(), rel=1e-12)


def test_exit_codes(tmp_path):
    data, _, _ = _train(tmp_path)
    assert main(["sample", "--config", _cfg(tmp_path, "neg.json", **{"lambda": -1.0})]) == 2
    assert main(["sample", "--config", _cfg(tmp_path, "unk.json", colour="red")]) == 2
    assert main(["sample", "--config", str(tmp_path / "missing.json")]) == 2
    assert main(["sample", "--config", _cfg(tmp_path, "cap.json", max_cells=2, **{"lambda": 40.0}),
                 "--out", str(tmp_path)]) == 3
    bad = tmp_path / "bad.csv"
    bad.write_text("x1,x2,y\n0.5,1.5,1.0\n")
    cfg = _cfg(tmp_path)
    assert main(["fit", "--config", cfg, "--data", str(bad), "--out", str(tmp_path)]) == 2
    hdr = tmp_path / "hdr.csv"
    hdr.write_text("a,b,c\n0.5,0.5,1.0\n")
    assert main(["fit", "--config", cfg, "--data", str(hdr), "--out", str(tmp_path)]) == 2
    assert main(["fit", "--config", cfg, "--data", data, "--out", str(tmp_path)]) == 0
    out = tmp_path / "outside.csv"
    out.write_text("x1,x2\n0.5,0.5\n2.0,0.5\n")
    assert main(["predict", "--model", str(tmp_path / "model.json"), "--data", str(out)]) == 2
    assert main(["nonsense"]) == 2
    assert main([]) == 2


def test_svg_needs_planar_box(tmp_path, capsys):
    cfg = _cfg(tmp_path, dimension=3, window={"kind": "box", "lower": [0, 0, 0], "upper": [1, 1, 1]})
    assert main(["sample", "--config", cfg, "--svg", "--out", str(tmp_path)]) == 2
    assert "svg" in capsys.readouterr().err.lower()


def test_format_version(capsys):
    assert main(["--format-version"]) == 0
    assert capsys.readouterr().out.strip() == str(FORMAT_VERSION)
    assert main(["--format-version", str(FORMAT_VERSION + 1), "sample", "--config", "x"]) == 2


def test_verify_geometry_suite(tmp_path):
    assert main(["verify", "geometry", "--out", str(tmp_path)]) == 0
    rep = json.loads((tmp_path / "verify_geometry.json").read_text())
    assert rep["format_version"] == FORMAT_VERSION and "config" in rep
    assert all(c["passed"] for c in rep["checks"])


def test_rates_command(tmp_path, monkeypatch):
    cfg = _cfg(tmp_path, experiment={"n_grid": [100, 200, 400, 800], "reps": 3, "n_test": 1000})
    monkeypatch.setenv("TESSFOREST_THREADS", "2")
    assert main(["rates", "--config", cfg, "--out", str(tmp_path / "a")]) == 0
    monkeypatch.delenv("TESSFOREST_THREADS")
    assert main(["rates", "--config", cfg, "--threads", "1", "--out", str(tmp_path / "b")]) == 0
    for f in ("rates_rows.csv", "rates_summary.json"):
        assert (tmp_path / "a" / f).read_bytes() == (tmp_path / "b" / f).read_bytes()
    rows = (tmp_path / "a" / "rates_rows.csv").read_text().splitlines()
    assert len(rows) == 1 + 4 * 3
    bad = _cfg(tmp_path, "bad.json", experiment={"n_grid": [100, 50, 400, 800]})
    assert main(["rates", "--config", bad, "--out", str(tmp_path)]) == 2
