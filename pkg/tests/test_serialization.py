# ---
# jupyter:
#   jupytext:
#     formats: ipynb,py:percent
#     text_representation:
#       extension: .py
#       format_name: percent
#       format_version: '1.3'
#       jupytext_version: 1.19.1
#   kernelspec:
#     display_name: Python (miniforge)
#     language: python
#     name: miniforge-base
# ---

# %%
# Dev setup
# %load_ext autoreload
# %autoreload 2

# %%
import json

import numpy as np
import pytest

from laplace_knn.core.config import EstimatorSettings
from laplace_knn.core.errors import ConfigurationError, ResultsIOError
from laplace_knn.core.experiment import ExperimentConfig, RateFit
from laplace_knn.core.functionals import parse_functional
from laplace_knn.core.knn import PointSet
from laplace_knn.core.metrics import SizeSummary
from laplace_knn.core.serialization import (
    TABLE_COLUMNS,
    emit_results,
    experiment_config_from_json,
    experiment_config_to_json,
    fit_to_csv,
    load_experiment_config,
    points_from_csv,
    points_to_csv,
    read_points,
    results_to_json,
    table_from_csv,
    table_to_csv,
    write_points,
)


def _config():
    return ExperimentConfig(
        parse_functional("renyi-div:3"), "tgauss:3", "tgauss:3,2", d=3, k=5, l=5,
        sizes=(100, 200, 400), runs=7, seed=3, variants=("untruncated", "truncated"),
        sigma=2.0, settings=EstimatorSettings(epsilon=0.02),
    )


# %%
# ---- tests for core/serialization.py ----

def test_table_csv_is_bit_exact():
    rows = [
        SizeSummary(200, 0.1 + 0.2, 1 / 3, 0.1 + 0.2 - 1 / 3, 2 ** -40),
        SizeSummary(290, 1e-300, 5e-324, 0.0, 123456.789),
    ]
    back = table_from_csv(table_to_csv(rows))
    assert back == rows


def test_table_csv_with_variants():
    rows = [SizeSummary(100, 0.5, 0.25, 0.25, 0.01, "untruncated"), SizeSummary(100, 0.4, 0.2, 0.2, 0.01, "truncated")]
    text = table_to_csv(rows)
    assert text.splitlines()[0] == ",".join(TABLE_COLUMNS) + ",variant"
    assert table_from_csv(text) == rows


def test_empty_and_single_row_tables():
    assert table_from_csv(table_to_csv([])) == []
    one = [SizeSummary(50, 1.0, 1.0, 0.0, 0.0)]
    assert table_from_csv(table_to_csv(one)) == one


def test_table_header_is_checked():
    with pytest.raises(ConfigurationError, match="header"):
        table_from_csv("m,mse\n1,2\n")
    with pytest.raises(ConfigurationError, match="line 2"):
        table_from_csv("m,mse,bias2,var,stderr\nten,1,1,0,0\n")


def test_config_json_round_trip():
    cfg = _config()
    raw = experiment_config_to_json(cfg)
    assert raw["functional"] == "renyi-div:3"
    assert raw["settings"]["epsilon"] == 0.02
    back = experiment_config_from_json(json.loads(json.dumps(raw)))
    assert back == cfg


def test_config_json_defaults_and_errors():
    cfg = experiment_config_from_json({"functional": "entropy", "density": "uniform:1", "d": 1, "k": 2})
    assert cfg.variants == ("untruncated",) and cfg.seed_mode == "per-run"
    with pytest.raises(ConfigurationError, match="missing functional"):
        experiment_config_from_json({"functional": "entropy"})
    with pytest.raises(ConfigurationError, match="unknown key"):
        experiment_config_from_json({"functional": "entropy", "density": "uniform:1", "kk": 2})
    with pytest.raises(ConfigurationError, match="must be a list"):
        experiment_config_from_json({"functional": "entropy", "density": "uniform:1", "sizes": 100})
    with pytest.raises(ConfigurationError, match="Unknown settings"):
        experiment_config_from_json({"functional": "entropy", "density": "uniform:1", "settings": {"eps": 1}})


def test_load_experiment_config(tmp_path):
    path = tmp_path / "sweep.json"
    path.write_text(json.dumps(experiment_config_to_json(_config())), encoding="utf-8")
    assert load_experiment_config(path) == _config()
    bad = tmp_path / "bad.json"
    bad.write_text("{not json", encoding="utf-8")
    with pytest.raises(ConfigurationError, match="Invalid experiment JSON"):
        load_experiment_config(bad)
    with pytest.raises(ResultsIOError):
        load_experiment_config(tmp_path / "missing.json")


def test_points_csv(tmp_path):
    pts = PointSet(np.array([[0.1, -2.5], [1e-9, 3.0]]))
    path = tmp_path / "pts.csv"
    write_points(pts, path)
    assert np.array_equal(read_points(path).points, pts.points)
    assert points_from_csv("x\n1\n2\n3\n").points.shape == (3, 1)
    assert np.array_equal(points_from_csv(points_to_csv(pts)).points, pts.points)


def test_points_csv_errors():
    with pytest.raises(ConfigurationError, match="no rows"):
        points_from_csv("x,y\n")
    with pytest.raises(ConfigurationError, match="columns"):
        points_from_csv("1,2\n3\n")
    with pytest.raises(ConfigurationError, match="non-numeric"):
        points_from_csv("1,2\n3,x\n")


def test_results_json():
    rows = [SizeSummary(100, 0.5, 0.25, 0.25, 0.01)]
    fit = RateFit(0.9, -1.0, 0.99, 3)
    doc = json.loads(results_to_json(rows, config=_config(), fits={"default": fit}))
    assert doc["columns"] == list(TABLE_COLUMNS)
    assert doc["rows"] == [{"m": 100, "mse": 0.5, "bias2": 0.25, "var": 0.25, "stderr": 0.01}]
    assert doc["fits"]["default"]["slope"] == 0.9
    assert doc["config"]["density2"] == "tgauss:3,2"
    assert "version" in doc
    assert json.loads(results_to_json(fit))["fit"]["n_points"] == 3


def test_fit_csv():
    text = fit_to_csv(RateFit(0.5, 0.25, 1.0, 4))
    assert text == "slope,intercept,r_squared,n_points\n0.5,0.25,1.0,4\n"


def test_emit_results(tmp_path):
    rows = [SizeSummary(100, 0.5, 0.25, 0.25, 0.01)]
    out = tmp_path / "table.csv"
    emit_results(rows, "csv", out)
    assert table_from_csv(out.read_text(encoding="utf-8")) == rows
    emit_results(rows, "json", tmp_path / "table.json")
    assert json.loads((tmp_path / "table.json").read_text(encoding="utf-8"))["rows"][0]["m"] == 100
    with pytest.raises(ConfigurationError, match="unknown results format"):
        emit_results(rows, "xml", tmp_path / "t.xml")
    with pytest.raises(ResultsIOError):
        emit_results(rows, "csv", tmp_path / "no" / "such" / "dir.csv")
