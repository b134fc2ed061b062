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
# core/serialization.py

# %%
# Dev setup
# %load_ext autoreload
# %autoreload 2

# %%
import csv
import io
import json
from dataclasses import fields
from pathlib import Path
from typing import Any, Dict, List, Mapping, Optional, Sequence, Union

import numpy as np

from laplace_knn.core.config import EstimatorSettings
from laplace_knn.core.errors import ConfigurationError, ResultsIOError
from laplace_knn.core.experiment import DEFAULT_SIZES, ExperimentConfig, RateFit
from laplace_knn.core.functionals import parse_functional
from laplace_knn.core.knn import PointSet
from laplace_knn.core.metrics import SizeSummary

TABLE_COLUMNS = ("m", "mse", "bias2", "var", "stderr")
FIT_COLUMNS = ("slope", "intercept", "r_squared", "n_points")

Results = Union[Sequence[SizeSummary], RateFit]


# %%
def experiment_config_to_json(config: ExperimentConfig) -> Dict[str, Any]:
    """
    Example:
        >>> cfg = ExperimentConfig(parse_functional("kl"), "tgauss:3", "tgauss:3,2", d=3, k=5, l=5, runs=10)
        >>> raw = experiment_config_to_json(cfg)
        >>> (raw["functional"], raw["density2"], raw["sizes"][0])
        ('kl', 'tgauss:3,2', 200)
    """
    out: Dict[str, Any] = {}
    for f in fields(ExperimentConfig):
        val = getattr(config, f.name)
        if f.name == "functional":
            val = val.name
        elif f.name == "settings":
            val = {s.name: getattr(val, s.name) for s in fields(EstimatorSettings)}
        elif isinstance(val, tuple):
            val = list(val)
        out[f.name] = val
    return out


def experiment_config_from_json(obj: Mapping[str, Any]) -> ExperimentConfig:
    """
    Parse an ExperimentConfig from a JSON-like dict and validate it.

    Example:
        >>> cfg = experiment_config_from_json({"functional": "entropy", "density": "uniform:1", "d": 2, "k": 3})
        >>> (cfg.k, cfg.runs, cfg.sizes == DEFAULT_SIZES)
        (3, 100, True)
        >>> try:
        ...     experiment_config_from_json({"density": "uniform:1"})
        ... except ConfigurationError as e:
        ...     print(e)
        Invalid experiment JSON: missing functional or density
    """
    if not isinstance(obj, Mapping):
        raise ConfigurationError("Invalid experiment JSON: expected an object")
    if "functional" not in obj or "density" not in obj:
        raise ConfigurationError("Invalid experiment JSON: missing functional or density")
    known = {f.name for f in fields(ExperimentConfig)}
    unknown = sorted(set(obj) - known)
    if unknown:
        raise ConfigurationError(f"Invalid experiment JSON: unknown key(s) {unknown}")

    kwargs = dict(obj)
    kwargs["functional"] = parse_functional(str(obj["functional"]))
    if "settings" in obj:
        if not isinstance(obj["settings"], Mapping):
            raise ConfigurationError("Invalid experiment JSON: settings must be an object")
        kwargs["settings"] = EstimatorSettings.from_mapping(obj["settings"])
    for key in ("sizes", "variants"):
        if key in obj:
            if not isinstance(obj[key], (list, tuple)):
                raise ConfigurationError(f"Invalid experiment JSON: {key} must be a list")
            kwargs[key] = tuple(obj[key])
    try:
        return ExperimentConfig(**kwargs)
    except TypeError as e:
        raise ConfigurationError(f"Invalid experiment JSON: {e}")


def load_experiment_config(path: Union[str, Path]) -> ExperimentConfig:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise ResultsIOError(str(path), e)
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigurationError(f"Invalid experiment JSON in {path}: {e}")
    return experiment_config_from_json(raw)


# %%
def points_from_csv(text: str) -> PointSet:
    """
    One point per row, one column per coordinate; a non-numeric first row is a header.

    Example:
        >>> points_from_csv("x,y\\n0,1\\n2,3\\n").points.tolist()
        [[0.0, 1.0], [2.0, 3.0]]
    """
    rows = [r for r in csv.reader(io.StringIO(text)) if r and any(c.strip() for c in r)]
    if rows:
        try:
            [float(c) for c in rows[0]]
        except ValueError:
            rows = rows[1:]
    if not rows:
        raise ConfigurationError("point file holds no rows")
    width = len(rows[0])
    for i, r in enumerate(rows):
        if len(r) != width:
            raise ConfigurationError(f"point row {i} has {len(r)} columns, expected {width}")
    try:
        arr = np.array([[float(c) for c in r] for r in rows], dtype=float)
    except ValueError as e:
        raise ConfigurationError(f"non-numeric coordinate in point file: {e}")
    return PointSet(arr)


def points_to_csv(points: PointSet) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    for row in points.points:
        w.writerow([repr(float(c)) for c in row])
    return buf.getvalue()


def read_points(path: Union[str, Path]) -> PointSet:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise ResultsIOError(str(path), e)
    return points_from_csv(text)


def write_points(points: PointSet, path: Union[str, Path]) -> None:
    _write(path, points_to_csv(points))


# %%
def table_to_csv(table: Sequence[SizeSummary]) -> str:
    """
    CSV with header m,mse,bias2,var,stderr, plus a variant column when rows
    carry variants. Floats are written with repr, so parsing is bit-exact.

    Example:
        >>> table_to_csv([])
        'm,mse,bias2,var,stderr\\n'
        >>> table_to_csv([SizeSummary(200, 0.5, 0.25, 0.25, 0.01)])
        'm,mse,bias2,var,stderr\\n200,0.5,0.25,0.25,0.01\\n'
    """
    labelled = any(r.variant is not None for r in table)
    cols = TABLE_COLUMNS + (("variant",) if labelled else ())
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(cols)
    for r in table:
        row = [str(r.m), repr(r.mse), repr(r.bias2), repr(r.var), repr(r.stderr)]
        if labelled:
            row.append(r.variant or "")
        w.writerow(row)
    return buf.getvalue()


def table_from_csv(text: str) -> List[SizeSummary]:
    reader = csv.DictReader(io.StringIO(text))
    cols = tuple(reader.fieldnames or ())
    if cols not in (TABLE_COLUMNS, TABLE_COLUMNS + ("variant",)):
        raise ConfigurationError(f"unexpected table header {list(cols)}")
    out = []
    for i, raw in enumerate(reader, start=2):
        try:
            out.append(SizeSummary(
                m=int(raw["m"]),
                mse=float(raw["mse"]),
                bias2=float(raw["bias2"]),
                var=float(raw["var"]),
                stderr=float(raw["stderr"]),
                variant=raw.get("variant") or None,
            ))
        except (TypeError, ValueError) as e:
            raise ConfigurationError(f"table line {i}: {e}")
    return out


def fit_to_csv(fit: RateFit) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(FIT_COLUMNS)
    w.writerow([repr(fit.slope), repr(fit.intercept), repr(fit.r_squared), str(fit.n_points)])
    return buf.getvalue()


def results_to_json(
    results: Results,
    *,
    config: Optional[ExperimentConfig] = None,
    fits: Optional[Mapping[str, RateFit]] = None,
) -> str:
    from laplace_knn import __version__

    doc: Dict[str, Any] = {"version": __version__}
    if isinstance(results, RateFit):
        doc["fit"] = results.to_json()
    else:
        doc["columns"] = list(TABLE_COLUMNS)
        doc["rows"] = [r.to_json() for r in results]
    if fits:
        doc["fits"] = {v: f.to_json() for v, f in sorted(fits.items())}
    if config is not None:
        doc["config"] = experiment_config_to_json(config)
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def _write(path: Union[str, Path], text: str) -> None:
    try:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    except OSError as e:
        raise ResultsIOError(str(path), e)


def emit_results(
    results: Results,
    fmt: str,
    path: Union[str, Path],
    *,
    config: Optional[ExperimentConfig] = None,
    fits: Optional[Mapping[str, RateFit]] = None,
) -> None:
    """Write a sweep table or a rate fit as ``csv`` or ``json``."""
    if fmt == "csv":
        text = fit_to_csv(results) if isinstance(results, RateFit) else table_to_csv(results)
    elif fmt == "json":
        text = results_to_json(results, config=config, fits=fits)
    else:
        raise ConfigurationError(f"unknown results format {fmt!r}; use csv or json")
    _write(path, text)

# %%
