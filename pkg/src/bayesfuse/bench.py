"""JSON sweep configs, sweep execution and CSV output for the benchmark CLI."""

from __future__ import annotations

import csv
import json
import os
from dataclasses import dataclass, replace
from typing import Any

from .errors import ParseError, ValidationError
from .fusion import METHODS
from .models import Config, Model1Config, Model2Config, run_experiment

COMMON_FIELDS = {"model", "k", "sigma2", "n_prior", "mc_samples", "trials", "seed", "methods", "sweep"}
MODEL_FIELDS = {1: {"m", "n_gen"}, 2: {"sigma0_2", "dof_hyper"}}
INT_FIELDS = {"k", "m", "n_gen", "n_prior", "mc_samples", "trials", "seed", "dof_hyper"}
FLOAT_FIELDS = {"sigma2", "sigma0_2"}
DEFAULTS = {"mc_samples": 100, "trials": 10000, "seed": 0, "sigma2": 1.0}

CSV_COLUMNS = (
    "model", "k", "m", "sigma2", "sigma0_2", "n_prior", "mc_samples",
    "trials", "seed", "method", "mse", "mse_stderr", "nmse",
)


@dataclass
class SweepSpec:
    model: int
    base: dict[str, Any]
    param: str
    values: list
    output: str | None = None
    threads: int = 1

    def point(self, value) -> Config:
        fields = dict(self.base)
        fields[self.param] = value
        cls = Model1Config if self.model == 1 else Model2Config
        try:
            return cls(**fields)
        except ValidationError as exc:
            raise ValidationError(f"sweep {self.param}={value!r}: {exc}") from None

    def points(self) -> list[Config]:
        return [self.point(v) for v in self.values]

    def override(self, name: str, value) -> "SweepSpec":
        """Copy of this spec with one base field replaced (validated)."""
        if name == self.param:
            raise ValidationError(f"{name} is the swept parameter and cannot be overridden")
        spec = replace(self, base=dict(self.base, **{name: _coerce(name, value)}))
        spec.points()
        return spec

    def with_seed(self, seed: int) -> "SweepSpec":
        return self.override("seed", seed)


@dataclass
class ResultRow:
    model: int
    k: int
    m: int
    sigma2: float
    sigma0_2: float | None
    n_prior: int
    mc_samples: int
    trials: int
    seed: int
    method: str
    mse: float
    mse_stderr: float
    nmse: float


def _coerce(name: str, value):
    if isinstance(value, bool):
        raise ValidationError(f"{name}: expected a number, got {value!r}")
    if name in INT_FIELDS:
        if not isinstance(value, (int, float)) or int(value) != value:
            raise ValidationError(f"{name}: expected an integer, got {value!r}")
        return int(value)
    if name in FLOAT_FIELDS:
        if not isinstance(value, (int, float)):
            raise ValidationError(f"{name}: expected a number, got {value!r}")
        return float(value)
    raise ValidationError(f"{name} cannot be swept")


def parse_config(text: str) -> SweepSpec:
    """Parse and validate a sweep config JSON document.

    Raises :class:`ParseError` for malformed JSON and
    :class:`ValidationError` for schema or constraint violations.
    """
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    if not isinstance(doc, dict):
        raise ValidationError("config must be a JSON object")
    model = doc.get("model")
    if model not in (1, 2) or isinstance(model, bool):
        raise ValidationError("model: must be 1 or 2")
    allowed = COMMON_FIELDS | MODEL_FIELDS[model]
    unknown = sorted(set(doc) - allowed)
    if unknown:
        raise ValidationError(f"{unknown[0]}: not a valid field for model {model}")
    if "k" not in doc:
        raise ValidationError("k: required")

    base: dict[str, Any] = dict(DEFAULTS)
    for name, value in doc.items():
        if name in ("model", "sweep"):
            continue
        if name == "methods":
            if not isinstance(value, list) or not value or any(v not in METHODS for v in value):
                raise ValidationError(f"methods: must be a non-empty list drawn from {list(METHODS)}")
            base["methods"] = tuple(m for m in METHODS if m in value)
            continue
        base[name] = _coerce(name, value)

    sweep = doc.get("sweep")
    if not isinstance(sweep, dict) or set(sweep) != {"param", "values"}:
        raise ValidationError('sweep: must be an object {"param": ..., "values": [...]}')
    param, values = sweep["param"], sweep["values"]
    if param not in (INT_FIELDS | FLOAT_FIELDS) - {"seed"} or param not in allowed:
        raise ValidationError(f"sweep.param: {param!r} is not a sweepable field for model {model}")
    if not isinstance(values, list) or not values:
        raise ValidationError("sweep.values: must be a non-empty list")
    values = [_coerce_sweep(param, v) for v in values]

    spec = SweepSpec(model, base, param, values)
    spec.points()
    return spec


def _coerce_sweep(param: str, value):
    try:
        return _coerce(param, value)
    except ValidationError as exc:
        raise ValidationError(f"sweep.values: {exc}") from None


def load_config(path: str | os.PathLike) -> SweepSpec:
    with open(path, encoding="utf-8") as f:
        return parse_config(f.read())


def run_sweep(spec: SweepSpec, workers: int | None = None, progress=None) -> list[ResultRow]:
    """Run one experiment per sweep value; rows come out in sweep then method order."""
    workers = spec.threads if workers is None else workers
    rows = []
    for cfg in spec.points():
        try:
            result = run_experiment(cfg, workers=workers)
        except Exception as exc:
            raise RuntimeError(f"{spec.param}={getattr(cfg, spec.param)!r}: {exc}") from exc
        for method in METHODS:
            if method not in cfg.methods:
                continue
            s = result[method]
            rows.append(ResultRow(
                model=cfg.model, k=cfg.k, m=cfg.m, sigma2=float(cfg.sigma2),
                sigma0_2=None if cfg.model == 1 else float(cfg.sigma0_2),
                n_prior=cfg.n_prior, mc_samples=cfg.mc_samples, trials=cfg.trials,
                seed=cfg.seed, method=method, mse=s.mse, mse_stderr=s.mse_stderr, nmse=s.nmse,
            ))
        if progress is not None:
            progress(cfg, result)
    return rows


def _render(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_csv(rows: list[ResultRow], path: str | os.PathLike) -> None:
    """Write rows with a fixed header; floats use shortest round-trip form."""
    if not rows:
        raise ValueError("no rows to write")
    with open(path, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)
        for row in rows:
            writer.writerow([_render(getattr(row, c)) for c in CSV_COLUMNS])


def read_csv(path: str | os.PathLike) -> list[ResultRow]:
    conv = {"model": int, "k": int, "m": int, "n_prior": int, "mc_samples": int,
            "trials": int, "seed": int, "method": str}
    rows = []
    with open(path, encoding="utf-8", newline="") as f:
        for rec in csv.DictReader(f):
            vals = {}
            for c in CSV_COLUMNS:
                raw = rec[c]
                if c in conv:
                    vals[c] = conv[c](raw)
                else:
                    vals[c] = None if raw == "" else float(raw)
            rows.append(ResultRow(**vals))
    return rows


def format_table(rows: list[ResultRow], param: str) -> str:
    header = f"{param:>10}  {'method':<12} {'mse':>12} {'stderr':>10} {'nmse':>8}"
    lines = [header, "-" * len(header)]
    for row in rows:
        value = getattr(row, param, None)
        lines.append(
            f"{_render(value):>10}  {row.method:<12} {row.mse:12.5g} {row.mse_stderr:10.3g} {row.nmse:8.4f}"
        )
    return "\n".join(lines)
