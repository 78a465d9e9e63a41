"""Data ingestion, run configuration and artifact serialization.

Input panels are plain CSV with header ``date,market_rate,deposit_rate,volume``:
ISO month-end dates at strictly monthly spacing, rates as decimals per annum
(a percent flag divides by 100 on load), volumes in currency units. Outputs
are CSV for curves/tables and JSON for parameter sets; every artifact carries
the seed, the hash of the resolved configuration and the tool version, and a
command's artifacts are staged and committed together so failures never leave
partial outputs behind.
"""
from __future__ import annotations

import csv
import dataclasses
import datetime
import hashlib
import io as _stdio
import json
import math
import os
import tempfile
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import __version__
from .errors import ConfigError, DataError
from .levy_ou import Var1Params
from .nig import NigParams

__all__ = [
    "SeriesPanel",
    "RunConfig",
    "StressConfig",
    "EstimationConfig",
    "ingest",
    "load_config",
    "config_hash",
    "ArtifactSet",
    "params_to_dict",
    "params_from_dict",
]

_CSV_HEADER = ["date", "market_rate", "deposit_rate", "volume"]


@dataclass(frozen=True)
class SeriesPanel:
    """Aligned monthly observations of market rate, deposit rate and volume.

    states holds the in-model coordinates: market rate in levels, deposit
    rate in levels or logs per the transform flag, volume always in logs.
    """

    dates: tuple[datetime.date, ...]
    market_rate: np.ndarray
    deposit_rate: np.ndarray
    volume: np.ndarray
    deposit_rate_transform: str = "log"
    floored: tuple[int, ...] = ()
    dt: float = 1.0 / 12.0

    def __post_init__(self):
        n = len(self.dates)
        for name in ("market_rate", "deposit_rate", "volume"):
            arr = np.asarray(getattr(self, name), dtype=float)
            if arr.shape != (n,) or not np.all(np.isfinite(arr)):
                raise DataError(f"{name} must be a finite vector matching the dates")
            object.__setattr__(self, name, arr)
        if n < 2:
            raise DataError("panel needs at least two observations")
        for d0, d1 in zip(self.dates, self.dates[1:]):
            months = (d1.year - d0.year) * 12 + (d1.month - d0.month)
            if months == 0:
                raise DataError(f"duplicated month in panel at {d1.isoformat()}")
            if months != 1:
                raise DataError(f"missing month(s) between {d0.isoformat()} and {d1.isoformat()}")
        if np.any(self.volume <= 0.0):
            raise DataError("volumes must be strictly positive")
        if self.deposit_rate_transform not in ("level", "log"):
            raise DataError("deposit_rate_transform must be 'level' or 'log'")
        if self.deposit_rate_transform == "log" and np.any(self.deposit_rate <= 0.0):
            raise DataError("log transform requires positive deposit rates "
                            "(apply a rate floor on ingestion)")
        dep = np.log(self.deposit_rate) if self.deposit_rate_transform == "log" \
            else self.deposit_rate.copy()
        states = np.column_stack([self.market_rate, dep, np.log(self.volume)])
        states.flags.writeable = False
        object.__setattr__(self, "states", states)

    def __len__(self) -> int:
        return len(self.dates)


@dataclass(frozen=True)
class EstimationConfig:
    enforce_signs: bool = True
    optimizer: str = "hybrid"
    max_iter: int = 20000
    restarts: int = 2


@dataclass(frozen=True)
class StressConfig:
    outflow_fraction: float = 0.25
    alpha: float = 0.999
    horizon_months: int = 6
    mc_paths: int = 20000
    confirm_paths: int = 100000
    tolerance: float = 0.005


@dataclass(frozen=True)
class RunConfig:
    data_csv: str = "data/synthetic_panel.csv"
    out_dir: str = "out"
    family: str = "nig"
    deposit_rate_transform: str = "log"
    rates_in_percent: bool = False
    rate_floor: Optional[float] = None
    seed: int = 20240801
    n_paths: int = 100000
    horizon_steps: int = 120
    workers: int = 1
    alphas: tuple[float, ...] = (0.95, 0.99)
    es_alpha: float = 0.975
    table_horizons_years: tuple[float, ...] = (1, 3, 5, 10)
    estimation: EstimationConfig = field(default_factory=EstimationConfig)
    stress: StressConfig = field(default_factory=StressConfig)

    def __post_init__(self):
        if self.family not in ("gaussian", "nig"):
            raise ConfigError("family must be 'gaussian' or 'nig'")
        if self.deposit_rate_transform not in ("level", "log"):
            raise ConfigError("deposit_rate_transform must be 'level' or 'log'")
        if self.rate_floor is not None and not self.rate_floor > 0.0:
            raise ConfigError("rate_floor must be > 0 when given")
        if not 0 <= int(self.seed) < 2 ** 64:
            raise ConfigError("seed must fit in 64 bits")
        if self.n_paths < 1 or self.horizon_steps < 1 or self.workers < 1:
            raise ConfigError("n_paths, horizon_steps and workers must be >= 1")
        for a in tuple(self.alphas) + (self.es_alpha,):
            if not 0.5 < a < 1.0:
                raise ConfigError("confidence levels must lie in (0.5, 1)")
        object.__setattr__(self, "alphas", tuple(float(a) for a in self.alphas))
        object.__setattr__(self, "table_horizons_years",
                           tuple(float(h) for h in self.table_horizons_years))


def _build_nested(cls, data: dict, where: str):
    fields = {f.name: f for f in dataclasses.fields(cls)}
    unknown = set(data) - set(fields)
    if unknown:
        raise ConfigError(f"unknown config key(s) in {where}: {sorted(unknown)}")
    kwargs = {}
    for name, value in data.items():
        if dataclasses.is_dataclass(fields[name].type) or name in ("estimation", "stress"):
            sub = {"estimation": EstimationConfig, "stress": StressConfig}[name]
            if not isinstance(value, dict):
                raise ConfigError(f"config section '{name}' must be an object")
            kwargs[name] = _build_nested(sub, value, name)
        elif isinstance(value, list):
            kwargs[name] = tuple(value)
        else:
            kwargs[name] = value
    try:
        return cls(**kwargs)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc


def load_config(path: str, **overrides) -> RunConfig:
    """Load a JSON run configuration; unknown keys are rejected. Keyword
    overrides (seed, n_paths, out_dir, family, workers) replace file values."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            raw = json.load(fh)
    except FileNotFoundError as exc:
        raise ConfigError(f"config file not found: {path}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file is not valid JSON: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError("config root must be a JSON object")
    for key, value in overrides.items():
        if value is not None:
            raw[key] = value
    return _build_nested(RunConfig, raw, "config")


def config_dict(cfg: RunConfig) -> dict:
    return dataclasses.asdict(cfg)


def config_hash(cfg: RunConfig) -> str:
    canon = json.dumps(config_dict(cfg), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode("utf-8")).hexdigest()


def ingest(csv_path: str, config: RunConfig) -> SeriesPanel:
    """Parse and validate a monthly panel CSV into a SeriesPanel.

    Applies the percent scaling and the deposit-rate floor from the config;
    floored rows are recorded in the panel's provenance metadata.
    """
    try:
        with open(csv_path, "r", encoding="utf-8", newline="") as fh:
            reader = csv.reader(fh)
            try:
                header = next(reader)
            except StopIteration:
                raise DataError(f"empty data file: {csv_path}") from None
            rows = list(reader)
    except FileNotFoundError as exc:
        raise DataError(f"data file not found: {csv_path}") from exc
    if [h.strip() for h in header] != _CSV_HEADER:
        raise DataError(f"unexpected CSV header {header!r}; expected {_CSV_HEADER}")

    dates, market, deposit, volume = [], [], [], []
    for ln, row in enumerate(rows, start=2):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != 4:
            raise DataError(f"line {ln}: expected 4 columns, got {len(row)}")
        try:
            dates.append(datetime.date.fromisoformat(row[0].strip()))
            market.append(float(row[1]))
            deposit.append(float(row[2]))
            volume.append(float(row[3]))
        except ValueError as exc:
            raise DataError(f"line {ln}: {exc}") from exc

    market = np.array(market)
    deposit = np.array(deposit)
    volume = np.array(volume)
    if config.rates_in_percent:
        market = market / 100.0
        deposit = deposit / 100.0

    floored: list[int] = []
    if config.deposit_rate_transform == "log":
        bad = deposit <= 0.0
        if bad.any():
            if config.rate_floor is None:
                first = dates[int(np.argmax(bad))]
                raise DataError(
                    f"deposit rate <= 0 at {first.isoformat()} under the log "
                    "transform; set rate_floor to floor such observations")
            floored = [int(i) for i in np.nonzero(bad)[0]]
            deposit = np.where(bad, config.rate_floor, deposit)

    return SeriesPanel(dates=tuple(dates), market_rate=market,
                       deposit_rate=deposit, volume=volume,
                       deposit_rate_transform=config.deposit_rate_transform,
                       floored=tuple(floored))


# ---------------------------------------------------------------------------
# artifact serialization


def _fmt(x) -> str:
    # shortest round-trip decimal form, stable across runs
    return repr(float(x))


class ArtifactSet:
    """Staged artifact writer: files are built in memory and committed
    atomically (temp file + rename per artifact, all at the end)."""

    def __init__(self, out_dir: str, provenance: dict):
        self.out_dir = out_dir
        self.provenance = dict(provenance)
        self._files: list[tuple[str, str]] = []

    def add_text(self, name: str, text: str) -> None:
        self._files.append((name, text))

    def add_json(self, name: str, obj: dict) -> None:
        doc = dict(self.provenance)
        doc.update(obj)
        self.add_text(name, json.dumps(doc, indent=2, sort_keys=True) + "\n")

    def add_csv(self, name: str, header: list[str], rows) -> None:
        buf = _stdio.StringIO()
        for key, value in self.provenance.items():
            buf.write(f"# {key}={value}\n")
        buf.write(",".join(header) + "\n")
        for row in rows:
            cells = []
            for c in row:
                if isinstance(c, str):
                    cells.append(c)
                elif isinstance(c, (int, np.integer)):
                    cells.append(str(int(c)))
                else:
                    cells.append(_fmt(c))
            buf.write(",".join(cells) + "\n")
        self.add_text(name, buf.getvalue())

    def commit(self) -> list[str]:
        os.makedirs(self.out_dir, exist_ok=True)
        written = []
        for name, text in self._files:
            path = os.path.join(self.out_dir, name)
            fd, tmp = tempfile.mkstemp(dir=self.out_dir, prefix=f".{name}.")
            try:
                with os.fdopen(fd, "w", encoding="utf-8") as fh:
                    fh.write(text)
                os.replace(tmp, path)
            except BaseException:
                if os.path.exists(tmp):
                    os.unlink(tmp)
                raise
            written.append(path)
        return written


def params_to_dict(p: Var1Params) -> dict:
    doc = {
        "dt": p.dt,
        "family": p.noise_family,
        "a": p.a.tolist(),
        "B": p.B.tolist(),
        "S": p.S.tolist(),
        "sigma": p.sigma.tolist(),
    }
    if p.noise_family == "nig":
        doc["nig"] = [{"alpha": q.alpha, "beta": q.beta, "delta": q.delta, "mu": q.mu}
                      for q in p.nig]
    return doc


def params_from_dict(doc: dict) -> Var1Params:
    try:
        nig = None
        if doc["family"] == "nig":
            nig = tuple(NigParams(alpha=q["alpha"], beta=q["beta"],
                                  delta=q["delta"], mu=q["mu"])
                        for q in doc["nig"])
        return Var1Params(a=np.array(doc["a"]), B=np.array(doc["B"]),
                          S=np.array(doc["S"]), sigma=np.array(doc["sigma"]),
                          noise_family=doc["family"], nig=nig, dt=float(doc["dt"]))
    except (KeyError, TypeError, ValueError) as exc:
        raise DataError(f"malformed parameter document: {exc}") from exc


def read_json_artifact(path: str, what: str) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return json.load(fh)
    except FileNotFoundError as exc:
        raise DataError(f"missing {what} artifact: {path} "
                        "(run the upstream command first)") from exc
    except json.JSONDecodeError as exc:
        raise DataError(f"corrupt {what} artifact {path}: {exc}") from exc
