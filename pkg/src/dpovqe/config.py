"""TOML experiment configuration.

Example::

    [data]
    source = "synthetic"      # "synthetic" | "csv" | "zero"
    assets = 3                # synthetic only
    days = 120
    seed = 11
    # path = "prices.csv"     # csv only, relative to this file
    delta_t_days = 30

    [problem]
    preset = "xs"             # optional; explicit keys below override it
    gamma = 1000.0

    [run]
    method = "vqe"            # vqe | exhaustive | sa | sae | random
    ansatz = "real_amplitudes"
    optimizer = "de"
    seed = 0

    [output]
    directory = "out"
"""

from __future__ import annotations

import sys
from dataclasses import dataclass, field, fields
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .circuits import ANSATZ_FAMILIES
from .errors import ConfigError
from .problem import DpoConfig

# (n_t, n_a, n_r, K)
PRESETS = {
    "xs": (2, 3, 1, 2),
    "s": (5, 4, 1, 3),
    "m": (7, 4, 1, 3),
    "l": (4, 7, 2, 5),
    "xl": (4, 7, 3, 12),
    "xxl": (4, 7, 4, 25),
}

METHODS = ("vqe", "exhaustive", "sa", "sae", "random")


@dataclass(frozen=True)
class DataSpec:
    source: str = "synthetic"
    path: Path | None = None
    assets: int | None = None
    days: int | None = None
    seed: int = 0
    delta_t_days: int = 30


@dataclass(frozen=True)
class RunSpec:
    method: str = "vqe"
    ansatz: str = "real_amplitudes"
    optimizer: str = "de"
    reps: int = 3
    ranges: tuple[int, ...] = (1, 3)
    reps_per_block: int = 3
    pop_size: int = 6
    generations: int = 50
    elitist_pool: int | None = None
    estimator: str = "exact"
    estimator_shots: int | None = None
    shots: int | None = None
    seed: int = 0
    cg_max_iter: int = 500
    sa_sweeps: int = 200
    sa_restarts: int = 10
    sae_time: float | None = None
    sae_steps: int | None = None
    qubit_cap: int = 24


@dataclass(frozen=True)
class ExperimentConfig:
    data: DataSpec
    problem: DpoConfig
    run: RunSpec = field(default_factory=RunSpec)
    output_dir: Path = Path(".")
    preset: str | None = None


def _take(section: dict, cls, name: str) -> dict:
    allowed = {f.name for f in fields(cls)}
    unknown = set(section) - allowed
    if unknown:
        raise ConfigError(f"[{name}] has unknown key(s): {', '.join(sorted(unknown))}")
    return dict(section)


def _problem(section: dict) -> tuple[DpoConfig, str | None]:
    section = dict(section)
    preset = section.pop("preset", None)
    keys = {"n_t", "n_a", "n_r", "k_budget", "gamma", "nu", "rho", "initial_holdings"}
    unknown = set(section) - keys
    if unknown:
        raise ConfigError(f"[problem] has unknown key(s): {', '.join(sorted(unknown))}")
    values: dict = {}
    if preset is not None:
        if preset not in PRESETS:
            raise ConfigError(f"unknown preset {preset!r}; choose from {', '.join(PRESETS)}")
        values.update(zip(("n_t", "n_a", "n_r", "k_budget"), PRESETS[preset]))
    values.update(section)
    missing = {"n_t", "n_a", "n_r", "k_budget"} - set(values)
    if missing:
        raise ConfigError(f"[problem] needs a preset or the key(s): {', '.join(sorted(missing))}")
    try:
        return DpoConfig(**values), preset
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"[problem] {exc}") from exc


def parse_config(doc: dict, base_dir: Path = Path(".")) -> ExperimentConfig:
    unknown = set(doc) - {"data", "problem", "run", "output"}
    if unknown:
        raise ConfigError(f"unknown section(s): {', '.join(sorted(unknown))}")
    if "problem" not in doc:
        raise ConfigError("missing [problem] section")
    problem, preset = _problem(doc["problem"])

    data = _take(doc.get("data", {}), DataSpec, "data")
    if data.get("path") is not None:
        data["path"] = (base_dir / data["path"]).resolve()
    data = DataSpec(**data)
    if data.source not in ("synthetic", "csv", "zero"):
        raise ConfigError(f"[data] source must be synthetic, csv or zero, got {data.source!r}")
    if data.source == "csv" and data.path is None:
        raise ConfigError("[data] source = 'csv' needs a path")
    if data.delta_t_days < 2:
        raise ConfigError("[data] delta_t_days must be >= 2")

    run = _take(doc.get("run", {}), RunSpec, "run")
    if "ranges" in run:
        run["ranges"] = tuple(int(x) for x in run["ranges"])
    run = RunSpec(**run)
    if run.method not in METHODS:
        raise ConfigError(f"[run] method must be one of {', '.join(METHODS)}, got {run.method!r}")
    if run.ansatz not in ANSATZ_FAMILIES:
        raise ConfigError(f"[run] ansatz must be one of {', '.join(ANSATZ_FAMILIES)}, got {run.ansatz!r}")
    if run.optimizer not in ("de", "cg"):
        raise ConfigError(f"[run] optimizer must be de or cg, got {run.optimizer!r}")
    if run.estimator not in ("exact", "shots"):
        raise ConfigError(f"[run] estimator must be exact or shots, got {run.estimator!r}")
    if run.pop_size < 5:
        raise ConfigError("[run] pop_size must be >= 5")

    out = doc.get("output", {})
    if set(out) - {"directory"}:
        raise ConfigError(f"[output] has unknown key(s): {', '.join(sorted(set(out) - {'directory'}))}")
    output_dir = (base_dir / out.get("directory", ".")).resolve()
    return ExperimentConfig(data, problem, run, output_dir, preset)


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    try:
        with open(path, "rb") as fh:
            doc = tomllib.load(fh)
    except FileNotFoundError as exc:
        raise ConfigError(f"config file not found: {path}") from exc
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    try:
        return parse_config(doc, path.parent)
    except TypeError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
