"""Flat ``key = value`` experiment configuration.

Blank lines and lines starting with ``#`` are ignored.  Every error names the
file and line (or the offending override).  Recognised keys and defaults are
listed in :data:`DEFAULTS`; ``out_dir`` defaults to ``$CHLAB_OUT`` when that
variable is set.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass
from pathlib import Path

from chlab.evolution import ModelSpec, SolverConfig
from chlab.inflation_lab import ExperimentConfig

ENV_OUT = "CHLAB_OUT"

DEFAULTS = {
    "model": "ch",
    "b": "",
    "geometry": "torus",
    "M": "",
    "N": "4096",
    "p": "2",
    "r": "2",
    "epsilon": "1",
    "K_list": "6,8,10,12",
    "slope_cap": "1000",
    "horizon": "10",
    "out_dir": "chlab_out",
    "cfl_safety": "0.5",
    "dt_floor": "1e-10",
    "sample_interval": "0.01",
    "margin": "0.05",
    "inflation_threshold": "100",
    "tail_tol": "1e-6",
    "workers": "1",
    "seed": "lacunary",
    "amplitude": "50",
    "K": "",
}

SEED_KINDS = ("lacunary", "sine", "zero", "novikov")
MODELS = {"ch": 2.0, "dp": 3.0, "b-family": None, "novikov": None}


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    """Parsed configuration: the experiment plus the single-run extras."""

    experiment: ExperimentConfig
    seed: str
    amplitude: float
    K: int
    values: dict

    def echo(self) -> str:
        return "".join(f"{k} = {self.values[k]}\n" for k in DEFAULTS)


def _read_file(path: Path) -> list[tuple[str, str, str]]:
    entries = []
    for lineno, raw in enumerate(path.read_text().splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        where = f"{path}:{lineno}"
        if "=" not in line:
            raise ConfigError(f"{where}: expected 'key = value', got {raw!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        entries.append((key, value, where))
    return entries


def _override_entries(overrides) -> list[tuple[str, str, str]]:
    if overrides is None:
        return []
    if isinstance(overrides, dict):
        return [(k, str(v), f"override {k!r}") for k, v in overrides.items()]
    entries = []
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"override {item!r}: expected key=value")
        key, value = (s.strip() for s in item.split("=", 1))
        entries.append((key, value, f"override {item!r}"))
    return entries


def _float(value: str, where: str, key: str) -> float:
    try:
        v = float(value)
    except ValueError:
        raise ConfigError(f"{where}: {key} must be a number, got {value!r}") from None
    if math.isnan(v):
        raise ConfigError(f"{where}: {key} must not be nan")
    return v


def _int(value: str, where: str, key: str) -> int:
    try:
        return int(value)
    except ValueError:
        raise ConfigError(f"{where}: {key} must be an integer, got {value!r}") from None


def parse_config(path=None, overrides=None) -> RunConfig:
    """Read ``path`` (optional), apply ``overrides`` on top, validate.

    ``overrides`` is a list of ``key=value`` strings or a dict.
    """
    values = dict(DEFAULTS)
    env_out = os.environ.get(ENV_OUT)
    if env_out:
        values["out_dir"] = env_out
    where = {k: "default" for k in values}
    entries = []
    if path is not None:
        path = Path(path)
        if not path.is_file():
            raise ConfigError(f"{path}: no such config file")
        entries += _read_file(path)
    entries += _override_entries(overrides)
    for key, value, loc in entries:
        if key not in DEFAULTS:
            raise ConfigError(f"{loc}: unknown key {key!r}")
        values[key] = value
        where[key] = loc
    return _build(values, where)


def _build(values: dict, where: dict) -> RunConfig:
    def num(key):
        return _float(values[key], where[key], key)

    def integer(key):
        return _int(values[key], where[key], key)

    def fail(key, msg):
        raise ConfigError(f"{where[key]}: {key} {msg}")

    model_name = values["model"].lower()
    if model_name not in MODELS:
        fail("model", f"must be one of {', '.join(MODELS)}, got {values['model']!r}")
    if model_name == "novikov":
        model = ModelSpec.novikov()
        values["b"] = ""
    else:
        b = MODELS[model_name]
        if values["b"]:
            b_set = num("b")
            if b is not None and b_set != b:
                fail("b", f"conflicts with model={model_name} (b={b:g})")
            b = b_set
        if b is None:
            b = 2.0
        if not 1.0 < b <= 3.0:
            fail("b", f"must lie in (1, 3], got {b:g}")
        model = ModelSpec("b-family", b)
        values["b"] = repr(b)

    geometry = values["geometry"].lower()
    if geometry not in ("torus", "line"):
        fail("geometry", f"must be torus or line, got {values['geometry']!r}")
    if values["M"]:
        M = integer("M")
    else:
        M = 1 if geometry == "torus" else 256
        values["M"] = str(M)
    if M < 1:
        fail("M", f"must be a positive integer, got {M}")
    if geometry == "torus" and M != 1:
        fail("M", "must be 1 for the torus")
    N = integer("N")
    if N < 16 or N & (N - 1):
        fail("N", f"must be a power of two >= 16, got {N}")

    p, r = num("p"), num("r")
    if not p >= 1:
        fail("p", f"must lie in [1, inf], got {values['p']}")
    if not r > 1:
        fail("r", f"must exceed 1 (the lacunary construction needs sum k^(-2r/(1+r)) "
                  f"finite and sum k^(-2/(1+r)) divergent), got {values['r']}")
    eps = num("epsilon")
    if not eps > 0:
        fail("epsilon", f"must be positive, got {eps}")
    try:
        K_list = tuple(int(s) for s in values["K_list"].split(",") if s.strip())
    except ValueError:
        fail("K_list", f"must be comma-separated integers, got {values['K_list']!r}")
    if not K_list or min(K_list) < 1:
        fail("K_list", "must list positive integers")
    if any(b <= a for a, b in zip(K_list, K_list[1:])):
        fail("K_list", f"must be strictly increasing, got {values['K_list']!r}")

    slope_cap = num("slope_cap")
    if slope_cap < 100:
        fail("slope_cap", f"must be >= 100, got {slope_cap:g}")
    horizon = num("horizon")
    dt_floor = num("dt_floor")
    sample_interval = num("sample_interval")
    cfl = num("cfl_safety")
    for key, v in (("horizon", horizon), ("dt_floor", dt_floor),
                   ("sample_interval", sample_interval), ("cfl_safety", cfl)):
        if not v > 0:
            fail(key, f"must be positive, got {v:g}")
    margin = num("margin")
    if margin < 0:
        fail("margin", f"must be non-negative, got {margin:g}")
    workers = integer("workers")
    if workers < 1:
        fail("workers", f"must be >= 1, got {workers}")
    seed = values["seed"].lower()
    if seed not in SEED_KINDS:
        fail("seed", f"must be one of {', '.join(SEED_KINDS)}, got {values['seed']!r}")
    K = integer("K") if values["K"] else K_list[-1]
    values["K"] = str(K)

    solver = SolverConfig(cfl_safety=cfl, slope_cap=slope_cap, dt_floor=dt_floor,
                          sample_interval=sample_interval, horizon=horizon)
    exp = ExperimentConfig(
        model=model, geometry=geometry, N=N, M=M, p=p, r=r, eps=eps, K_list=K_list,
        solver=solver, out_dir=Path(values["out_dir"]), margin=margin,
        inflation_threshold=num("inflation_threshold"), tail_tol=num("tail_tol"),
        workers=workers,
    )
    return RunConfig(exp, seed, num("amplitude"), K, values)
