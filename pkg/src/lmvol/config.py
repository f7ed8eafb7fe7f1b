"""Run configuration: INI or JSON files mapped onto one nested-dict schema.

INI layout (every section optional except ``model`` and ``kappa``)::

    [model]
    sigma = 1.0
    beta = 0.3
    mu = 0.0
    tau = 0.0

    [kappa]
    family = power_law        ; zero | power_law | power_log_law | exponential | tabulated
    c = 1.0
    alpha = 0.75
    atoms = 2.0:0.5, 3.0:0.1  ; location:weight pairs

    [lambda]
    atoms = balance           ; one atom at 0 carrying the mass of kappa
    family = zero

JSON uses the same sections with ``atoms`` as ``[[location, weight], ...]``
and the density under ``"density": {"family": ..., ...}``.  Tabulated
densities take ``t``/``k`` lists and an optional ``tail_index``.
"""

from __future__ import annotations

import configparser
import copy
import json
from pathlib import Path

from .errors import ConfigError, LmvolError
from .measures import DELAY, HALF_LINE, density_from_dict, measure_from_dict, total_mass
from .moments import ModelConfig

DEFAULTS = {
    "model": {"sigma": 1.0, "beta": 0.0, "mu": 0.0, "tau": 0.0},
    # step/horizon: kernel quadrature; T/h: moment-equation grid
    "numerics": {"step": 0.01, "horizon": None, "T": 200.0, "h": 0.05, "eps": 1e-9, "balance_tol": None},
    "analyze": {"x_min": 0.01, "x_max": 100.0, "points": 201, "spacing": "log"},
    "gamma": {"deltas": [0.0, 1.0, 5.0, 10.0, 100.0, 1000.0, 10000.0]},
    "simulation": {
        "T": 50.0,
        "h": 0.01,
        "paths": 1000,
        "seed": 12345,
        "s0": 1.0,
        "stride": 10,
        "at": None,  # estimator time, defaults to T
        "lags": [1.0, 5.0],
        "efficiency": [1.0, 5.0],  # delta, Delta
        "record_paths": 0,
    },
    "discrete": {
        "family": "power_law_seq",
        "sigma": None,  # None: take from [model]
        "beta": None,
        "noise": "normal",
        "steps": 1000,
        "paths": 1000,
        "seed": 12345,
        "record_paths": 1,
    },
    "tolerances": {"se_mult": 3.0, "var_rel": 0.05, "cov_rel": 0.10, "isometry_rel": 0.05},
    "report": {"checks": ["scheme", "limit"]},
}

_LIST_KEYS = {"deltas", "lags", "efficiency", "t", "k", "values"}
_STR_LIST_KEYS = {"checks"}
_INT_KEYS = {"paths", "seed", "stride", "steps", "record_paths", "points"}
_STR_KEYS = {"family", "noise", "spacing"}


def _parse_scalar(key: str, raw: str):
    raw = raw.strip()
    if raw == "" or raw.lower() in ("none", "null"):
        return None
    if key in _STR_KEYS:
        return raw
    if key in _STR_LIST_KEYS:
        return [v.strip() for v in raw.split(",") if v.strip()]
    if key in _INT_KEYS:
        return int(raw)
    if key in _LIST_KEYS:
        return [float(v) for v in raw.replace(";", ",").split(",") if v.strip()]
    return float(raw)


def _parse_atoms(raw):
    if raw is None:
        return []
    if isinstance(raw, str):
        raw = raw.strip()
        if raw == "":
            return []
        if raw == "balance":
            return "balance"
        out = []
        for item in raw.split(","):
            loc, _, w = item.partition(":")
            out.append([float(loc), float(w)])
        return out
    return [[float(l), float(w)] for l, w in raw]


def _measure_section(sec: dict) -> dict:
    """Normalize a measure section to {"atoms": ..., "density": {...}}."""
    sec = dict(sec)
    atoms = _parse_atoms(sec.pop("atoms", None))
    if "density" in sec:
        density = dict(sec.pop("density"))
    else:
        density = {"family": sec.pop("family", "zero"), **sec}
    if density.get("family") == "tabulated" and "tail_index" not in density:
        density["tail_index"] = None
    return {"atoms": atoms, "density": density}


def read_ini(text: str) -> dict:
    cp = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    cp.optionxform = str
    cp.read_string(text)
    raw = {}
    for name in cp.sections():
        sec = {}
        for key, val in cp.items(name):
            if name in ("kappa", "lambda") and key == "atoms":
                sec[key] = val
            else:
                sec[key] = _parse_scalar(key, val)
        raw[name] = sec
    return raw


def normalize(raw: dict) -> dict:
    if "model" not in raw or "kappa" not in raw:
        raise ConfigError("config needs [model] and [kappa] sections", "config")
    cfg = copy.deepcopy(DEFAULTS)
    for name, sec in raw.items():
        if name in ("kappa", "lambda"):
            continue
        cfg.setdefault(name, {})
        cfg[name].update({k: v for k, v in sec.items() if v is not None or k in ("horizon", "at")})
    cfg["kappa"] = _measure_section(raw["kappa"])
    cfg["lambda"] = _measure_section(raw.get("lambda", {"atoms": "balance"}))
    return cfg


def load(path: str | Path) -> dict:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}", "config") from None
    try:
        if path.suffix.lower() == ".json":
            raw = json.loads(text)
        else:
            raw = read_ini(text)
    except (ValueError, configparser.Error) as exc:
        raise ConfigError(f"cannot parse {path.name}: {exc}", "config") from None
    return normalize(raw)


def build_measures(cfg: dict):
    """(lambda, kappa) from a normalized config."""
    tau = float(cfg["model"].get("tau", 0.0))
    try:
        kappa = measure_from_dict(cfg["kappa"], HALF_LINE)
        lam_spec = dict(cfg["lambda"])
        if lam_spec.get("atoms") == "balance":
            own = measure_from_dict({"density": lam_spec["density"]}, DELAY, tau)
            lam_spec["atoms"] = [[0.0, total_mass(kappa) - total_mass(own)]]
        lam = measure_from_dict(lam_spec, DELAY, tau)
    except LmvolError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"bad measure specification: {exc}", "config") from None
    return lam, kappa


def build_model(cfg: dict) -> ModelConfig:
    lam, kappa = build_measures(cfg)
    m, num = cfg["model"], cfg["numerics"]
    return ModelConfig(
        sigma=float(m["sigma"]),
        beta=float(m["beta"]),
        lam=lam,
        kappa=kappa,
        mu=float(m.get("mu", 0.0)),
        horizon=num.get("horizon"),
        step=float(num["step"]),
        balance_tol=num.get("balance_tol"),
        eps=float(num["eps"]),
    )


def density_spec(cfg: dict):
    return density_from_dict(cfg["kappa"]["density"])


def build_discrete(cfg: dict, model: ModelConfig | None = None):
    """DiscreteModel from the [discrete] section; sigma/beta fall back to [model]."""
    from .discrete import DiscreteModel, FiniteSeq, FromKernel, PowerLawSeq

    d = cfg["discrete"]
    sigma = d.get("sigma")
    beta = d.get("beta")
    sigma = float(cfg["model"]["sigma"] if sigma is None else sigma)
    beta = float(cfg["model"]["beta"] if beta is None else beta)
    family = d.get("family", "power_law_seq")
    try:
        if family == "power_law_seq":
            seq = PowerLawSeq(float(d["c"]), float(d["alpha"]))
        elif family == "finite_seq":
            seq = FiniteSeq(tuple(d["values"]))
        elif family == "from_kernel":
            seq = FromKernel(model if model is not None else build_model(cfg), float(d["h"]))
        else:
            raise ConfigError(f"unknown sequence family {family!r}", "config")
    except KeyError as exc:
        raise ConfigError(f"[discrete] {family} needs parameter {exc}", "config") from None
    return DiscreteModel(sigma, beta, seq, d.get("noise", "normal"))
