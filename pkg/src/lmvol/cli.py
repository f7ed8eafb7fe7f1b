"""Command-line front end.

    lmvol SUBCOMMAND --config FILE [--out DIR] [--seed N] [--paths N]
                     [--step H] [--horizon T] [--format csv|json] [--threads N]

Every run writes its result files into ``--out``: tables as CSV (or JSON
with ``--format json``), the summary as ``<subcommand>.summary.json`` and
``<subcommand>.manifest.json`` (config snapshot, seed, version, parameters,
output files, timings).  The JSON summary is also printed on stdout.

``--step``/``--horizon`` override the time grid (h, T) for solve, simulate
and report, the quadrature step/horizon for analyze and gamma, and
``--horizon`` is the step count for discrete.

Exit codes: 0 ok, 2 config error, 3 numerical precondition, 4 a check
failed its tolerance.  Errors go to stderr as ``{"error": {...}}``.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from . import config as cfgmod
from .autocov import asymptotic_gamma, classify_memory, gamma_curve
from .discrete import discrete_memory, discrete_stationarity, simulate_discrete, square_sum
from .errors import (
    ConfigError,
    Divergent,
    Finite,
    Infinite,
    LmvolError,
    NonStationary,
    Stationary,
    ToleranceError,
    UnbalancedError,
    UnsupportedRegimeError,
)
from .kernel import kernel_table, l1_norm
from .measures import Balanced, first_moment_class, validate_balance
from .moments import resolvent, solve_second_moment
from .simulate import (
    SimConfig,
    empirical_autocov,
    empirical_moments,
    returns_efficiency,
    sample_cov,
    sample_moments,
    scheme_cov,
    scheme_second_moment,
    simulate,
)

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_TOLERANCE = 0, 2, 3, 4
_EXIT = {"config": EXIT_CONFIG, "numerical-precondition": EXIT_NUMERIC, "tolerance-failure": EXIT_TOLERANCE}

COMMANDS = ("validate", "analyze", "solve", "gamma", "simulate", "discrete", "report")


# -- serialization ----------------------------------------------------------


def plain(x):
    """JSON-safe copy: numpy scalars to Python, NaN/inf to None, verdicts to dicts."""
    if isinstance(x, dict):
        return {str(k): plain(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [plain(v) for v in x]
    if isinstance(x, np.ndarray):
        return [plain(v) for v in x.tolist()]
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        return x if math.isfinite(x) else None
    if hasattr(x, "value") and isinstance(getattr(x, "value"), str):  # enums
        return x.value
    return x


def dumps(obj) -> str:
    return json.dumps(plain(obj), indent=2, sort_keys=True, allow_nan=False) + "\n"


def _cell(v):
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v)).lower()
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return "%.17g" % float(v)
    return "" if v is None else str(v)


class Run:
    """Collects outputs and timings for one subcommand invocation."""

    def __init__(self, command: str, args, cfg: dict):
        self.command = command
        self.out = Path(args.out)
        self.fmt = args.format
        self.cfg = cfg
        self.seed = args.seed
        self.params: dict = {}
        self.outputs: list = []
        self.timings: dict = {}
        self.out.mkdir(parents=True, exist_ok=True)

    def timed(self, label, fn, *a, **kw):
        t0 = time.perf_counter()
        res = fn(*a, **kw)
        self.timings[label] = time.perf_counter() - t0
        return res

    def table(self, name: str, columns, rows):
        if self.fmt == "json":
            path = self.out / f"{name}.json"
            path.write_text(dumps([dict(zip(columns, r)) for r in rows]))
        else:
            path = self.out / f"{name}.csv"
            with path.open("w", newline="") as fh:
                w = csv.writer(fh, lineterminator="\n")
                w.writerow(columns)
                for r in rows:
                    w.writerow([_cell(v) for v in r])
        self.outputs.append(path.name)

    def summary(self, name: str, obj):
        path = self.out / f"{name}.summary.json"
        path.write_text(dumps(obj))
        self.outputs.append(path.name)
        sys.stdout.write(dumps(obj))

    def manifest(self):
        m = {
            "tool": "lmvol",
            "version": __version__,
            "subcommand": self.command,
            "config": self.cfg,
            "seed": self.seed,
            "params": self.params,
            "outputs": self.outputs,
            "timings": self.timings,
        }
        (self.out / f"{self.command}.manifest.json").write_text(dumps(m))


# -- helpers ----------------------------------------------------------------


def verdict_dict(v) -> dict:
    if isinstance(v, Stationary):
        return {"stationary": True, "margin": v.margin, "reason": None, "near_critical": v.near_critical}
    if isinstance(v, NonStationary):
        return {"stationary": False, "margin": v.margin, "reason": v.reason, "near_critical": False}
    raise TypeError(v)


def integral_dict(v) -> dict:
    if isinstance(v, Finite):
        return {"finite": True, "value": v.value}
    if isinstance(v, (Divergent, Infinite)):
        return {"finite": False, "value": None, "reason": v.reason or "divergent"}
    return {"finite": None, "value": None, "reason": getattr(v, "reason", "undetermined")}


def memory_of(model):
    if not isinstance(model.verdict, Stationary):
        return None
    return classify_memory(model).value


def check(name, theory, empirical, tolerance, se=None, note=None) -> dict:
    ok = theory is not None and empirical is not None and abs(empirical - theory) <= tolerance
    d = {"name": name, "theory": theory, "empirical": empirical, "tolerance": tolerance, "pass": bool(ok)}
    if se is not None:
        d["se"] = se
    if note:
        d["note"] = note
    return d


# -- subcommands --------------------------------------------------------------


def cmd_validate(run: Run, cfg: dict) -> int:
    lam, kappa = cfgmod.build_measures(cfg)
    tol = cfg["numerics"].get("balance_tol")
    bal = validate_balance(lam, kappa, tol)
    out = {"balanced": isinstance(bal, Balanced), "discrepancy": bal.discrepancy}
    if not out["balanced"]:
        out.update(stationary=None, margin=None, memory=None)
        run.summary("validate", out)
        raise UnbalancedError(f"mass(lambda) - mass(kappa) = {bal.discrepancy:.3e}", "cli.validate")
    model = cfgmod.build_model(cfg)
    v = verdict_dict(model.verdict)
    out.update(v)
    out["l2_sq"] = integral_dict(model.l2)
    out["first_moment"] = integral_dict(first_moment_class(kappa))
    out["memory"] = memory_of(model)
    run.summary("validate", out)
    return EXIT_OK


def _grid(a: dict) -> np.ndarray:
    n = int(a["points"])
    if a.get("spacing", "log") == "log":
        return np.geomspace(float(a["x_min"]), float(a["x_max"]), n)
    return np.linspace(float(a["x_min"]), float(a["x_max"]), n)


def cmd_analyze(run: Run, cfg: dict) -> int:
    model = cfgmod.build_model(cfg)
    x = _grid(cfg["analyze"])
    run.table("kernel", ("x", "K"), zip(x, kernel_table(model.kernel, x)))
    l1 = run.timed("l1", l1_norm, model.kernel, model.horizon, model.step)
    l2 = model.l2
    run.params.update(step=model.step, horizon=model.horizon or model.kernel.default_horizon())
    out = {
        "l1": integral_dict(l1)["value"],
        "l2_sq": integral_dict(l2)["value"],
        "verdicts": {
            "l1": integral_dict(l1),
            "l2": integral_dict(l2),
            "stationarity": verdict_dict(model.verdict),
            "first_moment": integral_dict(first_moment_class(model.kappa)),
            "memory": memory_of(model),
        },
    }
    run.summary("analyze", out)
    return EXIT_OK


def cmd_solve(run: Run, cfg: dict) -> int:
    model = cfgmod.build_model(cfg)
    T, h = float(cfg["numerics"]["T"]), float(cfg["numerics"]["h"])
    run.params.update(T=T, h=h)
    sol = run.timed("solve", solve_second_moment, model, T, h)
    r = run.timed("resolvent", resolvent, model, T, h)
    run.table("moments", ("t", "EV2", "resolvent"), zip(sol.grid, sol.values, r))
    v = verdict_dict(sol.verdict)
    run.summary("solve", {"margin": v["margin"], "limit": sol.limit, "verdict": v, "T": T, "h": h, "EV2_T": sol.values[-1]})
    return EXIT_OK


def cmd_gamma(run: Run, cfg: dict) -> int:
    model = cfgmod.build_model(cfg)
    deltas = cfg["gamma"]["deltas"]
    curve = run.timed("gamma", gamma_curve, model, deltas)
    regime = None
    asym = []
    for d, g in zip(curve.deltas, curve.values):
        try:
            a = asymptotic_gamma(model, d) if d > 0 else None
            regime = a.regime if a else regime
        except UnsupportedRegimeError:
            a = None
        av = a.value if a else math.nan
        asym.append((d, g, av, g / av if a and av != 0 else math.nan))
    run.table("gamma", ("delta", "gamma", "asymptote", "ratio"), asym)
    out = {"memory_class": curve.memory_class.value, "c_factor": curve.c_factor, "regime": regime}
    run.summary("gamma", out)
    return EXIT_OK


def _sim_config(cfg: dict, model) -> SimConfig:
    s = cfg["simulation"]
    return SimConfig(model, float(s["T"]), float(s["h"]), int(s["paths"]), int(s["seed"]), float(s["s0"]), int(s["stride"]))


def _estimators(cfg: dict, ens, sim: SimConfig) -> dict:
    s = cfg["simulation"]
    at = float(s["at"]) if s.get("at") is not None else sim.T
    mom = empirical_moments(ens, at)
    auto = []
    for lag in s["lags"]:
        c = empirical_autocov(ens, at - lag, lag)
        auto.append({"t": at - lag, "delta": lag, "cov": c.cov, "se": c.se})
    eff = []
    e = s["efficiency"]
    if e:
        small, big = float(e[0]), float(e[1])
        start = sim.T - small - big
        c = returns_efficiency(ens, small, big, start)
        eff.append({"t": start, "delta": small, "Delta": big, "corr": c.corr, "se": c.se})
    xT = sample_moments(ens.X[-1])
    return {
        "t": at,
        "mean_V": mom.mean,
        "se_mean_V": mom.se_mean,
        "var_V": mom.var,
        "se_var_V": mom.se_var,
        "autocov": auto,
        "efficiency": eff,
        "X_T": {"mean": xT.mean, "se_mean": xT.se_mean, "second_moment": float(np.mean(ens.X[-1] ** 2)),
                "se_second_moment": float(np.std(ens.X[-1] ** 2, ddof=1) / math.sqrt(max(ens.paths, 1))) if ens.paths > 1 else None},
    }


def _theory(model, sim: SimConfig, est: dict) -> dict:
    """Scheme-exact finite-time moments plus the stationary limits."""
    n = sim.steps
    f = scheme_second_moment(model, n, sim.h)
    at = est["t"]
    i = int(round(at / sim.h))
    th = {
        "mean_V": model.sigma,
        "scheme": {
            "var_V": f[i] - model.sigma**2,
            "autocov": [scheme_cov(model, int(round(a["t"] / sim.h)), int(round(a["delta"] / sim.h)), sim.h, f) for a in est["autocov"]],
            "X_T_second_moment": sim.h * float(np.sum(f[:n])),
        },
    }
    v = model.verdict
    th["stationarity"] = verdict_dict(v)
    if isinstance(v, Stationary):
        cf_curve = gamma_curve(model, [0.0] + [a["delta"] for a in est["autocov"]])
        th["limit"] = {"var_V": cf_curve.values[0], "autocov": list(cf_curve.values[1:])}
    return th


def cmd_simulate(run: Run, cfg: dict, threads: int) -> int:
    model = cfgmod.build_model(cfg)
    sim = _sim_config(cfg, model)
    run.params.update(T=sim.T, h=sim.h, paths=sim.paths, seed=sim.seed, stride=sim.stride)
    ens = run.timed("simulate", simulate, sim, threads)
    est = _estimators(cfg, ens, sim)
    est["theory"] = run.timed("theory", _theory, model, sim, est)
    k = min(int(cfg["simulation"]["record_paths"]), sim.paths)
    if k > 0:
        rows = [(p, t, ens.V[j, p], ens.X[j, p], ens.S[j, p]) for p in range(k) for j, t in enumerate(ens.grid)]
        run.table("paths", ("path", "t", "V", "X", "S"), rows)
    run.summary("simulate", est)
    return EXIT_OK


def cmd_discrete(run: Run, cfg: dict, threads: int) -> int:
    model = None
    if cfg["discrete"].get("family") == "from_kernel":
        model = cfgmod.build_model(cfg)
    dm = cfgmod.build_discrete(cfg, model)
    d = cfg["discrete"]
    steps, paths, seed = int(d["steps"]), int(d["paths"]), int(d["seed"])
    run.params.update(steps=steps, paths=paths, seed=seed, family=d.get("family"))
    v = run.timed("stationarity", discrete_stationarity, dm)
    ens = run.timed("simulate", simulate_discrete, dm, steps, paths, seed, threads)
    k = min(int(d["record_paths"]), paths)
    if k > 0:
        rows = []
        for p in range(k):
            for n in range(1, steps + 1):
                rows.append((p, n, ens.V[n - 1, p], ens.U[n - 1, p], ens.X[n, p]))
        run.table("discrete", ("path", "n", "V", "U", "X"), rows)
    last = sample_moments(ens.V[-1])
    lag1 = sample_cov(ens.U[-2], ens.U[-1]) if steps > 1 else None
    total, _ = square_sum(dm)
    vd = verdict_dict(v)
    out = {
        "margin": vd["margin"],
        "verdict": vd,
        "square_sum": total,
        "memory": discrete_memory(dm).value,
        "limit_var_V": dm.sigma**2 * vd["margin"] / (1 - vd["margin"]) if vd["stationary"] else None,
        "mean_V_last": last.mean,
        "se_mean_V_last": last.se_mean,
        "var_V_last": last.var,
        "cov_U_lag1": lag1.cov if lag1 else None,
        "se_cov_U_lag1": lag1.se if lag1 else None,
    }
    run.summary("discrete", out)
    return EXIT_OK


def cmd_report(run: Run, cfg: dict, threads: int) -> int:
    model = cfgmod.build_model(cfg)
    tol = cfg["tolerances"]
    k = float(tol["se_mult"])
    wanted = set(cfg["report"]["checks"])
    sim = _sim_config(cfg, model)
    run.params.update(T=sim.T, h=sim.h, paths=sim.paths, seed=sim.seed, checks=sorted(wanted))
    ens = run.timed("simulate", simulate, sim, threads)
    est = _estimators(cfg, ens, sim)
    th = run.timed("theory", _theory, model, sim, est)
    checks = [check("mean_V", th["mean_V"], est["mean_V"], k * est["se_mean_V"], est["se_mean_V"])]
    for e in est["efficiency"]:
        checks.append(check(f"returns_corr[delta={e['delta']:g},Delta={e['Delta']:g}]", 0.0, e["corr"],
                            k * e["se"] if e["se"] is not None else None, e["se"]))
    checks.append(check("mean_X_T", 0.0, est["X_T"]["mean"], k * est["X_T"]["se_mean"], est["X_T"]["se_mean"]))

    def rel(name, theory, emp, se, rtol, note):
        t = max(rtol * abs(theory), k * se)
        checks.append(check(name, theory, emp, t, se, note))

    if "scheme" in wanted:
        sc = th["scheme"]
        rel("var_V[scheme]", sc["var_V"], est["var_V"], est["se_var_V"], tol["var_rel"], "exact moment of the simulated recursion")
        for a, c in zip(est["autocov"], sc["autocov"]):
            rel(f"autocov[scheme,delta={a['delta']:g}]", c, a["cov"], a["se"], tol["cov_rel"], "exact moment of the simulated recursion")
        xt = est["X_T"]
        rel("X_T_second_moment[scheme]", sc["X_T_second_moment"], xt["second_moment"], xt["se_second_moment"],
            tol["isometry_rel"], "isometry of the recursion")
    if "limit" in wanted:
        lim = th.get("limit")
        if lim is None:
            checks.append(check("var_V[limit]", None, est["var_V"], None, note="model not stationary"))
        else:
            rel("var_V[limit]", lim["var_V"], est["var_V"], est["se_var_V"], tol["var_rel"], "stationary limit")
            for a, g in zip(est["autocov"], lim["autocov"]):
                rel(f"autocov[limit,delta={a['delta']:g}]", g, a["cov"], a["se"], tol["cov_rel"], "stationary limit")
    ok = all(c["pass"] for c in checks)
    out = {
        "validate": {"stationarity": th["stationarity"], "memory": memory_of(model)},
        "theory": th,
        "empirical": est,
        "checks": checks,
        "pass": ok,
    }
    run.summary("report", out)
    if not ok:
        failed = [c["name"] for c in checks if not c["pass"]]
        run.failed = failed
        return EXIT_TOLERANCE
    return EXIT_OK


# -- entry point --------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="lmvol", description="Long-memory volatility model: theory and simulation.")
    p.add_argument("--version", action="version", version=f"lmvol {__version__}")
    sub = p.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        s = sub.add_parser(name)
        s.add_argument("--config", required=True, metavar="PATH")
        s.add_argument("--out", default="lmvol-out", metavar="DIR")
        s.add_argument("--seed", type=int)
        s.add_argument("--paths", type=int)
        s.add_argument("--step", type=float, metavar="H")
        s.add_argument("--horizon", type=float, metavar="T")
        s.add_argument("--format", choices=("csv", "json"), default="csv")
        s.add_argument("--threads", type=int, default=1)
    return p


def apply_overrides(cfg: dict, args) -> dict:
    if args.seed is not None:
        cfg["simulation"]["seed"] = args.seed
        cfg["discrete"]["seed"] = args.seed
    if args.paths is not None:
        cfg["simulation"]["paths"] = args.paths
        cfg["discrete"]["paths"] = args.paths
    cmd = args.command
    if cmd in ("analyze", "gamma", "validate"):
        if args.step is not None:
            cfg["numerics"]["step"] = args.step
        if args.horizon is not None:
            cfg["numerics"]["horizon"] = args.horizon
    elif cmd == "solve":
        if args.step is not None:
            cfg["numerics"]["h"] = args.step
        if args.horizon is not None:
            cfg["numerics"]["T"] = args.horizon
    elif cmd in ("simulate", "report"):
        if args.step is not None:
            cfg["simulation"]["h"] = args.step
        if args.horizon is not None:
            cfg["simulation"]["T"] = args.horizon
    elif cmd == "discrete":
        if args.step is not None:
            cfg["discrete"]["h"] = args.step
        if args.horizon is not None:
            cfg["discrete"]["steps"] = int(args.horizon)
    return cfg


def _error(exc: LmvolError) -> int:
    sys.stderr.write(json.dumps({"error": exc.to_dict()}, sort_keys=True) + "\n")
    return _EXIT.get(exc.kind, EXIT_NUMERIC)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.threads < 1:
        return _error(ConfigError("--threads must be >= 1", "cli"))
    run = None
    try:
        cfg = apply_overrides(cfgmod.load(args.config), args)
        run = Run(args.command, args, cfg)
        if args.seed is None:
            run.seed = cfg["simulation"]["seed"] if args.command != "discrete" else cfg["discrete"]["seed"]
        fn = globals()[f"cmd_{args.command}"]
        t0 = time.perf_counter()
        code = fn(run, cfg, args.threads) if args.command in ("simulate", "discrete", "report") else fn(run, cfg)
        run.timings["total"] = time.perf_counter() - t0
        if code == EXIT_TOLERANCE:
            _error(_tolerance_error(run))
    except LmvolError as exc:
        code = _error(exc)
    if run is not None:
        run.manifest()
    return code


def _tolerance_error(run):
    return ToleranceError("checks failed: " + ", ".join(getattr(run, "failed", [])), f"cli.{run.command}")


if __name__ == "__main__":
    sys.exit(main())
