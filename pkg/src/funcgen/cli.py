"""Scenario runner and command-line entry point.

Subcommands: ``simulate``, ``generate``, ``outperform``, ``counterexample``,
``report``. Exit codes: 0 success, 2 invalid configuration, 3 runtime
failure.
"""
from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from importlib import resources
from pathlib import Path

import jsonschema
import numpy as np

from .diagnostics import (
    check_additive_outperformance,
    check_multiplicative_outperformance,
    supermartingale_mc_test,
    variation_divergence_report,
)
from .generators import BUILTIN_KINDS, NoAnalyticRecipeError, builtin, gamma_analytic, normalize
from .market_models import MODEL_KINDS, ModelSpec, SimConfig, simulate_weights
from .path_core import MarketPath, left_riemann_integral
from .strategies import additive_generate, multiplicative_generate, portfolio_weights

__all__ = ["SCHEMA", "ConfigError", "load_config", "resolve", "run_scenario", "report", "main"]

OUT_ENV = "FUNCGEN_OUT_DIR"
EXIT_OK, EXIT_INVALID, EXIT_RUNTIME = 0, 2, 3

_num = {"type": "number"}
_vec = {"type": "array", "items": _num, "minItems": 2}

SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "name": {"type": "string", "pattern": "^[A-Za-z0-9_.-]+$"},
        "model": {
            "type": "object",
            "additionalProperties": False,
            "required": ["kind"],
            "properties": {
                "kind": {"enum": list(MODEL_KINDS)},
                "initial_caps": _vec,
                "drifts": _vec,
                "vols": _vec,
                "sigma": _num,
                "gamma": _num,
                "atlas_drift": _num,
                "n_max": {"type": "integer", "minimum": 1},
            },
        },
        "simulation": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "horizon": _num,
                "steps": {"type": "integer", "minimum": 1},
                "seed": {"type": "integer", "minimum": 0},
                "ensemble_size": {"type": "integer", "minimum": 1},
            },
        },
        "generator": {
            "type": "object",
            "additionalProperties": False,
            "required": ["kind"],
            "properties": {
                "kind": {"enum": list(BUILTIN_KINDS)},
                "params": {
                    "type": "object",
                    "additionalProperties": False,
                    "properties": {"c": _num, "m": {"type": "integer", "minimum": 1}},
                },
                "normalize": {"type": "boolean"},
            },
        },
        "mode": {"enum": ["additive", "multiplicative", "both"]},
        "diagnostics": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "holdings": {"type": "boolean"},
                "portfolio_weights": {"type": "boolean"},
                "outperformance": {
                    "type": "object",
                    "additionalProperties": False,
                    "properties": {
                        "T_star": {"type": "array", "items": _num, "minItems": 1},
                        "epsilon": {"type": "number", "exclusiveMinimum": 0},
                    },
                },
                "supermartingale": {
                    "type": "object",
                    "additionalProperties": False,
                    "properties": {
                        "checkpoints": {"type": "array", "items": {"type": "integer", "minimum": 0}},
                    },
                },
            },
        },
        "counterexample": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "n_max_list": {"type": "array", "items": {"type": "integer", "minimum": 1}, "minItems": 1},
                "qv_paths": {"type": "integer", "minimum": 2},
                "qv_steps": {"type": "integer", "minimum": 1},
            },
        },
        "output": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "csv_paths": {"type": "integer", "minimum": 0},
            },
        },
    },
}

_DEFAULTS = {
    "name": "scenario",
    "model": {"kind": "two_asset_martingale"},
    "simulation": {"horizon": 1.0, "steps": 1024, "seed": 0, "ensemble_size": 1},
    "generator": {"kind": "entropy", "params": {}, "normalize": True},
    "mode": "both",
    "diagnostics": {"holdings": False, "portfolio_weights": False},
    "output": {"csv_paths": 1},
}


class ConfigError(ValueError):
    """Invalid scenario configuration (exit code 2)."""


class SummaryError(ValueError):
    """Malformed summary passed to ``report`` (exit code 2)."""


def _fmt(x) -> str:
    return format(float(x), ".17g")


def load_config(spec: str | os.PathLike) -> dict:
    """Read a config file, or a packaged scenario by name."""
    p = Path(spec)
    if not p.exists():
        name = str(spec)
        if not name.endswith(".json"):
            name += ".json"
        pkg = resources.files("funcgen") / "scenarios" / name
        if not pkg.is_file():
            raise ConfigError(f"config {spec!r} is neither a file nor a packaged scenario")
        text = pkg.read_text()
    else:
        text = p.read_text()
    try:
        cfg = json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigError(f"config {spec!r} is not valid JSON: {e}") from e
    return cfg


def packaged_scenarios() -> list[str]:
    root = resources.files("funcgen") / "scenarios"
    return sorted(f.name[:-5] for f in root.iterdir() if f.name.endswith(".json"))


def resolve(cfg: dict, seed_override: int | None = None) -> dict:
    """Validate against :data:`SCHEMA`, fill defaults and build the domain objects.

    Returns the resolved config dict; domain objects are under the private
    key ``"_objects"``.
    """
    try:
        jsonschema.validate(cfg, SCHEMA)
    except jsonschema.ValidationError as e:
        loc = "/".join(str(x) for x in e.absolute_path) or "<root>"
        raise ConfigError(f"{loc}: {e.message}") from e
    out = json.loads(json.dumps(_DEFAULTS))
    for k, v in cfg.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k].update(v)
        else:
            out[k] = v
    if seed_override is not None:
        if not 0 <= seed_override < 2**64:
            raise ConfigError("--seed-override must be an unsigned 64-bit integer")
        out["simulation"]["seed"] = int(seed_override)
    try:
        spec = ModelSpec(**out["model"])
        sim = SimConfig(**out["simulation"])
    except (TypeError, ValueError) as e:
        raise ConfigError(str(e)) from e
    gen = out["generator"]
    if gen["kind"] == "quadratic" and out["mode"] in ("multiplicative", "both"):
        c = gen["params"].get("c", 1.0)
        if not c > 1:
            raise ConfigError(f"quadratic generating function needs shift c > 1 for "
                              f"multiplicative generation (got c={c})")
    try:
        G = builtin(gen["kind"], spec.d, **gen["params"])
    except ValueError as e:
        raise ConfigError(str(e)) from e
    mu0 = np.asarray(spec.initial_caps) / sum(spec.initial_caps)
    if gen.get("normalize", True):
        try:
            G = normalize(G, mu0)
        except ValueError as e:
            raise ConfigError(str(e)) from e
    horizon = sim.horizon
    for t in out["diagnostics"].get("outperformance", {}).get("T_star", []):
        if not 0 <= t <= horizon:
            raise ConfigError(f"T_star={t} outside [0, {horizon}]")
    out["_objects"] = {"spec": spec, "sim": sim, "G": G}
    return out


def _public(cfg: dict) -> dict:
    return {k: v for k, v in cfg.items() if not k.startswith("_")}


def _comment_header(cfg: dict) -> list[str]:
    return [f"# config: {json.dumps(_public(cfg), sort_keys=True)}",
            f"# seed: {cfg['simulation']['seed']}"]


def _paths(spec, sim, threads: int, block: int = 256):
    """Simulate the ensemble in blocks; order is fixed regardless of ``threads``."""
    if spec.kind == "oscillator_counterexample":
        raise ConfigError("oscillator_counterexample is handled by the counterexample subcommand")
    starts = list(range(0, sim.ensemble_size, block))

    def run(start):
        idx = range(start, min(start + block, sim.ensemble_size))
        grid, caps, w = simulate_weights(spec, sim, idx)
        return [MarketPath(grid, c, x) for c, x in zip(caps, w)]

    if threads > 1:
        with ThreadPoolExecutor(threads) as ex:
            chunks = list(ex.map(run, starts))
    else:
        chunks = [run(s) for s in starts]
    return [p for c in chunks for p in c]


def _map(fn, items, threads):
    if threads > 1:
        with ThreadPoolExecutor(threads) as ex:
            return list(ex.map(fn, items))
    return [fn(x) for x in items]


def _write_csv(path: Path, header: list[str], columns: list[np.ndarray], comments: list[str]):
    rows = np.column_stack(columns)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        for c in comments:
            fh.write(c + "\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([_fmt(x) for x in r])


def _write_json(path: Path, obj) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True, allow_nan=True)
        fh.write("\n")


def _evaluate_path(G, path, mode, want_pi):
    add = additive_generate(G, path) if mode in ("additive", "both") else None
    mul = multiplicative_generate(G, path) if mode in ("multiplicative", "both") else None
    w = path.weights
    res = {}
    if add is not None:
        v = add.value
        g = G.value(w)
        res["identity_value"] = float(np.max(np.abs(v - (add.holdings * w).sum(axis=1))))
        res["identity_self_financing"] = float(np.max(np.abs(v - v[0] - left_riemann_integral(add.holdings, w))))
        res["identity_G_plus_gamma"] = float(np.max(np.abs(v - g - add.gamma)))
    if mul is not None:
        res["master_residual"] = float(np.nanmax(mul.master_residual))
        res["multiplicative_self_financing"] = float(
            np.max(np.abs(mul.value - mul.value[0] - left_riemann_integral(mul.holdings, w))))
    try:
        ga = gamma_analytic(G, path).values
        gd = (add or mul).gamma
        res["gamma_analytic_gap"] = float(abs(ga[-1] - gd[-1]))
    except NoAnalyticRecipeError:
        pass
    pi = portfolio_weights(add or mul, path).weights if want_pi else None
    return add, mul, pi, res


def _simulate_cmd(cfg, out: Path, threads: int) -> dict:
    o = cfg["_objects"]
    spec, sim = o["spec"], o["sim"]
    paths = _paths(spec, sim, threads)
    name = cfg["name"]
    files = []
    for k, p in enumerate(paths[: cfg["output"]["csv_paths"]]):
        f = out / f"{name}_weights_path{k}.csv"
        header = ["t"] + [f"mu_{i + 1}" for i in range(spec.d)] + [f"cap_{i + 1}" for i in range(spec.d)]
        _write_csv(f, header, [p.times, p.weights, p.caps], _comment_header(cfg) + [f"# path_index: {k}"])
        files.append(f.name)
    final = np.array([p.weights[-1] for p in paths])
    summary = {
        "command": "simulate",
        "config": _public(cfg),
        "seed": sim.seed,
        "paths": len(paths),
        "steps": sim.steps,
        "mean_final_weights": final.mean(axis=0).tolist(),
        "csv_files": files,
    }
    _write_json(out / f"{name}_simulate.json", summary)
    return summary


def run_scenario(cfg: dict, out: Path, threads: int = 1, outperform_only: bool = False) -> dict:
    """Run a resolved scenario and write its CSV and JSON artifacts into ``out``.

    Returns the summary dict (also written to ``<name>_summary.json``).
    """
    o = cfg["_objects"]
    spec, sim, G = o["spec"], o["sim"], o["G"]
    mode = cfg["mode"]
    diag = cfg["diagnostics"]
    name = cfg["name"]
    paths = _paths(spec, sim, threads)
    summary = {
        "command": "outperform" if outperform_only else "generate",
        "config": _public(cfg),
        "seed": sim.seed,
        "paths": len(paths),
        "steps": sim.steps,
    }
    files = []
    if not outperform_only:
        n_csv = cfg["output"]["csv_paths"]
        want_pi = bool(diag.get("portfolio_weights"))
        results = _map(lambda p: _evaluate_path(G, p, mode, want_pi), paths, threads)
        keys = sorted({k for r in results for k in r[3]})
        summary["residuals"] = {k: max(r[3][k] for r in results if k in r[3]) for k in keys}
        gam = np.array([(r[0] or r[1]).gamma[-1] for r in results])
        summary["gamma_T"] = {"mean": float(gam.mean()), "min": float(gam.min()), "max": float(gam.max())}
        for k, (p, (add, mul, pi, _)) in enumerate(zip(paths, results)):
            if k >= n_csv:
                break
            n = len(p)
            nan = np.full(n, np.nan)
            d = spec.d
            header = ["t"] + [f"mu_{i + 1}" for i in range(d)] + ["gamma", "v_additive", "v_multiplicative"]
            cols = [p.times, p.weights, (add or mul).gamma,
                    add.value if add else nan, mul.value if mul else nan]
            if diag.get("holdings"):
                if add is not None:
                    header += [f"phi_{i + 1}" for i in range(d)]
                    cols.append(add.holdings)
                if mul is not None:
                    header += [f"psi_{i + 1}" for i in range(d)]
                    cols.append(mul.holdings)
            if pi is not None:
                header += [f"pi_{i + 1}" for i in range(d)]
                cols.append(pi)
            f = out / f"{name}_path{k}.csv"
            _write_csv(f, header, cols, _comment_header(cfg) + [f"# path_index: {k}"])
            files.append(f.name)
        summary["csv_files"] = files
    op = diag.get("outperformance")
    if op is not None or outperform_only:
        op = op or {}
        t_list = op.get("T_star", [sim.horizon])
        eps = op.get("epsilon", 0.1)
        reports = []
        for t in t_list:
            if mode in ("additive", "both"):
                reports.append(check_additive_outperformance(G, paths, t).summary())
            if mode in ("multiplicative", "both"):
                reports.append(check_multiplicative_outperformance(G, paths, t, eps).summary())
        summary["outperformance"] = reports
    sm = diag.get("supermartingale")
    if sm is not None:
        summary["supermartingale"] = supermartingale_mc_test(G, spec, sim, sm.get("checkpoints"))
    _write_json(out / f"{name}_summary.json", summary)
    return summary


def _counterexample_cmd(cfg, out: Path) -> dict:
    ce = cfg.get("counterexample", {})
    sim = cfg["_objects"]["sim"]
    rep = variation_divergence_report(
        ce.get("n_max_list", [100, 1000, 10000]),
        qv_paths=ce.get("qv_paths", 1000),
        qv_steps=ce.get("qv_steps", 4096),
        seed=sim.seed,
    )
    name = cfg["name"]
    rows = rep["rows"]
    cols = ["n_max", "tv_x", "tv_x_bound", "tv_sqrt_x", "tv_sqrt_x_lower_bound"]
    with open(out / f"{name}_variation.csv", "w", newline="", encoding="utf-8") as fh:
        for c in _comment_header(cfg):
            fh.write(c + "\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(cols)
        for r in rows:
            w.writerow([str(r["n_max"])] + [_fmt(r[c]) for c in cols[1:]])
    summary = {"command": "counterexample", "config": _public(cfg), "seed": sim.seed, **rep}
    _write_json(out / f"{name}_counterexample.json", summary)
    return summary


_REPORT_COLS = ["scenario", "seed", "paths", "steps", "mode", "T_star",
                "fraction_condition", "fraction_outperform"]


def report(summary_files, out: Path) -> dict:
    """Merge outperformance fractions from several summaries into one table.

    Writes ``report.json`` and ``report.csv`` into ``out``.
    """
    files = list(summary_files)
    if not files:
        raise SummaryError("report needs at least one summary file")
    rows = []
    for f in files:
        try:
            s = json.loads(Path(f).read_text())
            name = s["config"]["name"]
            for r in s.get("outperformance", []):
                rows.append({
                    "scenario": name, "seed": s["seed"], "paths": s["paths"], "steps": s["steps"],
                    "mode": r["mode"], "T_star": r["T_star"],
                    "fraction_condition": r["fraction_condition"],
                    "fraction_outperform": r["fraction_outperform"],
                })
        except (OSError, json.JSONDecodeError, KeyError, TypeError) as e:
            raise SummaryError(f"malformed summary file {f}: {e!r}") from e
    agg = {}
    for r in rows:
        key = (r["scenario"], r["mode"], r["T_star"])
        a = agg.setdefault(key, {"paths": 0, "cond": 0.0, "out": 0.0, "seeds": []})
        a["paths"] += r["paths"]
        a["cond"] += r["fraction_condition"] * r["paths"]
        a["out"] += r["fraction_outperform"] * r["paths"]
        a["seeds"].append(r["seed"])
    merged = [
        {"scenario": k[0], "mode": k[1], "T_star": k[2], "paths": a["paths"], "seeds": a["seeds"],
         "fraction_condition": a["cond"] / a["paths"], "fraction_outperform": a["out"] / a["paths"]}
        for k, a in sorted(agg.items())
    ]
    result = {"inputs": [str(f) for f in files], "rows": rows, "merged": merged}
    _write_json(out / "report.json", result)
    with open(out / "report.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(_REPORT_COLS)
        for r in rows:
            w.writerow([r[c] if not isinstance(r[c], float) else _fmt(r[c]) for c in _REPORT_COLS])
    return result


def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="funcgen", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)
    for cmd, help_ in [
        ("simulate", "simulate market-weight paths"),
        ("generate", "build generated strategies and write per-path CSV"),
        ("outperform", "run the outperformance checks over an ensemble"),
        ("counterexample", "variation report for the oscillator and the absorbed pair"),
    ]:
        p = sub.add_parser(cmd, help=help_)
        p.add_argument("--config", required=True, help="JSON file or packaged scenario name")
        p.add_argument("--out", help=f"output directory (default ${OUT_ENV} or ./funcgen_out)")
        p.add_argument("--seed-override", type=int)
        p.add_argument("--threads", type=int, default=1)
    p = sub.add_parser("report", help="aggregate summary JSON files")
    p.add_argument("summaries", nargs="*")
    p.add_argument("--out")
    sub.add_parser("scenarios", help="list packaged scenarios")
    return ap


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    if args.command == "scenarios":
        print("\n".join(packaged_scenarios()))
        return EXIT_OK
    out = Path(args.out or os.environ.get(OUT_ENV) or "funcgen_out")
    try:
        if args.command == "report":
            out.mkdir(parents=True, exist_ok=True)
            report(args.summaries, out)
            print(out / "report.json")
            return EXIT_OK
        if args.threads < 1:
            raise ConfigError("--threads must be >= 1")
        cfg = resolve(load_config(args.config), args.seed_override)
        if args.command == "counterexample" and "counterexample" not in cfg:
            cfg["counterexample"] = {}
    except (ConfigError, SummaryError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INVALID
    try:
        out.mkdir(parents=True, exist_ok=True)
        if args.command == "simulate":
            _simulate_cmd(cfg, out, args.threads)
        elif args.command == "generate":
            run_scenario(cfg, out, args.threads)
        elif args.command == "outperform":
            run_scenario(cfg, out, args.threads, outperform_only=True)
        else:
            _counterexample_cmd(cfg, out)
    except ConfigError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INVALID
    except Exception as e:  # noqa: BLE001 - any failure during a run maps to exit 3
        print(f"runtime error: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_RUNTIME
    print(out)
    return EXIT_OK
