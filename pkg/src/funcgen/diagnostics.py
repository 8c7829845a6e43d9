"""Outperformance checks, supermartingale Monte Carlo, uniqueness and
variation diagnostics."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .generators import GeneratingFunction, affine, gamma_by_definition
from .market_models import ModelSpec, SimConfig, oscillator_a, oscillator_path, simulate_weights
from .path_core import MarketPath, total_variation
from .strategies import additive_generate, multiplicative_generate

__all__ = [
    "OutperformanceReport",
    "OutperformanceViolation",
    "check_additive_outperformance",
    "find_shift_c",
    "shift_inequality",
    "shifted",
    "check_multiplicative_outperformance",
    "horizon_bound",
    "supermartingale_mc_test",
    "gamma_uniqueness_check",
    "variation_divergence_report",
    "absorbed_sqrt_qv",
]

_NORM_TOL = 1e-12


class OutperformanceViolation(AssertionError):
    """A consequence of the outperformance theorems failed on a path."""


@dataclass
class OutperformanceReport:
    """Per-path outcome of an outperformance check.

    ``condition`` is the sufficient condition at ``T_star``; ``V_T_star`` and
    ``V_T`` are relative values (market-weight numeraire) at ``T_star`` and
    at the horizon; ``outperform`` flags ``V(T*) > 1``.
    """

    mode: str
    T_star: float
    condition: np.ndarray
    V_T_star: np.ndarray
    V_T: np.ndarray
    outperform: np.ndarray
    extra: dict = field(default_factory=dict)

    @property
    def fraction_condition(self) -> float:
        return float(np.mean(self.condition)) if self.condition.size else 0.0

    @property
    def fraction_outperform(self) -> float:
        return float(np.mean(self.outperform)) if self.outperform.size else 0.0

    def summary(self) -> dict:
        return {
            "mode": self.mode,
            "T_star": self.T_star,
            "paths": int(self.condition.size),
            "fraction_condition": self.fraction_condition,
            "fraction_outperform": self.fraction_outperform,
            **self.extra,
        }


def _index_at(path: MarketPath, T_star: float) -> int:
    t = path.times
    if not t[0] <= T_star <= t[-1]:
        raise ValueError(f"T_star={T_star} outside the path horizon [{t[0]}, {t[-1]}]")
    return path.grid.index_at(T_star)


def _check_normalized(G: GeneratingFunction, path: MarketPath) -> None:
    g0 = float(G(path.weights[0]))
    if abs(g0 - 1.0) > _NORM_TOL:
        raise ValueError(f"G(mu(0)) = {g0!r}, expected 1; apply normalize first")


def check_additive_outperformance(G: GeneratingFunction, paths: Sequence[MarketPath],
                                  T_star: float) -> OutperformanceReport:
    """Check the additive outperformance condition ``Gamma(T*) > 1`` per path.

    Where it holds, ``V(T) = G(mu(T)) + Gamma(T) > 1`` for every grid
    ``T >= T*`` is asserted. ``V(0) = 1`` and ``V >= 0`` are asserted on all
    paths. Raises :class:`OutperformanceViolation` on failure.
    """
    cond, vstar, vT = [], [], []
    for p, path in enumerate(paths):
        _check_normalized(G, path)
        k = _index_at(path, T_star)
        s = additive_generate(G, path)
        v = s.value
        if abs(v[0] - 1.0) > _NORM_TOL:
            raise OutperformanceViolation(f"path {p}: V(0) = {v[0]!r} != 1")
        if v.min() < -_NORM_TOL:
            raise OutperformanceViolation(f"path {p}: V < 0 at index {int(np.argmin(v))}")
        c = bool(s.gamma[k] > 1.0)
        if c and not np.all(v[k:] > 1.0):
            bad = k + int(np.argmin(v[k:] > 1.0))
            raise OutperformanceViolation(f"path {p}: Gamma(T*) > 1 but V = {v[bad]!r} at index {bad}")
        cond.append(c)
        vstar.append(v[k])
        vT.append(v[-1])
    vstar = np.array(vstar)
    return OutperformanceReport("additive", float(T_star), np.array(cond, dtype=bool),
                                vstar, np.array(vT), vstar > 1.0)


def shift_inequality(c: float, kappa: float, epsilon: float) -> float:
    """``log(c/(1+c)) + (1+epsilon)/(kappa+c)``; positive iff the bound exceeds 1."""
    return math.log(c / (1.0 + c)) + (1.0 + epsilon) / (kappa + c)


def find_shift_c(kappa: float, epsilon: float, width: float = 1e-6) -> float:
    """Smallest shift ``c > 0`` on the search lattice with
    ``c/(1+c) * exp((1+epsilon)/(kappa+c)) > 1``.

    A geometric grid (ratio ``2**(1/8)``, starting at ``1e-6``) locates the
    first sign change; bisection narrows it to ``width`` and the upper end is
    returned.

    Examples
    --------
    >>> c = find_shift_c(math.log(2), 0.1)
    >>> 1.5 < c < 2
    True
    """
    if not kappa >= 0:
        raise ValueError("kappa must be >= 0")
    if not epsilon > 0:
        raise ValueError("epsilon must be > 0")
    f = lambda c: shift_inequality(c, kappa, epsilon)  # noqa: E731
    lo, hi = 0.0, 1e-6
    while not f(hi) > 0:
        lo, hi = hi, hi * 2 ** 0.125
    while hi - lo > width:
        mid = 0.5 * (lo + hi)
        if f(mid) > 0:
            hi = mid
        else:
            lo = mid
    assert f(hi) > 0
    return hi


def shifted(G: GeneratingFunction, c: float) -> GeneratingFunction:
    """``G^(c) = (G + c) / (1 + c)``."""
    return affine(G, 1.0 / (1.0 + c), c / (1.0 + c))


def check_multiplicative_outperformance(G: GeneratingFunction, paths: Sequence[MarketPath],
                                        T_star: float, epsilon: float,
                                        kappa: float | None = None) -> OutperformanceReport:
    """Multiplicative outperformance through the shifted function ``G^(c)``.

    ``kappa`` defaults to the closed-form supremum of ``G`` when known and
    otherwise to 1.001 times the largest value of ``G`` visited by the
    ensemble. Where ``Gamma^G(T*) > 1 + epsilon``, the master-equation
    value ``G^(c) K`` at ``T*`` is asserted to exceed
    ``c/(1+c) exp((1+epsilon)/(kappa+c))``, and the traded value is asserted
    to exceed the bound less its discretization residual.
    """
    if kappa is None:
        kappa = G.sup
        if kappa is None:
            kappa = 1.001 * max(float(np.max(G.value(p.weights))) for p in paths)
    c = find_shift_c(kappa, epsilon)
    Gc = shifted(G, c)
    bound = c / (1.0 + c) * math.exp((1.0 + epsilon) / (kappa + c))
    cond, vstar, vT, resid = [], [], [], []
    for p, path in enumerate(paths):
        _check_normalized(G, path)
        k = _index_at(path, T_star)
        gam = gamma_by_definition(G, path).values
        s = multiplicative_generate(Gc, path)
        v = s.value
        gk = float(Gc(path.weights[k]) * s.K[k])
        r = abs(v[k] - gk)
        ok = bool(gam[k] > 1.0 + epsilon)
        if ok:
            if not gk > bound:
                raise OutperformanceViolation(f"path {p}: G K = {gk!r} <= bound {bound!r}")
            if not v[k] >= bound - r:
                raise OutperformanceViolation(f"path {p}: V = {v[k]!r} below bound {bound!r}")
        cond.append(ok)
        vstar.append(v[k])
        vT.append(v[-1])
        resid.append(r)
    vstar = np.array(vstar)
    return OutperformanceReport(
        "multiplicative", float(T_star), np.array(cond, dtype=bool), vstar,
        np.array(vT), vstar > 1.0,
        {"c": c, "kappa": kappa, "epsilon": epsilon, "bound": bound,
         "max_master_residual_at_T_star": float(max(resid, default=0.0))},
    )


def horizon_bound(kind: str, mu0, eta: float, delta: float | None = None) -> float:
    """Horizon beyond which outperformance is guaranteed, given ``dGamma >= eta dt``.

    ``entropy``: ``H(mu0)/eta``; ``quadratic``: ``(1 - sum mu0^2)/eta``,
    improved to ``(1 - 2 delta (1-delta) - sum mu0^2)/eta`` in a market that
    is ``delta``-diverse.
    """
    if not eta > 0:
        raise ValueError("eta must be > 0")
    mu0 = np.asarray(mu0, dtype=float)
    if kind == "entropy":
        if delta is not None:
            raise ValueError("the diversity improvement applies to the quadratic bound")
        x = mu0[mu0 > 0]
        return float(-(x * np.log(x)).sum() / eta)
    if kind == "quadratic":
        q = 1.0 - float((mu0**2).sum())
        if delta is not None:
            if not 0 < delta < 1:
                raise ValueError("delta must lie in (0, 1)")
            q -= 2.0 * delta * (1.0 - delta)
        return q / eta
    raise ValueError(f"no horizon bound for {kind!r}; supported: entropy, quadratic")


def supermartingale_mc_test(G: GeneratingFunction, spec: ModelSpec, config: SimConfig,
                            checkpoints: Sequence[int] | None = None, block: int = 1000,
                            n_se: float = 3.0) -> dict:
    """Monte Carlo means of ``G(mu(t_k))`` at checkpoints.

    Consecutive checkpoints are compared through paired differences, whose
    standard error is ``std(diff)/sqrt(P)``. The sequence is called
    nonincreasing when no difference exceeds ``n_se`` standard errors, and
    nondecreasing symmetrically. For a weight-martingale model a Lyapunov
    ``G`` must pass the nonincreasing test.
    """
    n = config.steps
    if checkpoints is None:
        checkpoints = [round(n * j / 4) for j in range(5)]
    cp = np.asarray(sorted(set(int(c) for c in checkpoints)))
    if cp.min() < 0 or cp.max() > n:
        raise ValueError("checkpoints outside the grid")
    vals = []
    for start in range(0, config.ensemble_size, block):
        idx = range(start, min(start + block, config.ensemble_size))
        _, _, w = simulate_weights(spec, config, idx)
        sub = w[:, cp, :]
        vals.append(G.value(sub.reshape(-1, sub.shape[-1])).reshape(sub.shape[:2]))
    g = np.concatenate(vals)
    P = g.shape[0]
    means = g.mean(axis=0)
    se = g.std(axis=0, ddof=1) / math.sqrt(P) if P > 1 else np.zeros(cp.size)
    diff = np.diff(g, axis=1)
    dmean = diff.mean(axis=0)
    dse = diff.std(axis=0, ddof=1) / math.sqrt(P) if P > 1 else np.zeros(cp.size - 1)
    return {
        "seed": config.seed,
        "paths": P,
        "steps": n,
        "checkpoints": cp.tolist(),
        "times": (cp * config.horizon / n).tolist(),
        "means": means.tolist(),
        "standard_errors": se.tolist(),
        "diff_means": dmean.tolist(),
        "diff_standard_errors": dse.tolist(),
        "nonincreasing": bool(np.all(dmean <= n_se * dse)),
        "nondecreasing": bool(np.all(dmean >= -n_se * dse)),
        "n_se": n_se,
    }


def gamma_uniqueness_check(G: GeneratingFunction, DG_alt, path: MarketPath) -> float:
    """Max absolute difference of Gamma under ``G.grad`` and the selection ``DG_alt``.

    ``DG_alt`` maps an ``(n, d)`` array of weights to ``(n, d)``.
    """
    w = path.weights
    a = gamma_by_definition(G, path).values
    alt = np.asarray(DG_alt(w), dtype=float)
    b = gamma_by_definition(G, path, grad=alt).values
    return float(np.max(np.abs(a - b)))


def absorbed_sqrt_qv(config: SimConfig, sigma: float = 1.0) -> np.ndarray:
    """Discrete quadratic variation of ``sqrt|1 - B|`` per path, absorbed pair."""
    spec = ModelSpec("absorbed_brownian_pair", sigma=sigma)
    _, _, w = simulate_weights(spec, config)
    y = np.sqrt(np.abs(1.0 - 2.0 * w[..., 0]))
    return (np.diff(y, axis=1) ** 2).sum(axis=1)


def variation_divergence_report(n_max_list: Sequence[int], qv_paths: int = 1000,
                                qv_steps: int = 4096, seed: int = 0) -> dict:
    """Variation of the oscillator and of ``sqrt`` of it, plus the QV probe.

    Returns a dict with a ``rows`` table (one entry per ``n_max``) and a
    ``quadratic_variation`` entry comparing meshes ``h`` and ``h/4`` on the
    absorbed Brownian pair (nested paths, same seed).
    """
    ns = [int(n) for n in n_max_list]
    if any(b <= a for a, b in zip(ns, ns[1:])):
        raise ValueError("n_max values must be increasing")
    rows = []
    for n_max in ns:
        _, x = oscillator_path(n_max)
        k = np.arange(1, n_max + 1, dtype=float)
        rows.append({
            "n_max": n_max,
            "tv_x": total_variation(x),
            "tv_x_bound": float(np.sum(3.0 * np.sqrt(k) / (k * k + k))),
            "tv_sqrt_x": total_variation(np.sqrt(x)),
            "tv_sqrt_x_lower_bound": float(np.sum(1.0 - np.sqrt(k / (k + 1.0)))),
            "a_n_max": oscillator_a(n_max),
        })
    coarse = absorbed_sqrt_qv(SimConfig(1.0, qv_steps, seed, qv_paths))
    fine = absorbed_sqrt_qv(SimConfig(1.0, 4 * qv_steps, seed, qv_paths))
    return {
        "rows": rows,
        "quadratic_variation": {
            "seed": seed,
            "paths": qv_paths,
            "steps": [qv_steps, 4 * qv_steps],
            "mean_coarse": float(coarse.mean()),
            "mean_fine": float(fine.mean()),
            "fraction_growing": float(np.mean(fine > coarse)),
        },
    }
