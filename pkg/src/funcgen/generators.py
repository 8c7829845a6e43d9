"""Generating functions on the simplex, their derivative maps, and Gamma.

A generating function is evaluated row-wise: ``value(x)`` takes an array of
shape ``(n, d)`` (or a single point of shape ``(d,)``) and ``grad(x)``
returns the chosen derivative selection ``DG`` with the same leading shape.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np
from scipy.special import entr

from .path_core import (
    MarketPath,
    collision_local_time,
    left_riemann_integral,
    left_signum,
    local_time,
    quadratic_covariation,
    rank_with_ties,
)

__all__ = [
    "BUILTIN_KINDS",
    "GeneratingFunction",
    "GammaSeries",
    "NonFiniteDerivativeError",
    "SupergradientError",
    "NoAnalyticRecipeError",
    "builtin",
    "custom_concave",
    "check_supergradient",
    "gamma_by_definition",
    "gamma_analytic",
    "normalize",
    "affine",
    "sample_simplex",
]

BUILTIN_KINDS = ("entropy", "quadratic", "gini", "large_cap", "small_cap", "geometric_mean")


class NonFiniteDerivativeError(ValueError):
    def __init__(self, index: int, what: str = "DG"):
        super().__init__(f"{what} is not finite at time index {index}")
        self.index = index


class SupergradientError(ValueError):
    pass


class NoAnalyticRecipeError(ValueError):
    pass


@dataclass(frozen=True)
class GammaSeries:
    values: np.ndarray
    method: str


@dataclass(frozen=True)
class GeneratingFunction:
    """``G = scale * base + offset`` together with a derivative selection.

    ``recipe`` names the closed-form Gamma used by :func:`gamma_analytic`;
    ``sup`` is the supremum of ``G`` over the simplex when known in closed
    form. ``euler`` marks functions with ``sum_j x_j D_jG(x) = G(x)``.
    """

    kind: str
    d: int | None
    base_value: Callable = field(repr=False)
    base_grad: Callable = field(repr=False)
    params: dict = field(default_factory=dict)
    recipe: str | None = None
    rank_based: bool = False
    base_sup: float | None = None
    euler: bool = False
    scale: float = 1.0
    offset: float = 0.0
    base_hessian: Callable | None = field(default=None, repr=False)

    def value(self, x) -> np.ndarray:
        x, single = _rows(x)
        v = self.scale * self.base_value(x) + self.offset
        return v[0] if single else v

    __call__ = value

    def grad(self, x) -> np.ndarray:
        x, single = _rows(x)
        g = self.scale * self.base_grad(x)
        return g[0] if single else g

    @property
    def sup(self) -> float | None:
        if self.base_sup is None:
            return None
        return self.scale * self.base_sup + self.offset


def _rows(x):
    a = np.asarray(x, dtype=float)
    if a.ndim == 1:
        return a[None, :], True
    return a, False


# --- built-in value/derivative maps -----------------------------------------

def _entropy_value(x):
    return entr(x).sum(axis=1)


def _entropy_grad(x):
    interior = (x > 0) & (x < 1)
    with np.errstate(divide="ignore", invalid="ignore"):
        g = np.where(x > 0, -1.0 - np.log(np.where(x > 0, x, 1.0)), 0.0)
    # coordinates on the boundary {0, 1}: sum over interior coordinates of x_j D_jG
    fill = np.where(interior, x * g, 0.0).sum(axis=1, keepdims=True)
    return np.where(interior, g, fill)


def _gini_value(x):
    d = x.shape[1]
    return 1.0 - 0.5 * np.abs(x - 1.0 / d).sum(axis=1)


def _gini_grad(x):
    d = x.shape[1]
    return -0.5 * left_signum(x - 1.0 / d)


def _rank_value(coef):
    def value(x):
        ranked = -np.sort(-x, axis=1)
        return ranked @ coef(x.shape[1])
    return value


def _rank_grad(coef):
    # D_iG(x) = sum_l c_l / N_l(x) 1{x_(l) = x_i}
    def grad(x):
        rv = rank_with_ties(x)
        c = coef(x.shape[1])
        eq = rv.ranked[:, :, None] == x[:, None, :]
        return (eq * (c[None, :] / rv.tie_counts)[:, :, None]).sum(axis=1)
    return grad


def _geomean_value(x):
    with np.errstate(divide="ignore"):
        return np.where((x > 0).all(axis=1), np.exp(np.log(x).mean(axis=1)), 0.0)


def _geomean_grad(x):
    d = x.shape[1]
    g = _geomean_value(x)[:, None]
    with np.errstate(divide="ignore", invalid="ignore"):
        return g / (d * x)


def _geomean_hessian(x):
    d = x.shape[1]
    g = _geomean_value(x)[:, None, None]
    inv = 1.0 / x
    h = g * inv[:, :, None] * inv[:, None, :] / d**2
    idx = np.arange(d)
    h[:, idx, idx] -= (g[:, :, 0] * inv**2) / d
    return h


def builtin(kind: str, d: int | None = None, **params) -> GeneratingFunction:
    """Construct a built-in generating function.

    Parameters
    ----------
    kind : {"entropy", "quadratic", "gini", "large_cap", "small_cap", "geometric_mean"}
    d : int, optional
        Number of assets. Needed for ``sup`` and for the rank functions'
        range check on ``m``; the maps themselves read ``d`` off their input.
    c : float
        Shift of the quadratic function ``c - sum x_i^2`` (default 1).
    m : int
        Number of large stocks for ``large_cap``/``small_cap``, ``1 <= m <= d-1``.
    """
    if d is not None and d < 2:
        raise ValueError("d must be >= 2")
    if kind == "entropy":
        _no_params(kind, params)
        return GeneratingFunction(
            "entropy", d, _entropy_value, _entropy_grad, {}, "entropy",
            base_sup=None if d is None else float(np.log(d)),
        )
    if kind == "quadratic":
        c = float(params.pop("c", 1.0))
        _no_params(kind, params)
        if not np.isfinite(c):
            raise ValueError("quadratic shift c must be finite")
        return GeneratingFunction(
            "quadratic", d,
            lambda x: c - (x * x).sum(axis=1),
            lambda x: -2.0 * x,
            {"c": c}, "quadratic",
            base_sup=None if d is None else c - 1.0 / d,
        )
    if kind == "gini":
        _no_params(kind, params)
        return GeneratingFunction("gini", d, _gini_value, _gini_grad, {}, "gini", base_sup=1.0)
    if kind in ("large_cap", "small_cap"):
        m = params.pop("m", 1)
        _no_params(kind, params)
        if int(m) != m or m < 1 or (d is not None and m > d - 1):
            raise ValueError(f"{kind} needs an integer 1 <= m <= d-1, got m={m}")
        m = int(m)
        large = kind == "large_cap"

        def coef(dd, m=m, large=large):
            if m > dd - 1:
                raise ValueError(f"{kind} needs m <= d-1 (m={m}, d={dd})")
            c = np.zeros(dd)
            if large:
                c[:m] = 1.0
            else:
                c[m:] = 1.0
            return c

        # large: 1 at a vertex; small: (d-m)/d at the barycentre
        sup = 1.0 if large else (None if d is None else (d - m) / d)
        return GeneratingFunction(
            kind, d, _rank_value(coef), _rank_grad(coef), {"m": m}, kind,
            rank_based=True, base_sup=sup, euler=True,
        )
    if kind == "geometric_mean":
        _no_params(kind, params)
        return GeneratingFunction(
            "geometric_mean", d, _geomean_value, _geomean_grad, {}, "hessian",
            base_sup=None if d is None else 1.0 / d, euler=True, base_hessian=_geomean_hessian,
        )
    raise ValueError(f"unknown generating function {kind!r}; expected one of {BUILTIN_KINDS}")


def _no_params(kind, params):
    if params:
        raise ValueError(f"unexpected parameters for {kind}: {sorted(params)}")


def sample_simplex(n: int, d: int, rng: np.random.Generator) -> np.ndarray:
    """Uniform points on the simplex, with a share pushed onto faces."""
    x = rng.dirichlet(np.ones(d), size=n)
    face = rng.random(n) < 0.1
    if face.any():
        drop = rng.integers(0, d, size=face.sum())
        y = x[face]
        y[np.arange(y.shape[0]), drop] = 0.0
        x[face] = y / y.sum(axis=1, keepdims=True)
    return x


def check_supergradient(value, grad, d: int, n_pairs: int = 2000, seed: int = 0,
                        tol: float = 1e-9) -> float:
    """Largest violation of ``G(y) - G(x) <= <xi(x), y - x>`` over random pairs."""
    rng = np.random.default_rng(seed)
    x = sample_simplex(n_pairs, d, rng)
    x = x[(x > 0).all(axis=1)]
    y = sample_simplex(x.shape[0], d, rng)
    gap = value(y) - value(x) - (grad(x) * (y - x)).sum(axis=1)
    worst = float(np.max(gap))
    if worst > tol:
        raise SupergradientError(
            f"supergradient inequality violated by {worst:.3g} (tolerance {tol:g})"
        )
    return worst


def custom_concave(value_map, supergradient_map, d: int, check: bool = True,
                   n_pairs: int = 2000, seed: int = 0) -> GeneratingFunction:
    """Wrap a user-supplied concave function and its supergradient selection.

    Both maps must be vectorized over rows: ``(n, d) -> (n,)`` and
    ``(n, d) -> (n, d)``. With ``check=True`` the supergradient inequality is
    tested on random simplex pairs and a violation beyond ``1e-9`` raises
    :class:`SupergradientError`.
    """
    def value(x):
        return np.asarray(value_map(x), dtype=float).reshape(x.shape[0])

    def grad(x):
        return np.asarray(supergradient_map(x), dtype=float).reshape(x.shape)

    if check:
        check_supergradient(value, grad, d, n_pairs=n_pairs, seed=seed)
    return GeneratingFunction("custom", d, value, grad)


def affine(G: GeneratingFunction, scale: float, offset: float) -> GeneratingFunction:
    """``scale * G + offset``; Gamma scales by ``scale``."""
    return replace(G, scale=G.scale * scale, offset=G.offset * scale + offset)


def normalize(G: GeneratingFunction, mu0) -> GeneratingFunction:
    """Rescale so that the value at ``mu0`` is 1 (``G+1`` if ``G(mu0) = 0``)."""
    g0 = float(G(np.asarray(mu0, dtype=float)))
    if g0 < 0:
        raise ValueError(f"cannot normalize: G(mu0) = {g0} < 0")
    if g0 == 0:
        return affine(G, 1.0, 1.0)
    return affine(G, 1.0 / g0, 0.0)


def _checked_grad(G: GeneratingFunction, w: np.ndarray) -> np.ndarray:
    with np.errstate(divide="ignore", invalid="ignore"):
        g = G.grad(w)
    bad = ~np.isfinite(g).all(axis=1)
    if bad.any():
        raise NonFiniteDerivativeError(int(np.argmax(bad)))
    return g


def gamma_by_definition(G: GeneratingFunction, path: MarketPath, grad: np.ndarray | None = None
                        ) -> GammaSeries:
    """``Gamma(t_n) = G(mu(0)) - G(mu(t_n)) + sum_{m<n} <DG(mu(t_m)), dmu(t_m)>``.

    ``grad`` may supply a precomputed derivative series (it is checked for
    finiteness the same way).
    """
    w = path.weights
    if grad is None:
        grad = _checked_grad(G, w)
    else:
        bad = ~np.isfinite(grad).all(axis=1)
        if bad.any():
            raise NonFiniteDerivativeError(int(np.argmax(bad)))
    g = G.value(w)
    if not np.all(np.isfinite(g)):
        raise NonFiniteDerivativeError(int(np.argmax(~np.isfinite(g))), "G")
    vals = g[0] - g + left_riemann_integral(grad, w)
    vals[0] = 0.0
    return GammaSeries(vals, "by_definition")


def _collision_half(path: MarketPath, m: int) -> np.ndarray:
    # no triple points: N_m = 2 on the support of the (m, m+1) collision local time
    return 0.5 * collision_local_time(rank_with_ties(path.weights), m, m + 1).values


def gamma_analytic(G: GeneratingFunction, path: MarketPath) -> GammaSeries:
    """Closed-form Gamma for the built-ins, from brackets and local times.

    Local times follow :func:`~funcgen.path_core.local_time` (full Tanaka
    term); the Gini and rank recipes carry the matching factor 1/2.
    """
    w = path.weights
    d = w.shape[1]
    r = G.recipe
    if r == "entropy":
        dmu = np.diff(w, axis=0)
        prev = w[:-1]
        with np.errstate(divide="ignore", invalid="ignore"):
            inc = np.where(prev > 0, dmu**2 / np.where(prev > 0, prev, 1.0), 0.0)
        vals = np.concatenate([[0.0], np.cumsum(0.5 * inc.sum(axis=1))])
    elif r == "quadratic":
        vals = sum(quadratic_covariation(w[:, i], w[:, i]) for i in range(d))
    elif r == "gini":
        vals = 0.5 * sum(local_time(w[:, i], 1.0 / d).values for i in range(d))
    elif r == "large_cap":
        vals = -_collision_half(path, G.params["m"])
    elif r == "small_cap":
        vals = _collision_half(path, G.params["m"])
    elif r == "hessian":
        h = G.base_hessian(w[:-1])
        dmu = np.diff(w, axis=0)
        inc = -0.5 * np.einsum("nij,ni,nj->n", h, dmu, dmu)
        vals = np.concatenate([[0.0], np.cumsum(inc)])
    else:
        raise NoAnalyticRecipeError(f"no analytic Gamma recipe for {G.kind!r}")
    return GammaSeries(G.scale * np.asarray(vals, dtype=float), "analytic")
