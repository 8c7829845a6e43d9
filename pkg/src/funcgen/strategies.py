"""Self-financing strategies from integrands and from generating functions.

Holdings are share counts in the market-weight numeraire. Holdings at
``t_m`` are applied over ``[t_m, t_{m+1})``; those at the final grid point
are computed but never traded.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .generators import (
    GeneratingFunction,
    _checked_grad,
    gamma_by_definition,
)
from .market_models import to_market_weights
from .path_core import GridMismatchError, MarketPath, left_riemann_integral

__all__ = [
    "StrategySeries",
    "PortfolioWeights",
    "UndefinedWeightsError",
    "NonPositiveGeneratorError",
    "value_of",
    "defect_Q",
    "make_self_financing",
    "additive_generate",
    "multiplicative_generate",
    "portfolio_weights",
    "numeraire_invariance_check",
]


class UndefinedWeightsError(ValueError):
    def __init__(self, index: int):
        super().__init__(f"portfolio weights undefined: V = 0 at time index {index}")
        self.index = index


class NonPositiveGeneratorError(ValueError):
    def __init__(self, index: int, value: float):
        super().__init__(f"G(mu) = {value:.6g} <= 0 at time index {index}; "
                         "multiplicative generation needs G > 0")
        self.index = index


@dataclass(frozen=True)
class StrategySeries:
    """Holdings ``(n, d)`` and value ``(n,)`` of a strategy.

    ``gamma`` is the Gamma series used to build generated strategies.
    In multiplicative mode ``K`` is ``exp(sum dGamma / G)`` and
    ``master_residual`` is ``|V - G K| / V``.
    """

    holdings: np.ndarray
    value: np.ndarray
    mode: str
    gamma: np.ndarray | None = None
    K: np.ndarray | None = None
    master_residual: np.ndarray | None = None


@dataclass(frozen=True)
class PortfolioWeights:
    weights: np.ndarray


def _weights(path) -> np.ndarray:
    return path.weights if isinstance(path, MarketPath) else np.asarray(path, dtype=float)


def _holdings(theta, w) -> np.ndarray:
    th = np.asarray(theta, dtype=float)
    if th.shape != w.shape:
        raise GridMismatchError(f"holdings shape {th.shape} != weights shape {w.shape}")
    return th


def value_of(theta, path) -> np.ndarray:
    """``V(t) = sum_i theta_i(t) mu_i(t)``."""
    w = _weights(path)
    return (_holdings(theta, w) * w).sum(axis=1)


def defect_Q(theta, path) -> np.ndarray:
    """Defect of self-financing ``Q = V(t) - V(0) - int <theta, dmu>``."""
    w = _weights(path)
    th = _holdings(theta, w)
    v = (th * w).sum(axis=1)
    return v - v[0] - left_riemann_integral(th, w)


def make_self_financing(theta, C: float, path) -> StrategySeries:
    """``phi_i = theta_i - Q + C``, a strategy with value ``V^theta(0) + C + gains``.

    Examples
    --------
    >>> import numpy as np
    >>> from funcgen.path_core import MarketPath
    >>> p = MarketPath.from_weights([0, 1, 2], [[.5, .5], [.6, .4], [.5, .5]])
    >>> s = make_self_financing(np.zeros((3, 2)), 1.0, p)
    >>> s.value.tolist()
    [1.0, 1.0, 1.0]
    """
    w = _weights(path)
    th = _holdings(theta, w)
    q = defect_Q(th, w)
    phi = th - q[:, None] + C
    return StrategySeries(phi, (phi * w).sum(axis=1), "raw_integrand")


def additive_generate(G: GeneratingFunction, path: MarketPath) -> StrategySeries:
    """Additively generated strategy, value ``G(mu) + Gamma``.

    ``phi_i = D_iG(mu) + Gamma + G(mu) - sum_j mu_j D_jG(mu)`` with Gamma
    computed by its defining identity. For the entropy function the holding
    in an asset with zero weight is set to 0 (the indicator form); zero
    weights are absorbing for any market with a deflator, so no trade is
    affected.
    """
    w = path.weights
    grad = _checked_grad(G, w)
    gamma = gamma_by_definition(G, path, grad=grad).values
    g = G.value(w)
    phi = grad + (gamma + g - (w * grad).sum(axis=1))[:, None]
    if G.kind == "entropy":
        phi = np.where(w > 0, phi, 0.0)
    return StrategySeries(phi, (phi * w).sum(axis=1), "additive", gamma=gamma)


def multiplicative_generate(G: GeneratingFunction, path: MarketPath) -> StrategySeries:
    """Multiplicatively generated strategy.

    Value follows discrete self-financing from ``V(0) = G(mu(0))`` with
    ``psi_i = V (1 + (D_iG - sum_j mu_j D_jG) / G)``; it is compared with
    ``G(mu) K``, ``K(t_n) = exp(sum_{m<n} dGamma(t_m) / G(mu(t_m)))``.
    """
    w = path.weights
    g = G.value(w)
    bad = ~(g > 0)
    if bad.any():
        i = int(np.argmax(bad))
        raise NonPositiveGeneratorError(i, float(g[i]))
    grad = _checked_grad(G, w)
    gamma = gamma_by_definition(G, path, grad=grad).values
    n = w.shape[0]
    K = np.ones(n)
    K[1:] = np.exp(np.cumsum(np.diff(gamma) / g[:-1]))
    # sum_i dmu_i = 0, so the per-step return of psi is <DG, dmu> / G
    ret = (grad[:-1] * np.diff(w, axis=0)).sum(axis=1) / g[:-1]
    v = np.empty(n)
    v[0] = g[0]
    v[1:] = g[0] * np.cumprod(1.0 + ret)
    tilt = (grad - (w * grad).sum(axis=1, keepdims=True)) / g[:, None]
    psi = v[:, None] * (1.0 + tilt)
    with np.errstate(divide="ignore", invalid="ignore"):
        resid = np.abs(v - g * K) / np.abs(v)
    return StrategySeries(psi, (psi * w).sum(axis=1), "multiplicative",
                          gamma=gamma, K=K, master_residual=resid)


def portfolio_weights(s: StrategySeries, path) -> PortfolioWeights:
    """``pi_i = mu_i phi_i / V``."""
    w = _weights(path)
    h = _holdings(s.holdings, w)
    v = s.value
    zero = v == 0
    if zero.any():
        raise UndefinedWeightsError(int(np.argmax(zero)))
    return PortfolioWeights(w * h / v[:, None])


def numeraire_invariance_check(s: StrategySeries, caps) -> dict:
    """Compare the strategy in capitalization coordinates.

    Returns a dict with ``value_residual`` (max relative gap between
    ``sum phi_i S_i`` and ``Sigma V``) and ``self_financing_residual``
    (max relative gap between ``V(t;S) - V(0;S)`` and ``int <phi, dS>``).
    Both vanish up to rounding. For the second, self-financing in weights
    means ``(phi(t_{m+1}) - phi(t_m)) . mu(t_{m+1}) = 0``; multiplying by
    ``Sigma(t_{m+1})`` gives the same statement in capitalizations, so the
    discrete identity is exact at every mesh.
    """
    S = np.asarray(caps, dtype=float)
    h = _holdings(s.holdings, S)
    if s.value.shape[0] != S.shape[0]:
        raise GridMismatchError("strategy and capitalizations on different grids")
    w = to_market_weights(S)
    total = S.sum(axis=1)
    vs = (h * S).sum(axis=1)
    v_mu = (h * w).sum(axis=1)
    scale = np.maximum(np.abs(vs), 1e-300)
    value_res = float(np.max(np.abs(vs - total * v_mu) / scale))
    gains = left_riemann_integral(h, S)
    sf_scale = max(float(np.max(np.abs(vs))), 1e-300)
    sf_res = float(np.max(np.abs(vs - vs[0] - gains)) / sf_scale)
    return {"value_residual": value_res, "self_financing_residual": sf_res}
