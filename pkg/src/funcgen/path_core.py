"""Discrete pathwise calculus on sampled vector paths.

Every stochastic integral here is a left-endpoint Riemann sum, so integrands
are treated as predictable: the value at ``t_m`` is held over ``[t_m, t_{m+1})``.
Arrays are laid out time-first, shape ``(n_times,)`` or ``(n_times, d)``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "GridMismatchError",
    "TimeGrid",
    "MarketPath",
    "RankedView",
    "LocalTimeSeries",
    "left_riemann_integral",
    "quadratic_covariation",
    "total_variation",
    "left_signum",
    "local_time",
    "rank_with_ties",
    "collision_local_time",
    "absorption_times",
    "ranked_decomposition_residual",
    "covariation_sum",
]

SUM_TOL = 1e-12


class GridMismatchError(ValueError):
    """Two series that must share a time grid have different lengths."""


@dataclass(frozen=True)
class TimeGrid:
    times: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        if t.ndim != 1 or t.size < 2:
            raise ValueError("a time grid needs at least 2 points")
        if t[0] != 0.0:
            raise ValueError("time grid must start at 0")
        if np.any(np.diff(t) <= 0):
            raise ValueError("time grid must be strictly increasing")
        t.setflags(write=False)
        object.__setattr__(self, "times", t)

    @classmethod
    def uniform(cls, horizon: float, steps: int) -> "TimeGrid":
        return cls(np.linspace(0.0, horizon, steps + 1))

    def __len__(self) -> int:
        return self.times.size

    def index_at(self, t: float) -> int:
        """First grid index whose time is >= ``t`` (clipped to the last point)."""
        i = int(np.searchsorted(self.times, t - 1e-12 * max(1.0, abs(t)), side="left"))
        return min(i, self.times.size - 1)


@dataclass(frozen=True)
class MarketPath:
    """Capitalizations ``S`` and market weights ``mu`` on a common grid.

    ``strict=False`` admits a starting point on the simplex boundary; only the
    deterministic oscillator counterexample needs that.
    """

    grid: TimeGrid
    caps: np.ndarray
    weights: np.ndarray
    strict: bool = field(default=True, compare=False)

    def __post_init__(self):
        caps = np.asarray(self.caps, dtype=float)
        w = np.asarray(self.weights, dtype=float)
        n = len(self.grid)
        if caps.ndim != 2 or w.shape != caps.shape or caps.shape[0] != n:
            raise GridMismatchError(
                f"caps {caps.shape} and weights {w.shape} must both be ({n}, d)"
            )
        if caps.shape[1] < 2:
            raise ValueError("a market needs d >= 2 assets")
        if np.any(caps < 0):
            raise ValueError("capitalizations must be nonnegative")
        if np.any(caps.sum(axis=1) <= 0):
            raise ValueError("total capitalization vanishes")
        if np.any(np.abs(w.sum(axis=1) - 1.0) > SUM_TOL):
            raise ValueError("weights do not sum to 1")
        if np.any(w < 0) or np.any(w > 1):
            raise ValueError("weights must lie in [0, 1]")
        if self.strict and np.any(w[0] <= 0):
            raise ValueError("initial weights must be strictly positive")
        caps.setflags(write=False)
        w.setflags(write=False)
        object.__setattr__(self, "caps", caps)
        object.__setattr__(self, "weights", w)

    @classmethod
    def from_weights(cls, times, weights, total: float = 1.0, strict: bool = True):
        w = np.asarray(weights, dtype=float)
        return cls(TimeGrid(np.asarray(times, dtype=float)), w * total, w, strict=strict)

    @property
    def times(self) -> np.ndarray:
        return self.grid.times

    @property
    def d(self) -> int:
        return self.weights.shape[1]

    @property
    def total(self) -> np.ndarray:
        return self.caps.sum(axis=1)

    def __len__(self) -> int:
        return len(self.grid)

    def subsample(self, stride: int) -> "MarketPath":
        """Every ``stride``-th grid point; the last point must be kept."""
        if (len(self) - 1) % stride:
            raise ValueError("stride must divide the number of steps")
        sl = slice(None, None, stride)
        return MarketPath(TimeGrid(self.times[sl]), self.caps[sl], self.weights[sl], self.strict)


@dataclass(frozen=True)
class RankedView:
    """Descending order statistics of a weight path.

    ``perm[t, l]`` is the (0-based) original index holding rank ``l`` at time
    ``t``; ``tie_counts[t, l]`` is the number of components equal to the
    rank-``l`` value.
    """

    ranked: np.ndarray
    perm: np.ndarray
    tie_counts: np.ndarray
    weights: np.ndarray


@dataclass(frozen=True)
class LocalTimeSeries:
    values: np.ndarray
    descriptor: str


def _as_series(x, name: str) -> np.ndarray:
    a = np.asarray(x, dtype=float)
    if a.ndim == 0:
        raise ValueError(f"{name} must be a series")
    return a


def _check_same_grid(a: np.ndarray, b: np.ndarray) -> None:
    if a.shape[0] != b.shape[0]:
        raise GridMismatchError(f"series lengths differ: {a.shape[0]} vs {b.shape[0]}")


def left_riemann_integral(integrand, path) -> np.ndarray:
    """Non-anticipating gains integral ``I(t_n) = sum_{m<n} <theta(t_m), dX(t_m)>``.

    Parameters
    ----------
    integrand : array_like, shape (n,) or (n, d)
    path : array_like or MarketPath
        The integrator; a ``MarketPath`` integrates against its weights.

    Returns
    -------
    ndarray, shape (n,)
        Starts at 0.
    """
    x = path.weights if isinstance(path, MarketPath) else _as_series(path, "path")
    th = _as_series(integrand, "integrand")
    _check_same_grid(th, x)
    if th.shape != x.shape:
        raise GridMismatchError(f"integrand shape {th.shape} != path shape {x.shape}")
    incr = th[:-1] * np.diff(x, axis=0)
    if incr.ndim == 2:
        incr = incr.sum(axis=1)
    out = np.empty(x.shape[0])
    out[0] = 0.0
    np.cumsum(incr, out=out[1:])
    return out


def quadratic_covariation(x, y) -> np.ndarray:
    """Realized bracket ``[X, Y](t_n) = sum_{m<n} dX_m dY_m``."""
    x = _as_series(x, "x")
    y = _as_series(y, "y")
    _check_same_grid(x, y)
    out = np.empty(x.shape[0])
    out[0] = 0.0
    np.cumsum(np.diff(x) * np.diff(y), out=out[1:])
    return out


def total_variation(x) -> float:
    x = _as_series(x, "x")
    return float(np.abs(np.diff(x)).sum())


def left_signum(x) -> np.ndarray:
    """Signum with ``sgn(0) = -1`` (left-continuous version)."""
    return np.where(np.asarray(x) > 0, 1.0, -1.0)


def _tanaka_increments(before: np.ndarray, after: np.ndarray) -> np.ndarray:
    # |X'| - |X| - sgn(X)(X' - X); nonnegative for either sign of X
    return np.abs(after) - np.abs(before) - left_signum(before) * (after - before)


def _monotone_from_increments(incr: np.ndarray) -> np.ndarray:
    out = np.empty(incr.size + 1)
    out[0] = 0.0
    np.cumsum(incr, out=out[1:])
    return np.maximum.accumulate(out)


def local_time(x, level: float) -> LocalTimeSeries:
    """Tanaka estimate of the local time of ``x`` at ``level``.

    ``L(t_n) = |X(t_n)-a| - |X(0)-a| - sum_{m<n} sgn(X(t_m)-a) dX(t_m)``, with
    ``sgn(0) = -1``, clamped to be nondecreasing. This is the full Tanaka
    term, i.e. twice the occupation-density normalization.
    """
    x = _as_series(x, "x")
    z = x - level
    return LocalTimeSeries(
        _monotone_from_increments(_tanaka_increments(z[:-1], z[1:])),
        f"level={level!r}",
    )


def rank_with_ties(weights) -> RankedView:
    """Rank each row descending; ties go to the smaller original index."""
    w = _as_series(weights, "weights")
    if w.ndim == 1:
        w = w[None, :]
    # stable sort on -w keeps index order among equal values
    perm = np.argsort(-w, axis=1, kind="stable")
    ranked = np.take_along_axis(w, perm, axis=1)
    tie_counts = (ranked[:, :, None] == w[:, None, :]).sum(axis=2)
    return RankedView(ranked, perm, tie_counts, w)


def collision_local_time(ranked: RankedView, k: int, l: int) -> LocalTimeSeries:
    """Collision local time between ranks ``k < l`` (1-based ranks).

    The ranked gap is nonnegative, so a Tanaka sum taken on it directly sees
    nothing unless the gap lands exactly on 0 at a grid point. Over each step
    the gap is instead unfolded along the two names that held ranks ``k`` and
    ``l`` at the left endpoint, and the Tanaka increment of that signed
    difference is accumulated. For ``d = 2`` this equals
    ``local_time(mu_1 - mu_2, 0)`` exactly.
    """
    d = ranked.ranked.shape[1]
    if not (1 <= k < l <= d):
        raise ValueError(f"need 1 <= k < l <= {d}, got k={k}, l={l}")
    w = ranked.weights
    a = ranked.perm[:-1, k - 1]
    b = ranked.perm[:-1, l - 1]
    steps = np.arange(w.shape[0] - 1)
    before = w[steps, a] - w[steps, b]
    after = w[steps + 1, a] - w[steps + 1, b]
    return LocalTimeSeries(
        _monotone_from_increments(_tanaka_increments(before, after)),
        f"collision({k},{l})",
    )


def absorption_times(path: MarketPath, eps: float = 0.0):
    """First grid times at which weights vanish or one weight takes everything.

    Returns ``(per_asset, first_zero, concentration)``; ``inf`` means never.
    """
    w = path.weights
    t = path.times

    def first(mask):
        hit = mask.any(axis=0)
        idx = mask.argmax(axis=0)
        return np.where(hit, t[idx], np.inf)

    per_asset = first(w <= eps)
    conc = first((w >= 1.0 - eps).any(axis=1)[:, None])[0]
    return per_asset, float(per_asset.min()), float(conc)


def ranked_decomposition_residual(path: MarketPath) -> np.ndarray:
    """Residual of the ranked-weight semimartingale decomposition, per rank.

    For rank ``l`` the residual subtracts from ``mu_(l)(t) - mu_(l)(0)`` the
    tie-averaged drive ``sum_i int (1/N_l) 1{mu_(l) = mu_i} dmu_i`` and the
    collision local-time terms. Integrands are evaluated at left endpoints,
    except that the multiplicity weight on a collision increment between
    ranks ``k < l`` is at least ``l - k + 1``: on the support of that local
    time those ranks coincide.

    Returns
    -------
    ndarray, shape (n, d)
    """
    rv = rank_with_ties(path.weights)
    w = path.weights
    n, d = w.shape
    dmu = np.diff(w, axis=0)
    ranked = rv.ranked
    N = rv.tie_counts[:-1].astype(float)

    # tie-averaged drive: for rank l, mean increment over names equal to mu_(l)
    eq = ranked[:-1, :, None] == w[:-1, None, :]
    drive = (eq * dmu[:, None, :]).sum(axis=2) / N

    lt_term = np.zeros((n - 1, d))
    for k in range(1, d + 1):
        for l in range(k + 1, d + 1):
            inc = np.diff(collision_local_time(rv, k, l).values)
            if not inc.any():
                continue
            lt_term[:, k - 1] += inc / np.maximum(N[:, k - 1], l - k + 1)
            lt_term[:, l - 1] -= inc / np.maximum(N[:, l - 1], l - k + 1)

    res = np.zeros((n, d))
    res[1:] = ranked[1:] - ranked[0] - np.cumsum(drive + lt_term, axis=0)
    return res


def covariation_sum(integrand, path: MarketPath) -> np.ndarray:
    """``-1/2 sum_i [theta_i, mu_i]`` on the grid; exploratory only.

    The double sum over all ``(i, j)`` vanishes identically on the simplex,
    so only the diagonal brackets are kept (this matches the smooth case).
    """
    th = _as_series(integrand, "integrand")
    _check_same_grid(th, path.weights)
    prod = (np.diff(th, axis=0) * np.diff(path.weights, axis=0)).sum(axis=1)
    out = np.zeros(th.shape[0])
    out[1:] = -0.5 * np.cumsum(prod)
    return out
