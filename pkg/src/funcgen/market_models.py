"""Market-weight path generators.

Randomness is keyed per path: ``(seed, path_index)`` seeds a Philox stream,
so ensembles can be split or parallelized without changing any path.

For power-of-two step counts the driving Brownian motion is built by
midpoint (bridge) refinement, drawing normals level by level. The first
``2**k`` draws fix the path on the ``2**k`` grid, so a path simulated at
``2**14`` steps restricted to every 16th point is the same Brownian path as
the one simulated at ``2**10`` steps. Mesh-refinement checks rely on this.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .path_core import MarketPath, TimeGrid

__all__ = [
    "MODEL_KINDS",
    "ModelSpec",
    "SimConfig",
    "to_market_weights",
    "brownian_paths",
    "simulate",
    "simulate_weights",
    "simulate_ensemble",
    "oscillator_a",
    "oscillator_path",
    "cubic_crossing_path",
]

MODEL_KINDS = (
    "gbm",
    "two_asset_martingale",
    "rank_atlas",
    "absorbed_brownian_pair",
    "oscillator_counterexample",
)
_TWO_ASSET = ("two_asset_martingale", "absorbed_brownian_pair", "oscillator_counterexample")


@dataclass(frozen=True)
class ModelSpec:
    """Parametric market model.

    Per-kind parameters (unused ones are ignored):

    - ``gbm``: ``drifts``, ``vols`` (per asset; default 0 and 0.2)
    - ``two_asset_martingale``: ``sigma`` in ``dmu = sigma mu (1-mu) dW``
    - ``rank_atlas``: ``gamma`` (common log drift), ``atlas_drift`` (drift
      handed to the smallest stock, offset by ``-atlas_drift/d`` for all),
      ``sigma``
    - ``absorbed_brownian_pair``: ``sigma``; ``mu_1 = B/2`` with
      ``B = 1 + sigma W`` stopped at 0 or 2
    - ``oscillator_counterexample``: ``n_max``
    """

    kind: str
    initial_caps: tuple = (1.0, 1.0)
    drifts: tuple | None = None
    vols: tuple | None = None
    sigma: float = 1.0
    gamma: float = 0.0
    atlas_drift: float = 1.0
    n_max: int = 100

    def __post_init__(self):
        if self.kind not in MODEL_KINDS:
            raise ValueError(f"unknown model kind {self.kind!r}; expected one of {MODEL_KINDS}")
        caps = tuple(float(c) for c in self.initial_caps)
        object.__setattr__(self, "initial_caps", caps)
        if len(caps) < 2:
            raise ValueError("need d >= 2 assets")
        if any(c <= 0 for c in caps):
            raise ValueError("initial capitalizations must be strictly positive")
        if self.kind in _TWO_ASSET and len(caps) != 2:
            raise ValueError(f"{self.kind} is a two-asset model")
        if self.kind == "absorbed_brownian_pair" and caps[0] != caps[1]:
            raise ValueError("absorbed_brownian_pair starts at mu = (1/2, 1/2)")
        for name in ("drifts", "vols"):
            v = getattr(self, name)
            if v is not None:
                v = tuple(float(x) for x in v)
                if len(v) != len(caps):
                    raise ValueError(f"{name} must have one entry per asset")
                object.__setattr__(self, name, v)
        if self.vols is not None and any(v < 0 for v in self.vols):
            raise ValueError("volatilities must be nonnegative")
        if self.sigma <= 0:
            raise ValueError("sigma must be positive")
        if self.atlas_drift <= 0:
            raise ValueError("atlas_drift must be positive")
        if self.n_max < 1:
            raise ValueError("n_max must be >= 1")

    @property
    def d(self) -> int:
        return len(self.initial_caps)


@dataclass(frozen=True)
class SimConfig:
    horizon: float = 1.0
    steps: int = 1024
    seed: int = 0
    ensemble_size: int = 1

    def __post_init__(self):
        if not self.horizon > 0:
            raise ValueError("horizon must be positive")
        if self.steps < 1:
            raise ValueError("steps must be >= 1")
        if self.ensemble_size < 1:
            raise ValueError("ensemble_size must be >= 1")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be an unsigned 64-bit integer")

    @property
    def grid(self) -> TimeGrid:
        return TimeGrid.uniform(self.horizon, self.steps)


def to_market_weights(caps) -> np.ndarray:
    """Normalize capitalizations row-wise onto the simplex."""
    s = np.asarray(caps, dtype=float)
    total = s.sum(axis=-1, keepdims=True)
    if np.any(total <= 0):
        raise ValueError("total capitalization vanishes")
    return s / total


def _rng(seed: int, path_index: int) -> np.random.Generator:
    ss = np.random.SeedSequence(entropy=seed, spawn_key=(path_index,))
    return np.random.Generator(np.random.Philox(ss))


def _is_pow2(n: int) -> bool:
    return n > 0 and n & (n - 1) == 0


def brownian_paths(config: SimConfig, indices: Sequence[int], d: int) -> np.ndarray:
    """Standard Brownian paths for the given path indices, shape ``(P, n+1, d)``."""
    n = config.steps
    T = config.horizon
    z = np.stack([_rng(config.seed, int(i)).standard_normal((n, d)) for i in indices])
    w = np.zeros((len(indices), n + 1, d))
    if not _is_pow2(n):
        np.cumsum(z * math.sqrt(T / n), axis=1, out=w[:, 1:])
        return w
    dt = T / n
    w[:, n] = math.sqrt(T) * z[:, 0]
    pos = 1
    stride = n
    while stride > 1:
        half = stride // 2
        mids = np.arange(half, n, stride)
        w[:, mids] = 0.5 * (w[:, mids - half] + w[:, mids + half]) + (
            0.5 * math.sqrt(stride * dt) * z[:, pos : pos + mids.size]
        )
        pos += mids.size
        stride = half
    return w


def _gbm(spec, t, w):
    s0 = np.asarray(spec.initial_caps)
    drifts = np.zeros(spec.d) if spec.drifts is None else np.asarray(spec.drifts)
    vols = np.full(spec.d, 0.2) if spec.vols is None else np.asarray(spec.vols)
    return s0 * np.exp((drifts - 0.5 * vols**2) * t[None, :, None] + vols * w)


def _two_asset_martingale(spec, t, w):
    total = sum(spec.initial_caps)
    mu = np.empty(w.shape[:2])
    mu[:, 0] = spec.initial_caps[0] / total
    dw = np.diff(w[..., 0], axis=1)
    for m in range(dw.shape[1]):
        # full truncation: coefficient on the clamped state, state kept in [0, 1]
        x = mu[:, m]
        mu[:, m + 1] = np.clip(x + spec.sigma * x * (1.0 - x) * dw[:, m], 0.0, 1.0)
    return total * np.stack([mu, 1.0 - mu], axis=-1)


def _rank_atlas(spec, t, w):
    d = spec.d
    x = np.empty(w.shape)
    x[:, 0] = np.log(spec.initial_caps)
    dw = np.diff(w, axis=1)
    dt = np.diff(t)
    base = spec.gamma - spec.atlas_drift / d
    for m in range(dt.size):
        xm = x[:, m]
        drift = np.full(xm.shape, base)
        drift[np.arange(xm.shape[0]), xm.argmin(axis=1)] += spec.atlas_drift
        x[:, m + 1] = xm + drift * dt[m] + spec.sigma * dw[:, m]
    return np.exp(x)


def _absorbed_pair(spec, t, w):
    b = 1.0 + spec.sigma * w[..., 0]
    out = (b <= 0.0) | (b >= 2.0)
    hit = out.any(axis=1)
    first = out.argmax(axis=1)
    for p in np.flatnonzero(hit):
        k = first[p]
        b[p, k:] = 0.0 if b[p, k] <= 0.0 else 2.0
    mu1 = b / 2.0
    return np.stack([mu1, 1.0 - mu1], axis=-1)


_SIMULATORS = {
    "gbm": _gbm,
    "two_asset_martingale": _two_asset_martingale,
    "rank_atlas": _rank_atlas,
    "absorbed_brownian_pair": _absorbed_pair,
}


def simulate_weights(spec: ModelSpec, config: SimConfig, indices: Iterable[int] | None = None):
    """Vectorized simulation of several paths.

    Returns ``(grid, caps, weights)`` with ``caps``/``weights`` of shape
    ``(P, n+1, d)``. Each path depends only on ``(spec, config, index)``.
    """
    if spec.kind == "oscillator_counterexample":
        raise ValueError("the oscillator path is deterministic; use oscillator_path")
    idx = list(range(config.ensemble_size)) if indices is None else [int(i) for i in indices]
    for i in idx:
        if not 0 <= i < config.ensemble_size:
            raise IndexError(f"path_index {i} outside ensemble of size {config.ensemble_size}")
    grid = config.grid
    w = brownian_paths(config, idx, spec.d)
    caps = _SIMULATORS[spec.kind](spec, grid.times, w)
    return grid, caps, to_market_weights(caps)


def simulate(spec: ModelSpec, config: SimConfig, path_index: int = 0) -> MarketPath:
    """One market path; deterministic in ``(spec, config, path_index)``."""
    if spec.kind == "oscillator_counterexample":
        t, x = oscillator_path(spec.n_max)
        mu = np.stack([x, 1.0 - x], axis=1)
        return MarketPath(TimeGrid(t), mu * sum(spec.initial_caps), mu, strict=False)
    grid, caps, weights = simulate_weights(spec, config, [path_index])
    return MarketPath(grid, caps[0], weights[0])


def simulate_ensemble(spec: ModelSpec, config: SimConfig, block: int = 512) -> list[MarketPath]:
    paths = []
    for start in range(0, config.ensemble_size, block):
        idx = range(start, min(start + block, config.ensemble_size))
        grid, caps, weights = simulate_weights(spec, config, idx)
        paths.extend(MarketPath(grid, c, w) for c, w in zip(caps, weights))
    return paths


def oscillator_a(n: int) -> int:
    """Smallest odd integer in ``[sqrt(n), 3 sqrt(n))``."""
    r = math.isqrt(n)
    if r * r < n:
        r += 1
    return r if r % 2 else r + 1


def oscillator_path(n_max: int):
    """Deterministic piecewise-linear oscillator sampled at its extrema.

    On ``[1 - 1/n, 1 - 1/(n+1)]`` the path makes ``a_n`` monotone legs between
    ``1/n`` and ``1/(n+1)`` (``a_n`` odd, so it ends at ``1/(n+1)``).

    Returns
    -------
    times, values : ndarray
    """
    if n_max < 1:
        raise ValueError("n_max must be >= 1")
    n = np.arange(1, n_max + 1)
    a = np.array([oscillator_a(int(k)) for k in n])
    start = 1.0 - 1.0 / n
    length = 1.0 / n - 1.0 / (n + 1)
    grp = np.repeat(np.arange(n_max), a)
    j = np.arange(grp.size) - np.repeat(np.cumsum(a) - a, a)
    times = start[grp] + j * (length[grp] / a[grp])
    hi = 1.0 / n
    lo = 1.0 / (n + 1)
    values = np.where(j % 2 == 0, hi[grp], lo[grp])
    times = np.append(times, 1.0 - 1.0 / (n_max + 1))
    values = np.append(values, 1.0 / (n_max + 1))
    return times, values


def cubic_crossing_path(steps: int, amplitude: float = 4.0) -> MarketPath:
    """Deterministic two-asset path ``mu_1 = 1/2 + a (t-1/4)(t-1/2)(t-3/4)`` on ``[0, 1]``.

    With ``steps`` a power of two the grid is dyadic, every value is exact in
    floating point, and the weights tie exactly at ``t = 1/4, 1/2, 3/4``.
    The ranks cross at each tie.
    """
    if not _is_pow2(steps) or steps < 4:
        raise ValueError("steps must be a power of two >= 4")
    if not 0 < amplitude < 0.5 / 0.09375:
        raise ValueError("amplitude must keep the weights inside (0, 1)")
    t = np.arange(steps + 1) / steps
    mu1 = 0.5 + amplitude * (t - 0.25) * (t - 0.5) * (t - 0.75)
    return MarketPath(TimeGrid(t), np.stack([mu1, 1.0 - mu1], axis=1),
                      np.stack([mu1, 1.0 - mu1], axis=1))
