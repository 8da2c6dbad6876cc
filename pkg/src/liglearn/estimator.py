"""Per-player l1-regularized logistic regression.

Each player's parameter vector ``v_i = (w_{i,-i}, -b_i)`` is fitted
independently by minimizing the mean logistic loss over the features
``z_i(x) = (x_i x_{-i}, x_i)`` plus ``lambda * ||v_i||_1``.

Datasets are stored as distinct feature rows with multiplicities: there are
at most ``2^n`` distinct joint actions, so this is exact and keeps the cost
per iteration independent of the sample count.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Union

import numpy as np
from scipy.special import expit

from .errors import SolverError
from .game_core import Game, bits_to_signs, feature_matrix


@dataclass(frozen=True, eq=False)
class DesignMatrix:
    """Feature rows ``z_i^(l)`` for one player, with row multiplicities.

    ``counts[l]`` is how many samples produced row ``l``; the empirical
    loss is the count-weighted mean.
    """

    Z: np.ndarray
    counts: np.ndarray = None

    def __post_init__(self):
        Z = np.atleast_2d(np.asarray(self.Z, dtype=float))
        if Z.shape[0] < 1:
            raise ValueError("design matrix needs at least one row")
        if not np.all(np.abs(Z) == 1):
            raise ValueError("feature entries must be +-1")
        c = np.ones(Z.shape[0]) if self.counts is None else np.asarray(self.counts, dtype=float)
        if c.shape != (Z.shape[0],) or np.any(c <= 0):
            raise ValueError("counts must be positive, one per row")
        object.__setattr__(self, "Z", Z)
        object.__setattr__(self, "counts", c)

    @property
    def m(self) -> int:
        return int(round(self.counts.sum()))

    @property
    def dim(self) -> int:
        return self.Z.shape[1]

    @property
    def weights(self) -> np.ndarray:
        return self.counts / self.counts.sum()

    @classmethod
    def from_actions(cls, actions, i: int, n: int) -> "DesignMatrix":
        """Compress integer joint actions into distinct rows for player ``i``."""
        acts = np.asarray(actions, dtype=np.int64).reshape(-1)
        if acts.size == 0:
            raise ValueError("dataset is empty")
        uniq, counts = np.unique(acts, return_counts=True)
        return cls(feature_matrix(bits_to_signs(uniq, n), i), counts)


@dataclass(frozen=True)
class SolverConfig:
    """Proximal-gradient settings.

    ``step0=None`` starts from ``1/L`` with ``L`` the curvature bound
    ``lambda_max(Z^T diag(w) Z) / 4``; later iterations start from a
    Barzilai-Borwein estimate and backtrack by ``shrink``.
    """

    lam: float = 0.0
    max_iters: int = 50_000
    tol: float = 1e-7
    step0: float | None = None
    shrink: float = 0.5
    accelerate: bool = False
    penalize_bias: bool = True
    norm_cap: float = 1e6

    def __post_init__(self):
        if not self.lam >= 0:
            raise ValueError("lambda must be >= 0")
        if not self.tol > 0:
            raise ValueError("tol must be > 0")
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        if not 0 < self.shrink < 1:
            raise ValueError("shrink must be in (0, 1)")

    def replace(self, **kw) -> "SolverConfig":
        from dataclasses import replace
        return replace(self, **kw)


@dataclass
class FitResult:
    v_hat: np.ndarray
    converged: bool
    iters: int
    kkt_residual: float
    final_objective: float
    objective_trace: list = field(default_factory=list, repr=False)


def _check(v, Z: DesignMatrix) -> np.ndarray:
    v = np.asarray(v, dtype=float).reshape(-1)
    if v.shape[0] != Z.dim:
        raise ValueError(f"parameter length {v.shape[0]} != feature dimension {Z.dim}")
    return v


def loss(v, Z: DesignMatrix) -> float:
    """Mean of ``log(1 + exp(-v^T z))`` over samples, evaluated stably."""
    v = _check(v, Z)
    t = Z.Z @ v
    return float(Z.weights @ np.logaddexp(0.0, -t))


def gradient(v, Z: DesignMatrix) -> np.ndarray:
    v = _check(v, Z)
    t = Z.Z @ v
    return -(Z.weights * expit(-t)) @ Z.Z


def eta(t):
    """Logistic curvature ``1 / (e^{t/2} + e^{-t/2})^2``."""
    return expit(t) * expit(-t)


def hessian(v, Z: DesignMatrix) -> np.ndarray:
    v = _check(v, Z)
    h = Z.weights * eta(Z.Z @ v)
    H = (Z.Z * h[:, None]).T @ Z.Z
    return 0.5 * (H + H.T)


def _penalty_mask(dim: int, penalize_bias: bool) -> np.ndarray:
    mask = np.ones(dim)
    if not penalize_bias:
        mask[-1] = 0.0
    return mask


def kkt_residual(v, grad, lam: float, penalize_bias: bool = True) -> float:
    """Largest violation of the l1 subgradient optimality conditions."""
    lam_j = lam * _penalty_mask(v.size, penalize_bias)
    nz = v != 0
    r = np.where(nz, np.abs(grad + lam_j * np.sign(v)), np.maximum(np.abs(grad) - lam_j, 0.0))
    return float(r.max()) if r.size else 0.0


def soft_threshold(x, t):
    return np.sign(x) * np.maximum(np.abs(x) - t, 0.0)


def fit_player(Z: DesignMatrix, cfg: SolverConfig, record_trace: bool = False) -> FitResult:
    """Minimize ``loss(v, Z) + lam * ||v||_1`` by proximal gradient from ``v = 0``.

    Each step backtracks until the quadratic upper model of the smooth part
    holds at the trial point, which makes the composite objective
    non-increasing.  With ``cfg.accelerate`` a FISTA extrapolation with
    function-value restart is used instead.
    """
    d = Z.dim
    X, w = Z.Z, Z.weights
    lam_j = cfg.lam * _penalty_mask(d, cfg.penalize_bias)

    def smooth(v):
        t = X @ v
        return float(w @ np.logaddexp(0.0, -t)), -(w * expit(-t)) @ X

    def total(f, v):
        return f + float(lam_j @ np.abs(v))

    if cfg.step0 is None:
        L = float(np.linalg.eigvalsh((X * w[:, None]).T @ X)[-1]) / 4.0
        step = 1.0 / max(L, 1e-12)
    else:
        step = cfg.step0

    v = np.zeros(d)
    f, g = smooth(v)
    F = total(f, v)
    trace = [F] if record_trace else []
    res = kkt_residual(v, g, cfg.lam, cfg.penalize_bias)
    if res <= cfg.tol:
        return FitResult(v, True, 0, res, F, trace)

    y, fy, gy = v, f, g
    theta = 1.0
    prev_v = prev_g = None
    it = 0
    for it in range(1, cfg.max_iters + 1):
        base, fb, gb = (y, fy, gy) if cfg.accelerate else (v, f, g)
        if prev_v is not None and not cfg.accelerate:
            s, r = v - prev_v, g - prev_g
            sr = float(s @ r)
            if sr > 0:
                step = float(s @ s) / sr
        while True:
            cand = soft_threshold(base - step * gb, step * lam_j)
            fc, gc = smooth(cand)
            if not math.isfinite(fc):
                raise SolverError(f"non-finite objective at iteration {it}", iteration=it)
            diff = cand - base
            if fc <= fb + float(gb @ diff) + float(diff @ diff) / (2.0 * step) + 1e-15 * abs(fb):
                break
            step *= cfg.shrink
            if step < 1e-300:
                raise SolverError(f"step size underflow at iteration {it}", iteration=it)
        Fc = total(fc, cand)
        if cfg.accelerate:
            if Fc > F:
                # restart momentum from the current iterate
                theta = 1.0
                y, fy, gy = v, f, g
                continue
            theta_next = 0.5 * (1.0 + math.sqrt(1.0 + 4.0 * theta * theta))
            y = cand + ((theta - 1.0) / theta_next) * (cand - v)
            theta = theta_next
            fy, gy = smooth(y)
        prev_v, prev_g = v, g
        v, f, g, F = cand, fc, gc, Fc
        if record_trace:
            trace.append(F)
        res = kkt_residual(v, g, cfg.lam, cfg.penalize_bias)
        if res <= cfg.tol:
            return FitResult(v, True, it, res, F, trace)
        if float(np.abs(v).sum()) > cfg.norm_cap:
            warnings.warn(f"parameter norm exceeded {cfg.norm_cap:g}; data may be separable",
                          RuntimeWarning, stacklevel=2)
            break
    return FitResult(v, False, it, res, F, trace)


LambdaPolicy = Union[float, Callable[[int, int], float]]


def fit_players(data, n: int, lambda_policy: LambdaPolicy, cfg: SolverConfig | None = None):
    """Fit every player independently; returns one :class:`FitResult` per player."""
    acts = np.asarray(data, dtype=np.int64).reshape(-1)
    if acts.size == 0:
        raise ValueError("dataset is empty")
    cfg = cfg or SolverConfig()
    lam = lambda_policy(acts.size, n) if callable(lambda_policy) else float(lambda_policy)
    cfg = cfg.replace(lam=lam)
    uniq, counts = np.unique(acts, return_counts=True)
    X = bits_to_signs(uniq, n)
    fits = []
    for i in range(n):
        Z = DesignMatrix(feature_matrix(X, i), counts)
        try:
            fits.append(fit_player(Z, cfg))
        except SolverError as exc:
            raise SolverError(f"player {i}: {exc}", iteration=exc.iteration, player=i) from exc
    return fits


def assemble_game(fits, n: int) -> Game:
    """Build ``(W_hat, b_hat)`` from per-player parameter vectors."""
    W = np.zeros((n, n))
    b = np.zeros(n)
    for i, fit in enumerate(fits):
        v = fit.v_hat if isinstance(fit, FitResult) else np.asarray(fit)
        W[i, np.arange(n) != i] = v[:-1]
        b[i] = -v[-1]
    return Game(W, b)


def fit_game(data, n: int, lambda_policy: LambdaPolicy, cfg: SolverConfig | None = None) -> Game:
    return assemble_game(fit_players(data, n, lambda_policy, cfg), n)


def lambda_schedule(m: int, n: int, delta: float, multiplier: float = 1.0) -> float:
    """``multiplier * sqrt((2/m) log(2n/delta))``."""
    if m < 1 or n < 1:
        raise ValueError("m and n must be positive")
    if not 0 < delta < 1:
        raise ValueError("delta must lie in (0, 1)")
    if not multiplier > 0:
        raise ValueError("multiplier must be positive")
    return multiplier * math.sqrt((2.0 / m) * math.log(2.0 * n / delta))
