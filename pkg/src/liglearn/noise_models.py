"""Observation models over joint actions: global and local noise.

Both models expose an exact pmf, a vectorized pmf over all ``2^n`` joint
actions, and an i.i.d. sampler returning integer-encoded joint actions.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from .errors import CapacityError
from .game_core import (
    MAX_ENUM_PLAYERS,
    PsneSet,
    all_joint_actions,
    bits_to_signs,
    signs_to_bits,
)


@dataclass(frozen=True)
class DistributionConstants:
    """Bounds on the data distribution used throughout the theory.

    ``tp_min`` and ``tp_max`` are the extreme non-equilibrium masses scaled
    by ``2^n - |NE|``; ``p_max`` is the largest equilibrium mass;
    ``f_ne = |NE| / 2^(n-1)``.
    """

    tp_min: float
    tp_max: float
    p_max: float
    f_ne: float
    assumption1_holds: bool


@dataclass(frozen=True)
class GlobalNoiseModel:
    """Mass ``q_g`` spread uniformly on the equilibria, ``1 - q_g`` uniformly elsewhere.

    ``strict=False`` skips the admissible-interval check on ``q_g``; it is
    meant for probing boundary behaviour only.
    """

    psne: PsneSet
    q_g: float
    strict: bool = True

    def __post_init__(self):
        n, size = self.psne.n, len(self.psne)
        if size == 0:
            raise ValueError("global noise model needs a nonempty PSNE set")
        if size == 1 << n:
            raise ValueError("global noise model needs at least one non-equilibrium action")
        lo = size / 2.0**n
        if self.strict and not lo < self.q_g <= 1.0:
            raise ValueError(
                f"q_g={self.q_g!r} outside admissible interval ({lo!r}, 1] "
                f"for |NE|={size}, n={n}")
        if not 0.0 <= self.q_g <= 1.0:
            raise ValueError(f"q_g={self.q_g!r} is not a probability")

    @property
    def n(self) -> int:
        return self.psne.n

    @property
    def eq_mass(self) -> float:
        return self.q_g / len(self.psne)

    @property
    def non_eq_mass(self) -> float:
        return (1.0 - self.q_g) / (2**self.n - len(self.psne))

    def pmf(self, x: int) -> float:
        return self.eq_mass if int(x) in self.psne else self.non_eq_mass

    def pmf_all(self) -> np.ndarray:
        _check_capacity(self.n)
        p = np.full(1 << self.n, self.non_eq_mass)
        p[self.psne.as_array()] = self.eq_mass
        return p

    def sample(self, m: int, rng: np.random.Generator) -> np.ndarray:
        if m < 1:
            raise ValueError("need at least one sample")
        eq = self.psne.as_array()
        out = np.empty(m, dtype=np.int64)
        from_eq = rng.random(m) < self.q_g
        k = int(from_eq.sum())
        out[from_eq] = eq[rng.integers(len(eq), size=k)]
        # rejection over the full space; acceptance >= 1/2 for nontrivial games
        todo = np.flatnonzero(~from_eq)
        while todo.size:
            cand = rng.integers(1 << self.n, size=todo.size, dtype=np.int64)
            ok = ~np.isin(cand, eq)
            out[todo[ok]] = cand[ok]
            todo = todo[~ok]
        return out


@dataclass(frozen=True, eq=False)
class LocalNoiseModel:
    """Uniform equilibrium, then each player's action kept with probability ``q_i``."""

    psne: PsneSet
    q: np.ndarray

    def __post_init__(self):
        q = np.array(self.q, dtype=float).reshape(-1)
        if q.size == 1:
            q = np.full(self.psne.n, float(q[0]))
        if q.shape != (self.psne.n,):
            raise ValueError(f"need {self.psne.n} per-player q values, got {q.size}")
        if len(self.psne) == 0:
            raise ValueError("local noise model needs a nonempty PSNE set")
        if not np.all((q > 0.5) & (q <= 1.0)):
            raise ValueError("every q_i must lie in (0.5, 1]")
        q.flags.writeable = False
        object.__setattr__(self, "q", q)

    @property
    def n(self) -> int:
        return self.psne.n

    def log_pmf(self, X: np.ndarray) -> np.ndarray:
        """Log-probabilities for sign rows ``X`` via log-sum-exp over equilibria."""
        Y = self.psne.signs()
        with np.errstate(divide="ignore"):
            log_keep, log_flip = np.log(self.q), np.log1p(-self.q)
        agree = X[:, None, :] == Y[None, :, :]
        terms = np.where(agree, log_keep, log_flip).sum(axis=2)
        return logsumexp(terms, axis=1) - np.log(len(Y))

    def pmf(self, x: int) -> float:
        X = bits_to_signs(np.array([int(x)]), self.n)
        return float(np.exp(self.log_pmf(X))[0])

    def pmf_all(self) -> np.ndarray:
        _check_capacity(self.n)
        X = all_joint_actions(self.n)
        out = np.empty(X.shape[0])
        step = max(1, (1 << 20) // (len(self.psne) * self.n))
        for s in range(0, X.shape[0], step):
            out[s:s + step] = np.exp(self.log_pmf(X[s:s + step]))
        return out

    def sample(self, m: int, rng: np.random.Generator) -> np.ndarray:
        if m < 1:
            raise ValueError("need at least one sample")
        eq = self.psne.as_array()
        y = eq[rng.integers(len(eq), size=m)]
        flips = rng.random((m, self.n)) < (1.0 - self.q)[None, :]
        mask = (flips.astype(np.int64) << np.arange(self.n, dtype=np.int64)).sum(axis=1)
        return y ^ mask


def _check_capacity(n: int) -> None:
    if n > MAX_ENUM_PLAYERS:
        raise CapacityError(f"exhaustive pmf supports n <= {MAX_ENUM_PLAYERS}, got n={n}")


def pmf_global(model: GlobalNoiseModel, x: int) -> float:
    return model.pmf(x)


def pmf_local(model: LocalNoiseModel, x: int) -> float:
    return model.pmf(x)


def sample(model, m: int, rng: np.random.Generator) -> np.ndarray:
    """Draw ``m`` i.i.d. joint actions (integer encoded) from either model."""
    return model.sample(m, rng)


def constants_global(model: GlobalNoiseModel) -> DistributionConstants:
    n, size = model.n, len(model.psne)
    tp = 1.0 - model.q_g
    p_max = model.q_g / size
    holds = tp > 0 and tp / (2**n - size) < p_max <= 1.0
    return DistributionConstants(tp, tp, p_max, size / 2.0 ** (n - 1), bool(holds))


def constants_local(model: LocalNoiseModel) -> DistributionConstants:
    """Exhaustive scan of the local pmf for the distribution constants."""
    n, size = model.n, len(model.psne)
    p = model.pmf_all()
    in_ne = np.zeros(p.size, dtype=bool)
    in_ne[model.psne.as_array()] = True
    rest = 2**n - size
    if rest == 0:
        raise ValueError("every joint action is an equilibrium; constants undefined")
    off = p[~in_ne]
    tp_min, tp_max = rest * float(off.min()), rest * float(off.max())
    p_max = float(p[in_ne].max())
    holds = tp_min > 0 and tp_max / rest < float(p[in_ne].min()) and p_max <= 1.0
    return DistributionConstants(tp_min, tp_max, p_max, size / 2.0 ** (n - 1), bool(holds))


def distribution_constants(model) -> DistributionConstants:
    if isinstance(model, GlobalNoiseModel):
        return constants_global(model)
    return constants_local(model)


# -- dataset files -------------------------------------------------------------

def format_dataset(actions, n: int, model: str, seed: int) -> str:
    actions = np.asarray(actions, dtype=np.int64)
    X = bits_to_signs(actions, n)
    lines = [f"{n} {len(actions)} {model} {seed}"]
    lines.extend(" ".join(str(int(v)) for v in row) for row in X)
    return "\n".join(lines) + "\n"


def parse_dataset(text: str) -> tuple[np.ndarray, int, str, int]:
    """Inverse of :func:`format_dataset`; returns ``(actions, n, model, seed)``."""
    lines = [ln for ln in text.splitlines() if ln.strip()]
    head = lines[0].split()
    if len(head) != 4:
        raise ValueError("dataset header must be 'n m model seed'")
    n, m, model, seed = int(head[0]), int(head[1]), head[2], int(head[3])
    if len(lines) - 1 != m:
        raise ValueError(f"header declares {m} rows, found {len(lines) - 1}")
    X = np.array([[int(v) for v in ln.split()] for ln in lines[1:]], dtype=np.int64).reshape(m, n)
    return np.asarray(signs_to_bits(X), dtype=np.int64).reshape(m), n, model, seed
