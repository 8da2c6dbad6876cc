"""Theoretical constants and bounds for exact PSNE recovery.

Everything here is computed exactly by sweeping all ``2^n`` joint actions,
so it is limited to small games (``n <= 16``).
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations

import numpy as np

from .errors import CapacityError, ConsistencyError
from .estimator import eta
from .game_core import (
    Game,
    all_joint_actions,
    enumerate_psne,
    feature_matrix,
    min_payoff_over_psne,
)
from .linalg import extreme_eigenvalues
from .noise_models import GlobalNoiseModel, distribution_constants

MAX_THEORY_PLAYERS = 16


@dataclass(frozen=True)
class TheoryConstants:
    c_min: float
    d_max: float
    kappa: float
    nu: float
    K: float
    rho_min: float
    k: int
    support: tuple = ()
    tp_min: float = float("nan")
    tp_max: float = float("nan")
    p_max: float = float("nan")
    f_ne: float = float("nan")
    assumption1_holds: bool = False

    @property
    def payoff_margin(self) -> float:
        """``5 C_min / D_max``, the payoff level the theory asks for."""
        return 5.0 * self.c_min / self.d_max

    @property
    def margin_strict(self) -> bool:
        return self.rho_min > self.payoff_margin

    @property
    def margin_weak(self) -> bool:
        return self.rho_min >= self.payoff_margin


@dataclass(frozen=True)
class RecoveryWindow:
    lambda_lo: float
    lambda_hi: float
    m_required: float
    m_branches: tuple
    window_nonempty: bool
    m_sufficient: bool

    def contains(self, lam: float) -> bool:
        return self.lambda_lo <= lam <= self.lambda_hi


@dataclass(frozen=True)
class FanoEnsemble:
    n: int
    k: int
    influential: tuple
    members: tuple


def _nu(kappa: float, eq_mass: float, tp_min: float, tp_max: float, f_ne: float) -> float:
    return kappa * eq_mass + (tp_max - tp_min) / (2.0 - f_ne) + f_ne * tp_min / (2.0 - f_ne)


def _player_matrices(game: Game, p: np.ndarray, i: int):
    v = game.player_params(i)
    S = np.flatnonzero(v)
    if S.size == 0:
        raise ValueError(f"player {i} has an empty support; restricted matrices are undefined")
    Z = feature_matrix(all_joint_actions(game.n), i)
    ZS = Z[:, S]
    scatter = (ZS * p[:, None]).T @ ZS
    hess = (ZS * (p * eta(Z @ v))[:, None]).T @ ZS
    return S, hess, scatter


def compute_constants(game: Game, model, i: int | None = None, k: int | None = None) -> TheoryConstants:
    """Exact ``C_min``, ``D_max``, ``kappa``, ``nu`` and ``K`` for a game and data model.

    With ``i`` given, the restricted Hessian and scatter matrices are those of
    player ``i``.  With ``i=None`` the constants are taken over all players
    (smallest ``C_min``, largest ``D_max``), which is what the recovery
    guarantee for the whole game needs.  ``k`` defaults to the support size
    (largest over players when ``i`` is None).
    """
    n = game.n
    if n > MAX_THEORY_PLAYERS:
        raise CapacityError(f"exact constants need n <= {MAX_THEORY_PLAYERS}, got n={n}")
    psne = model.psne
    if enumerate_psne(game).actions != psne.actions:
        raise ValueError("model PSNE set does not match the game")
    p = model.pmf_all()
    players = range(n) if i is None else [i]
    c_min, d_max, supp = math.inf, -math.inf, 0
    support = ()
    for j in players:
        S, H, D = _player_matrices(game, p, j)
        c_min = min(c_min, extreme_eigenvalues(H)[0])
        d_max = max(d_max, extreme_eigenvalues(D)[1])
        supp = max(supp, S.size)
        if i is not None:
            support = tuple(int(s) for s in S)
    k = supp if k is None else k
    rho = min_payoff_over_psne(game, psne)
    kappa = 1.0 / (1.0 + math.exp(rho))
    dc = distribution_constants(model)
    eq_mass = float(p[psne.as_array()].sum())
    nu = _nu(kappa, eq_mass, dc.tp_min, dc.tp_max, dc.f_ne)
    K = 5.0 * c_min**2 / (32.0 * k * d_max) - nu
    return TheoryConstants(
        c_min=c_min, d_max=d_max, kappa=kappa, nu=nu, K=K, rho_min=rho, k=k,
        support=support, tp_min=dc.tp_min, tp_max=dc.tp_max, p_max=dc.p_max,
        f_ne=dc.f_ne, assumption1_holds=dc.assumption1_holds)


def c_min_lower_bound(game: Game, model, i: int) -> float:
    """``eta(||v*||_1) 2^n tp_min / (2^n - |NE|)``."""
    dc = distribution_constants(model)
    v = game.player_params(i)
    n = game.n
    return float(eta(np.abs(v).sum())) * 2.0**n * dc.tp_min / (2.0**n - len(model.psne))


def theorem1_window(constants: TheoryConstants, n: int, k: int, m: int, delta: float) -> RecoveryWindow:
    """Regularization interval and sample requirement of the recovery theorem."""
    log_a = math.log(6.0 * n * n / delta)
    log_b = math.log(3.0 * k * n / delta)
    slack = math.sqrt((2.0 / m) * log_a)
    lo = constants.nu + slack
    hi = 2.0 * constants.K + constants.nu - slack
    K = constants.K
    b1 = (2.0 / K**2) * log_a if K > 0 else math.inf
    b2 = (2.0 * k / constants.c_min) * log_b if constants.c_min > 0 else math.inf
    b3 = (4.0 * k / constants.tp_min) * log_b if constants.tp_min > 0 else math.inf
    req = max(b1, b2, b3)
    return RecoveryWindow(lo, hi, req, (b1, b2, b3), lo <= hi, m >= req)


# -- lower-bound ensemble -------------------------------------------------------

def fano_game(n: int, influential) -> Game:
    """Complete bipartite -1 influence from ``influential`` to everyone else.

    Influential players get bias +1; the rest get bias 0.
    """
    inf = sorted(set(int(i) for i in influential))
    if not inf or len(inf) >= n:
        raise ValueError("need 1 <= |influential| < n")
    W = np.zeros((n, n))
    b = np.zeros(n)
    rest = [j for j in range(n) if j not in inf]
    for j in rest:
        W[j, inf] = -1.0
    b[inf] = 1.0
    return Game(W, b)


def build_fano_ensemble(n: int, k: int, cap: int, rng: np.random.Generator) -> FanoEnsemble:
    """One game per ``k``-subset of players, or ``cap`` distinct random subsets."""
    if not 1 <= k < n:
        raise ValueError(f"need 1 <= k < n, got n={n}, k={k}")
    total = math.comb(n, k)
    if total <= cap:
        subsets = [tuple(s) for s in combinations(range(n), k)]
    else:
        seen = set()
        while len(seen) < cap:
            seen.add(tuple(sorted(int(v) for v in rng.choice(n, size=k, replace=False))))
        subsets = sorted(seen)
    members = tuple(fano_game(n, s) for s in subsets)
    if n <= MAX_THEORY_PLAYERS:
        sets = set()
        for s, g in zip(subsets, members):
            ne = enumerate_psne(g)
            expected = sum(1 << j for j in range(n) if j not in s)
            if ne.actions != (expected,):
                raise ConsistencyError(f"ensemble member {s} has PSNE set {ne.actions}")
            sets.add(ne.actions)
        if len(sets) != len(members):
            raise ConsistencyError("ensemble PSNE sets are not pairwise distinct")
    return FanoEnsemble(n, k, tuple(subsets), members)


def fano_kl(n: int, q: float) -> float:
    """Per-sample KL between global-noise laws of two distinct ensemble members."""
    if not 0 < q < 1:
        raise ValueError("q must lie in (0, 1)")
    if not 1 <= n <= 30:
        raise ValueError("n must lie in [1, 30]")
    N = 2.0**n
    return (N * q - 1.0) / (N - 1.0) * (math.log(q) - math.log((1.0 - q) / (N - 1.0)))


def fano_sample_bound(n: int, k: int) -> float:
    """Sample count below which any decoder errs with probability >= 1/2."""
    if not 1 <= k < n:
        raise ValueError(f"need 1 <= k < n, got n={n}, k={k}")
    return (k * math.log(n) - k * math.log(k) - 2.0 * math.log(2.0)) / (2.0 * math.log(2.0))


def fano_model(game: Game, q: float, strict: bool = True) -> GlobalNoiseModel:
    return GlobalNoiseModel(enumerate_psne(game), q, strict=strict)
