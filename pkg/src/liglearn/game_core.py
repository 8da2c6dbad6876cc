"""Linear influence games: payoffs, exact PSNE enumeration, random games.

Joint actions are encoded as n-bit integers: bit ``i`` set means player
``i`` plays +1, bit clear means -1.  Every module uses this encoding.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterator

import numpy as np

from .errors import CapacityError

MAX_ENUM_PLAYERS = 24
_CHUNK_ROWS = 1 << 16


@dataclass(frozen=True, eq=False)
class Game:
    """A linear influence game ``(W, b)``.

    Player ``i`` receives payoff ``x_i * (sum_{j != i} W[i, j] x_j - b[i])``.
    ``W`` must have an exactly zero diagonal.
    """

    W: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        W = np.array(self.W, dtype=float)
        b = np.array(self.b, dtype=float).reshape(-1)
        if W.ndim != 2 or W.shape[0] != W.shape[1]:
            raise ValueError(f"W must be square, got shape {W.shape}")
        n = W.shape[0]
        if n < 1:
            raise ValueError("a game needs at least one player")
        if b.shape != (n,):
            raise ValueError(f"b must have length {n}, got {b.shape[0]}")
        if not (np.all(np.isfinite(W)) and np.all(np.isfinite(b))):
            raise ValueError("game parameters must be finite")
        if np.any(np.diag(W) != 0):
            raise ValueError("diag(W) must be exactly zero")
        W.flags.writeable = False
        b.flags.writeable = False
        object.__setattr__(self, "W", W)
        object.__setattr__(self, "b", b)

    @property
    def n(self) -> int:
        return self.W.shape[0]

    def player_params(self, i: int) -> np.ndarray:
        """Return ``v_i = (w_{i,-i}, -b_i)``, the vector a logistic fit estimates."""
        _check_player(i, self.n)
        return np.append(np.delete(self.W[i], i), -self.b[i])

    def scaled(self, c: float) -> "Game":
        return Game(c * self.W, c * self.b)

    def in_degree(self) -> int:
        return int(np.max(np.count_nonzero(self.W, axis=1)))

    def __eq__(self, other):
        if not isinstance(other, Game):
            return NotImplemented
        return np.array_equal(self.W, other.W) and np.array_equal(self.b, other.b)

    def __hash__(self):
        return hash((self.W.tobytes(), self.b.tobytes()))

    def __repr__(self):
        return f"Game(n={self.n}, k={self.in_degree()})"


@dataclass(frozen=True)
class PsneSet:
    """Sorted, duplicate-free tuple of equilibrium bit patterns."""

    actions: tuple
    n: int
    _members: frozenset = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        acts = tuple(sorted(set(int(a) for a in self.actions)))
        if acts and (acts[0] < 0 or acts[-1] >= (1 << self.n)):
            raise ValueError(f"joint action out of range for n={self.n}")
        object.__setattr__(self, "actions", acts)
        object.__setattr__(self, "_members", frozenset(acts))

    def __len__(self) -> int:
        return len(self.actions)

    def __iter__(self) -> Iterator[int]:
        return iter(self.actions)

    def __contains__(self, x) -> bool:
        return int(x) in self._members

    def as_array(self) -> np.ndarray:
        return np.array(self.actions, dtype=np.int64)

    def signs(self) -> np.ndarray:
        """Equilibria as a ``(|NE|, n)`` array of +-1 values."""
        return bits_to_signs(self.as_array(), self.n)


def _check_player(i: int, n: int) -> None:
    if not 0 <= i < n:
        raise IndexError(f"player index {i} out of range for n={n}")


def bits_to_signs(bits, n: int) -> np.ndarray:
    """Decode integer joint action(s) into +-1 vectors (last axis = players)."""
    bits = np.asarray(bits, dtype=np.int64)
    shifts = np.arange(n, dtype=np.int64)
    return (((bits[..., None] >> shifts) & 1) * 2 - 1).astype(np.int8)


def signs_to_bits(x) -> np.ndarray | int:
    """Encode +-1 vector(s) as integers; inverse of :func:`bits_to_signs`."""
    x = np.asarray(x)
    if not np.all(np.abs(x) == 1):
        raise ValueError("joint actions must have entries in {-1, +1}")
    weights = np.left_shift(np.int64(1), np.arange(x.shape[-1], dtype=np.int64))
    out = ((x > 0).astype(np.int64) * weights).sum(axis=-1)
    return int(out) if out.ndim == 0 else out


@lru_cache(maxsize=8)
def all_joint_actions(n: int) -> np.ndarray:
    """All ``2^n`` joint actions as a read-only ``(2^n, n)`` sign array, row r = bits r."""
    if n > MAX_ENUM_PLAYERS:
        raise CapacityError(f"cannot enumerate 2^{n} joint actions (limit n <= {MAX_ENUM_PLAYERS})")
    X = bits_to_signs(np.arange(1 << n, dtype=np.int64), n)
    X.flags.writeable = False
    return X


def _as_signs(x, n: int) -> np.ndarray:
    if isinstance(x, (int, np.integer)):
        if not 0 <= int(x) < (1 << n):
            raise ValueError(f"joint action {x} out of range for n={n}")
        return bits_to_signs(int(x), n)
    arr = np.asarray(x)
    if arr.shape != (n,) or not np.all(np.abs(arr) == 1):
        raise ValueError(f"expected a length-{n} vector of +-1 values")
    return arr


def payoff(game: Game, i: int, x) -> float:
    """Payoff of player ``i`` at joint action ``x`` (bits or sign vector).

    The inner sum runs over ``j`` in ascending order so repeated calls are
    bitwise reproducible.
    """
    n = game.n
    _check_player(i, n)
    xs = _as_signs(x, n)
    s = 0.0
    row = game.W[i]
    for j in range(n):
        if j != i:
            s += float(row[j]) * float(xs[j])
    return float(xs[i]) * (s - float(game.b[i]))


def payoff_matrix(game: Game, X: np.ndarray) -> np.ndarray:
    """Payoffs for every row of ``X`` (shape ``(r, n)``) and every player.

    Accumulates over opponents in ascending index order, matching
    :func:`payoff` value for value.
    """
    n = game.n
    Xf = np.asarray(X, dtype=float)
    s = np.zeros(Xf.shape, dtype=float)
    W = game.W
    for j in range(n):
        s += Xf[:, j, None] * W[:, j][None, :]
    return Xf * (s - game.b[None, :])


def _payoff_chunks(game: Game) -> Iterator[tuple[int, np.ndarray]]:
    n = game.n
    total = 1 << n
    shifts = np.arange(n, dtype=np.int64)
    for start in range(0, total, _CHUNK_ROWS):
        idx = np.arange(start, min(total, start + _CHUNK_ROWS), dtype=np.int64)
        X = ((idx[:, None] >> shifts) & 1) * 2 - 1
        yield start, payoff_matrix(game, X)


def enumerate_psne(game: Game) -> PsneSet:
    """Exact PSNE set by sweeping all ``2^n`` joint actions."""
    n = game.n
    if n > MAX_ENUM_PLAYERS:
        raise CapacityError(f"PSNE enumeration supports n <= {MAX_ENUM_PLAYERS}, got n={n}")
    found = []
    for start, P in _payoff_chunks(game):
        ok = np.all(P >= 0, axis=1)
        found.append(np.nonzero(ok)[0] + start)
    acts = np.concatenate(found) if found else np.empty(0, dtype=np.int64)
    return PsneSet(tuple(int(a) for a in acts), n)


def min_payoff_over_psne(game: Game, psne: PsneSet) -> float:
    """Smallest payoff over all equilibria and all players (``rho_min``)."""
    if len(psne) == 0:
        raise ValueError("minimum payoff is undefined for an empty PSNE set")
    P = payoff_matrix(game, psne.signs())
    return float(P.min())


def is_psne(game: Game, x) -> bool:
    return all(payoff(game, i, x) >= 0 for i in range(game.n))


def generate_game(n: int, k: int, rng: np.random.Generator) -> Game:
    """Random sparse game: each row gets ``k`` off-diagonal entries set to -1.

    Column positions per row come from a partial Fisher-Yates shuffle of the
    ``n - 1`` off-diagonal indices; biases are zero.
    """
    if n < 2 or not 1 <= k <= n - 1:
        raise ValueError(f"need 1 <= k <= n-1, got n={n}, k={k}")
    W = np.zeros((n, n))
    for i in range(n):
        pool = [j for j in range(n) if j != i]
        for t in range(k):
            r = t + int(rng.integers(len(pool) - t))
            pool[t], pool[r] = pool[r], pool[t]
        W[i, pool[:k]] = -1.0
    return Game(W, np.zeros(n))


def games_equivalent(g1: Game, g2: Game) -> bool:
    """Two games are equivalent iff they induce the same PSNE set."""
    if g1.n != g2.n:
        raise ValueError(f"games have different player counts ({g1.n} vs {g2.n})")
    return enumerate_psne(g1).actions == enumerate_psne(g2).actions


def feature_vector(x, i: int, n: int) -> np.ndarray:
    """``z_i(x) = (x_i x_{-i}, x_i)`` with opponents in ascending order."""
    _check_player(i, n)
    xs = _as_signs(x, n).astype(float)
    return np.append(xs[i] * np.delete(xs, i), xs[i])


def feature_matrix(X: np.ndarray, i: int) -> np.ndarray:
    """Stack :func:`feature_vector` over the rows of a sign array."""
    X = np.asarray(X, dtype=float)
    n = X.shape[1]
    _check_player(i, n)
    xi = X[:, i:i + 1]
    return np.hstack([xi * np.delete(X, i, axis=1), xi])


# -- plain-text game files ----------------------------------------------------

def format_game(game: Game) -> str:
    """Serialize as ``n k`` / n weight rows / one bias row, shortest-repr floats."""
    lines = [f"{game.n} {game.in_degree()}"]
    for row in game.W:
        lines.append(" ".join(repr(float(v)) for v in row))
    lines.append(" ".join(repr(float(v)) for v in game.b))
    return "\n".join(lines) + "\n"


def parse_game(text: str) -> Game:
    rows = [ln.split() for ln in text.strip().splitlines() if ln.strip()]
    if not rows or len(rows[0]) != 2:
        raise ValueError("game file must start with a line 'n k'")
    n = int(rows[0][0])
    if len(rows) != n + 2:
        raise ValueError(f"expected {n + 2} non-empty lines for n={n}, got {len(rows)}")
    W = np.array([[float(v) for v in r] for r in rows[1:n + 1]])
    b = np.array([float(v) for v in rows[n + 1]])
    return Game(W, b)


def write_game(game: Game, path) -> None:
    with open(path, "w") as fh:
        fh.write(format_game(game))


def read_game(path) -> Game:
    with open(path) as fh:
        return parse_game(fh.read())
