"""Phase-transition experiments: sample, fit, check PSNE recovery, aggregate.

Every trial derives its own seed from ``(master seed, n, k, c, trial)``
through :class:`numpy.random.SeedSequence`, so sweeps are reproducible and
trials are independent of execution order.
"""
from __future__ import annotations

import csv
import io
import logging
import math
import struct
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from itertools import product
from pathlib import Path

import numpy as np

from .errors import SolverError
from .estimator import SolverConfig, assemble_game, fit_players, lambda_schedule
from .game_core import Game, enumerate_psne, games_equivalent, generate_game, min_payoff_over_psne
from .noise_models import GlobalNoiseModel, LocalNoiseModel
from .theory import (
    MAX_THEORY_PLAYERS,
    TheoryConstants,
    compute_constants,
    fano_sample_bound,
    theorem1_window,
)

log = logging.getLogger(__name__)

MAX_REDRAWS = 100
DEFAULT_C_GRID = {
    "global": tuple(x / 4 for x in range(0, 8)),
    "local": tuple(x / 4 for x in range(-4, 5)),
}


def default_C(k: int) -> float:
    return 10000.0 if k == 1 else 1000.0


@dataclass
class ExperimentConfig:
    n_list: list = field(default_factory=lambda: [10])
    k_list: list = field(default_factory=lambda: [1])
    noise: str = "global"
    q_g: float = 0.01
    q: float = 0.6
    delta: float = 0.01
    lambda_multiplier: float = 1.0
    c_grid: list | None = None
    C_of_k: dict = field(default_factory=dict)
    trials: int = 40
    seed: int = 7
    out: str = "results"

    def __post_init__(self):
        if self.noise not in ("global", "local"):
            raise ValueError(f"noise must be 'global' or 'local', got {self.noise!r}")
        if self.c_grid is None:
            self.c_grid = list(DEFAULT_C_GRID[self.noise])
        if not self.c_grid:
            raise ValueError("c_grid must be nonempty")
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if not 0 < self.delta < 1:
            raise ValueError("delta must lie in (0, 1)")
        for n, k in product(self.n_list, self.k_list):
            if not 1 <= k <= n - 1:
                raise ValueError(f"invalid (n, k) = ({n}, {k})")

    def C(self, k: int) -> float:
        return float(self.C_of_k.get(k, default_C(k)))

    def noise_param(self) -> float:
        return self.q_g if self.noise == "global" else self.q


def _floats(text: str) -> list:
    return [float(v) for v in text.replace(",", " ").split()]


def _ints(text: str) -> list:
    return [int(v) for v in text.replace(",", " ").split()]


def _C_map(text: str) -> dict:
    out = {}
    for item in text.replace(",", " ").split():
        k, _, C = item.partition(":")
        out[int(k)] = float(C)
    return out


_CONFIG_KEYS = {
    "n": ("n_list", _ints), "n_list": ("n_list", _ints),
    "k": ("k_list", _ints), "k_list": ("k_list", _ints),
    "noise": ("noise", str), "q_g": ("q_g", float), "qg": ("q_g", float),
    "q": ("q", float), "delta": ("delta", float),
    "lambda_multiplier": ("lambda_multiplier", float),
    "c_grid": ("c_grid", _floats), "C": ("C_of_k", _C_map), "C_of_k": ("C_of_k", _C_map),
    "trials": ("trials", int), "seed": ("seed", int), "out": ("out", str),
}


def parse_config(text: str, **overrides) -> ExperimentConfig:
    """Parse ``key = value`` lines; ``#`` comments and ``[section]`` headers are ignored.

    List values are comma or space separated; ``C`` maps in-degree to its
    constant as ``1:10000, 3:1000``.
    """
    kw = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line or (line.startswith("[") and line.endswith("]")):
            continue
        key, sep, value = line.partition("=")
        key, value = key.strip(), value.strip().strip('"').strip("'")
        if not sep or key not in _CONFIG_KEYS:
            raise ValueError(f"config line {lineno}: cannot parse {raw!r}")
        name, conv = _CONFIG_KEYS[key]
        kw[name] = conv(value)
    kw.update({k: v for k, v in overrides.items() if v is not None})
    return ExperimentConfig(**kw)


def load_config(path, **overrides) -> ExperimentConfig:
    with open(path) as fh:
        return parse_config(fh.read(), **overrides)


@dataclass
class TrialRecord:
    n: int
    k: int
    c: float
    trial: int
    seed: int
    noise: str
    noise_param: float
    delta: float
    m: int
    m_clamped: bool
    lam: float
    recovered: bool
    rho_min: float
    psne_size: int
    redraws: int
    max_iters: int
    converged: bool
    error: str = ""
    wall_time: float = field(default=0.0, compare=False)


TRIAL_COLUMNS = [f.name for f in fields(TrialRecord) if f.name != "wall_time"]
AGGREGATE_COLUMNS = ["n", "k", "c", "m", "trials", "recovered_count", "probability"]


def trial_seed(master: int, n: int, k: int, c: float, trial: int) -> int:
    """64-bit seed for one trial; ``c`` enters through its IEEE-754 bit pattern."""
    c_bits = struct.unpack("<Q", struct.pack("<d", float(c)))[0]
    ss = np.random.SeedSequence([master & (2**64 - 1), n, k, c_bits, trial])
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def sample_count(C: float, c: float, k: int, n: int, delta: float) -> tuple[int, bool]:
    """``floor(C 10^c k^2 log(6 n^2 / delta))``, clamped to at least one."""
    m = math.floor(C * 10.0**c * k * k * math.log(6.0 * n * n / delta))
    return (m, False) if m >= 1 else (1, True)


def make_model(psne, noise: str, param: float):
    if noise == "global":
        return GlobalNoiseModel(psne, param)
    return LocalNoiseModel(psne, np.full(psne.n, param))


def draw_instance(n: int, k: int, noise: str, param: float, rng: np.random.Generator):
    """Draw a game with a nonempty PSNE set, positive minimum payoff and a
    valid noise model.  Returns ``(game, psne, model, redraws)``; the game is
    None if ``MAX_REDRAWS`` attempts fail."""
    for redraws in range(MAX_REDRAWS + 1):
        game = generate_game(n, k, rng)
        psne = enumerate_psne(game)
        if len(psne) == 0 or min_payoff_over_psne(game, psne) <= 0:
            continue
        try:
            model = make_model(psne, noise, param)
        except ValueError:
            continue
        return game, psne, model, redraws
    return None, None, None, MAX_REDRAWS


def run_trial(config: ExperimentConfig, n: int, k: int, c: float, trial: int,
              solver: SolverConfig | None = None) -> TrialRecord:
    t0 = time.perf_counter()
    seed = trial_seed(config.seed, n, k, c, trial)
    rng = np.random.default_rng(seed)
    m, clamped = sample_count(config.C(k), c, k, n, config.delta)
    lam = lambda_schedule(m, n, config.delta, config.lambda_multiplier)
    param = config.noise_param()
    base = dict(n=n, k=k, c=c, trial=trial, seed=seed, noise=config.noise,
                noise_param=param, delta=config.delta, m=m, m_clamped=clamped, lam=lam)
    game, psne, model, redraws = draw_instance(n, k, config.noise, param, rng)
    if game is None:
        return TrialRecord(**base, recovered=False, rho_min=float("nan"), psne_size=0,
                           redraws=redraws, max_iters=0, converged=False, error="degenerate",
                           wall_time=time.perf_counter() - t0)
    rho = min_payoff_over_psne(game, psne)
    data = model.sample(m, rng)
    error = ""
    try:
        fits = fit_players(data, n, lam, solver)
        learned = assemble_game(fits, n)
        recovered = games_equivalent(game, learned)
        iters = max(f.iters for f in fits)
        converged = all(f.converged for f in fits)
    except (SolverError, FloatingPointError, ValueError) as exc:
        log.warning("trial n=%d k=%d c=%g #%d failed: %s", n, k, c, trial, exc)
        recovered, iters, converged, error = False, 0, False, f"solver:{type(exc).__name__}"
    return TrialRecord(**base, recovered=recovered, rho_min=rho, psne_size=len(psne),
                       redraws=redraws, max_iters=iters, converged=converged, error=error,
                       wall_time=time.perf_counter() - t0)


def regenerate_instance(record) -> tuple[Game, object]:
    """Rebuild the true game and data model of a trial from its seed."""
    rng = np.random.default_rng(int(record["seed"]))
    game, _, model, _ = draw_instance(int(record["n"]), int(record["k"]), record["noise"],
                                      float(record["noise_param"]), rng)
    return game, model


def _run_task(args):
    return run_trial(*args)


def run_sweep(config: ExperimentConfig, write: bool = True,
              solver: SolverConfig | None = None, workers: int = 1) -> list[TrialRecord]:
    """Full factorial over ``(n, k, c, trial)``; optionally writes the CSVs.

    Records come back ordered by ``(n, k, c, trial)`` whatever ``workers`` is.
    """
    tasks = [(config, n, k, c, t, solver)
             for n, k, c in product(config.n_list, config.k_list, config.c_grid)
             for t in range(config.trials)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            records = list(pool.map(_run_task, tasks, chunksize=max(1, config.trials // 4)))
    else:
        records = [_run_task(t) for t in tasks]
    for row in aggregate(records):
        log.info("n=%d k=%d c=%g m=%d  p=%.3f", row["n"], row["k"], row["c"], row["m"],
                 row["probability"])
    if write:
        out = Path(config.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "trials.csv").write_text(trials_csv(records))
        (out / "aggregate.csv").write_text(aggregate_csv(records))
    return records


# -- CSV ------------------------------------------------------------------------

def _fmt(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _write_rows(columns, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\r\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([_fmt(row[c]) for c in columns])
    return buf.getvalue()


def trials_csv(records) -> str:
    return _write_rows(TRIAL_COLUMNS, (asdict(r) for r in records))


def aggregate(records) -> list[dict]:
    groups: dict = {}
    for r in records:
        groups.setdefault((r.n, r.k, r.c), []).append(r)
    rows = []
    for (n, k, c), rs in groups.items():
        hits = sum(r.recovered for r in rs)
        rows.append(dict(n=n, k=k, c=c, m=rs[0].m, trials=len(rs), recovered_count=hits,
                         probability=hits / len(rs)))
    return rows


def aggregate_csv(records) -> str:
    return _write_rows(AGGREGATE_COLUMNS, aggregate(records))


_BOOL = {"true": True, "false": False}


def read_trials(path) -> list[dict]:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    for row in rows:
        for key in ("n", "k", "trial", "seed", "m", "psne_size", "redraws", "max_iters"):
            row[key] = int(row[key])
        for key in ("c", "noise_param", "delta", "lam", "rho_min"):
            row[key] = float(row[key])
        for key in ("recovered", "converged", "m_clamped"):
            row[key] = _BOOL[row[key]]
    return rows


# -- theory annotation -------------------------------------------------------------

ANNOTATION_COLUMNS = [
    "c_min", "d_max", "kappa", "nu", "K", "lambda_lo", "lambda_hi", "m_required",
    "window_nonempty", "m_sufficient", "lambda_in_window", "assumption1_holds",
    "margin_strict", "premises_hold", "fano_bound", "theory_status",
]


def _annotation(row: dict, tc: TheoryConstants | None) -> dict:
    out = dict(row)
    n, k = int(row["n"]), int(row["k"])
    out["fano_bound"] = fano_sample_bound(n, k)
    if tc is None:
        for col in ANNOTATION_COLUMNS[:-2]:
            out[col] = ""
        out["theory_status"] = "not computed"
        return out
    win = theorem1_window(tc, n, k, int(row["m"]), float(row["delta"]))
    in_win = win.contains(float(row["lam"]))
    out.update(
        c_min=tc.c_min, d_max=tc.d_max, kappa=tc.kappa, nu=tc.nu, K=tc.K,
        lambda_lo=win.lambda_lo, lambda_hi=win.lambda_hi, m_required=win.m_required,
        window_nonempty=win.window_nonempty, m_sufficient=win.m_sufficient,
        lambda_in_window=in_win, assumption1_holds=tc.assumption1_holds,
        margin_strict=tc.margin_strict,
        premises_hold=bool(tc.K > 0 and in_win and win.m_sufficient
                           and tc.assumption1_holds and tc.margin_weak),
        theory_status="ok")
    return out


def annotate_theory(records, games=None, models=None) -> list[dict]:
    """Join trial rows with theory constants, the regularization window and
    the lower bound.  Games and models are regenerated from the trial seeds
    when not supplied; rows with ``n > 16`` are marked "not computed"."""
    rows = [asdict(r) if isinstance(r, TrialRecord) else dict(r) for r in records]
    cache: dict = {}
    out = []
    for idx, row in enumerate(rows):
        n, k = int(row["n"]), int(row["k"])
        tc = None
        if n <= MAX_THEORY_PLAYERS:
            if games is not None:
                game, model = games[idx], models[idx]
            elif row.get("error") != "degenerate":
                game, model = regenerate_instance(row)
            else:
                game = model = None
            if game is not None:
                key = (game, row["noise"], float(row["noise_param"]), k)
                if key not in cache:
                    cache[key] = compute_constants(game, model, None, k)
                tc = cache[key]
        out.append(_annotation(row, tc))
    return out


def annotated_csv(rows) -> str:
    columns = TRIAL_COLUMNS + ANNOTATION_COLUMNS
    return _write_rows(columns, rows)
