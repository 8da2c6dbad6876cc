"""Command-line entry point: ``liglearn run|annotate|psne|gen``.

Exit status is 0 on success, 1 on usage errors and 2 on runtime or I/O
errors.
"""
from __future__ import annotations

import argparse
import logging
import sys
import time
from pathlib import Path

import numpy as np

from . import harness
from .errors import CapacityError
from .game_core import bits_to_signs, enumerate_psne, format_game, generate_game, read_game

EXIT_USAGE = 1
EXIT_RUNTIME = 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="liglearn", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="cmd", required=True, parser_class=_Parser)

    run = sub.add_parser("run", help="run a phase-transition sweep")
    run.add_argument("--config", help="key=value experiment file")
    run.add_argument("--n", help="player counts, comma separated")
    run.add_argument("--k", help="in-degrees, comma separated")
    run.add_argument("--noise", choices=["global", "local"])
    run.add_argument("--qg", type=float, help="global-noise signal level q_g")
    run.add_argument("--q", type=float, help="local-noise keep probability (all players)")
    run.add_argument("--delta", type=float)
    run.add_argument("--lambda-multiplier", type=float)
    run.add_argument("--c-grid", help="control parameter values, comma separated")
    run.add_argument("--C", dest="C", help="per-k constants, e.g. '1:10000,3:1000'")
    run.add_argument("--trials", type=int)
    run.add_argument("--seed", type=int)
    run.add_argument("--workers", type=int, default=1)
    run.add_argument("--out", help="output directory")
    run.add_argument("--annotate", action="store_true",
                     help="also write annotated.csv with theory columns")

    ann = sub.add_parser("annotate", help="add theory columns to a trials CSV")
    ann.add_argument("--in", dest="inp", required=True)
    ann.add_argument("--out", required=True)

    ps = sub.add_parser("psne", help="print the PSNE set of a game file")
    ps.add_argument("--game", required=True)
    ps.add_argument("--bits", action="store_true", help="print integer encodings only")

    gen = sub.add_parser("gen", help="print a random game file")
    gen.add_argument("--n", type=int, required=True)
    gen.add_argument("--k", type=int, required=True)
    gen.add_argument("--seed", type=int, default=0)
    return p


def _config_from_args(args) -> harness.ExperimentConfig:
    over = dict(
        n_list=harness._ints(args.n) if args.n else None,
        k_list=harness._ints(args.k) if args.k else None,
        noise=args.noise, q_g=args.qg, q=args.q, delta=args.delta,
        lambda_multiplier=args.lambda_multiplier,
        c_grid=harness._floats(args.c_grid) if args.c_grid else None,
        C_of_k=harness._C_map(args.C) if args.C else None,
        trials=args.trials, seed=args.seed, out=args.out,
    )
    if args.config:
        return harness.load_config(args.config, **over)
    return harness.ExperimentConfig(**{k: v for k, v in over.items() if v is not None})


def _cmd_run(args) -> int:
    try:
        cfg = _config_from_args(args)
    except (ValueError, KeyError) as exc:
        print(f"liglearn run: {exc}", file=sys.stderr)
        return EXIT_USAGE
    t0 = time.perf_counter()
    records = harness.run_sweep(cfg, write=True, workers=args.workers)
    out = Path(cfg.out)
    if args.annotate:
        rows = harness.annotate_theory(records)
        (out / "annotated.csv").write_text(harness.annotated_csv(rows))
    for row in harness.aggregate(records):
        print(f"n={row['n']:<3d} k={row['k']:<2d} c={row['c']:<6g} m={row['m']:<9d} "
              f"p={row['probability']:.3f}")
    print(f"{len(records)} trials in {time.perf_counter() - t0:.1f}s -> {out}/")
    return 0


def _cmd_annotate(args) -> int:
    rows = harness.annotate_theory(harness.read_trials(args.inp))
    Path(args.out).write_text(harness.annotated_csv(rows))
    return 0


def _cmd_psne(args) -> int:
    game = read_game(args.game)
    ne = enumerate_psne(game)
    for a in ne:
        if args.bits:
            print(a)
        else:
            print(" ".join(f"{int(v):+d}" for v in bits_to_signs(a, game.n)))
    if not args.bits:
        print(f"# {len(ne)} equilibria", file=sys.stderr)
    return 0


def _cmd_gen(args) -> int:
    try:
        game = generate_game(args.n, args.k, np.random.default_rng(args.seed))
    except ValueError as exc:
        print(f"liglearn gen: {exc}", file=sys.stderr)
        return EXIT_USAGE
    sys.stdout.write(format_game(game))
    return 0


COMMANDS = {"run": _cmd_run, "annotate": _cmd_annotate, "psne": _cmd_psne, "gen": _cmd_gen}


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.cmd](args)
    except (OSError, CapacityError, ValueError) as exc:
        print(f"liglearn {args.cmd}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
