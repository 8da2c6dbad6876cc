import itertools

import numpy as np
import pytest

from liglearn.game_core import Game


def brute_payoff(W, b, i, x):
    """Plain-Python payoff, independent of the library's vectorized path."""
    total = 0.0
    for j in range(len(x)):
        if j != i:
            total += W[i][j] * x[j]
    return x[i] * (total - b[i])


def brute_psne(W, b):
    """Double-loop PSNE enumeration returning integer encodings."""
    n = len(b)
    found = []
    for x in itertools.product((-1, 1), repeat=n):
        if all(brute_payoff(W, b, i, x) >= 0 for i in range(n)):
            found.append(sum(1 << i for i in range(n) if x[i] == 1))
    return sorted(found)


def random_game(rng, n, density=0.5, bias=True, integer=False):
    W = rng.normal(size=(n, n)) * (rng.random((n, n)) < density)
    if integer:
        W = np.round(W * 2)
    np.fill_diagonal(W, 0.0)
    b = rng.normal(size=n) if bias else np.zeros(n)
    if integer:
        b = np.round(b)
    return Game(W, b)


@pytest.fixture
def rng():
    return np.random.default_rng(20161016)


ACCEPTANCE_LINES = []


@pytest.fixture
def report():
    """Record one pass/fail line per acceptance criterion."""
    def _report(number, ok, detail):
        line = f"criterion {number:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)
        return ok
    return _report


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
