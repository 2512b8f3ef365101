"""Shared oracles and the acceptance summary hook."""

import itertools
import math

import numpy as np
import pytest
from hypothesis import settings

settings.register_profile("repro", derandomize=True, deadline=None)
settings.load_profile("repro")

ACCEPTANCE_LINES = []


def enumerate_experiments(y1, y0, N, n, m):
    """Every (treated outcomes, control outcomes) pair under complete randomization.

    Written with plain itertools so it shares no code with the library.
    """
    y1 = [float(v) for v in y1]
    y0 = [float(v) for v in y0]
    assert len(y1) == len(y0) == N
    for sampled in itertools.combinations(range(N), n):
        for treated in itertools.combinations(sampled, m):
            control = [i for i in sampled if i not in treated]
            yield [y1[i] for i in treated], [y0[i] for i in control]


def fmean(values):
    values = list(values)
    return math.fsum(values) / len(values)


def enumeration_variance(y1, y0, N, n, m):
    """Exact variance of the difference in means by brute-force enumeration."""
    taus = [fmean(t) - fmean(c) for t, c in enumerate_experiments(y1, y0, N, n, m)]
    mu = fmean(taus)
    return fmean((t - mu) ** 2 for t in taus)


def pop_var(v):
    mu = fmean(v)
    return fmean((x - mu) ** 2 for x in v)


def pop_cov(v, w):
    mv, mw = fmean(v), fmean(w)
    return fmean((a - mv) * (b - mw) for a, b in zip(v, w))


def valid_designs(N):
    """All (n, m) with m >= 2 and n - m >= 2 for a population of N."""
    return [(n, m) for n in range(4, N + 1) for m in range(2, n - 1)]


@pytest.fixture
def rng():
    return np.random.default_rng(20131205)


@pytest.fixture
def acceptance():
    def record(number, ok, detail):
        line = f"{'PASS' if ok else 'FAIL'}  criterion {number:>2}: {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.write_sep("=", "acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split("criterion")[1].split(":")[0])):
            terminalreporter.write_line(line)
