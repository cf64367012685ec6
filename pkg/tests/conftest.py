"""Shared fixtures: expensive family members and parameters are session-scoped.

The acceptance tests each print one verdict line; the lines are replayed in
the terminal summary so a plain `pytest -v` run shows every criterion verdict
regardless of capture settings.
"""

import pytest
from gmpy2 import mpfr

from ccrenorm import (
    RigidRotationFamily,
    build_family,
    irrational_parameter,
)

ACCEPTANCE_LINES = []


@pytest.fixture(scope="session")
def record():
    """Collect one pass/fail line per acceptance criterion."""

    def _rec(line: str) -> None:
        ACCEPTANCE_LINES.append(line)
        print(line, flush=True)

    return _rec


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def arnold():
    """alpha=3, epsilon=0 member at 128 bits; reduces to the classical sine lift."""
    return build_family(3, 0, 128)


@pytest.fixture(scope="session")
def bent():
    """alpha=3, epsilon=0.3 member at 128 bits."""
    return build_family(3, mpfr("0.3"), 128)


@pytest.fixture(scope="session")
def rigid():
    return RigidRotationFamily(bits=128)


@pytest.fixture(scope="session")
def golden_cache():
    """(family id, prefix depth) -> golden-combinatorics parameter."""
    cache = {}

    def _theta(family, depth: int):
        key = (id(family), depth)
        if key not in cache:
            cache[key] = irrational_parameter(family, (1,) * depth, depth)
        return cache[key]

    return _theta


@pytest.fixture(scope="session")
def arnold_star(arnold, golden_cache):
    """Golden-combinatorics parameter of the epsilon=0 member, 15 CF entries."""
    return golden_cache(arnold, 15)


@pytest.fixture(scope="session")
def bent_star(bent, golden_cache):
    return golden_cache(bent, 15)
