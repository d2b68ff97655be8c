import itertools

import numpy as np
import pytest

from sdfstab.bench import REGISTRY_NAMES, benchmark_system
from sdfstab.polynomial import PolyField, PolyScalar
from sdfstab.system import System

#: criterion number -> (passed, detail); filled by test_acceptance.py
ACCEPTANCE_RESULTS: dict[int, tuple[bool, str]] = {}


def monomials(dim: int, lo: int, hi: int):
    return [e for e in itertools.product(range(hi + 1), repeat=dim) if lo <= sum(e) <= hi]


def random_scalar(rng, dim: int, lo: int = 0, hi: int = 3, density: float = 0.6) -> PolyScalar:
    terms = {e: float(rng.uniform(-1, 1)) for e in monomials(dim, lo, hi) if rng.random() < density}
    return PolyScalar(dim, terms)


def random_field(rng, dim: int, lo: int = 0, hi: int = 2) -> PolyField:
    return PolyField([random_scalar(rng, dim, lo, hi) for _ in range(dim)])


def random_system(rng, dim: int | None = None) -> System:
    """Random f (no constant terms), g, and V = positive quadratic + small quartic."""
    dim = dim or int(rng.integers(2, 4))
    f = random_field(rng, dim, lo=1, hi=3)
    g = random_field(rng, dim, lo=0, hi=1)
    xs = PolyScalar.variables(dim)
    V = sum((float(rng.uniform(0.5, 2.0)) * x ** 2 for x in xs), PolyScalar.zero(dim))
    V = V + random_scalar(rng, dim, lo=4, hi=4, density=0.3).scale(0.1)
    return System(f, g, V)


@pytest.fixture(scope="session")
def registry():
    return {name: benchmark_system(name) for name in REGISTRY_NAMES}


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE_RESULTS):
        ok, detail = ACCEPTANCE_RESULTS[k]
        terminalreporter.write_line(f"criterion {k}: {'PASS' if ok else 'FAIL'}  {detail}")
