import numpy as np
import pytest

from reducing_atlas import BlaschkeProduct, ProductMap, build_monodromy, pair_orbits, structure_constants
from reducing_atlas.quadrature import QuadratureGrid

GENERIC_ZEROS = (0, 0.5, -0.3j)


def monomial(n):
    return BlaschkeProduct.monomial(n)


def generic_cubic():
    return BlaschkeProduct(GENERIC_ZEROS)


def mobius(a=0.5):
    return BlaschkeProduct((a,))


SYMBOLS = {
    "z2": lambda: monomial(2),
    "z3": lambda: monomial(3),
    "mobius": mobius,
    "generic": generic_cubic,
}


class Setup:
    """Symbol with its monodromy, atlas and algebra, built once per session."""

    def __init__(self, m):
        self.m = m
        self.rep = build_monodromy(m)
        self.atlas = pair_orbits(self.rep)
        self.alg = structure_constants(self.atlas)


_cache = {}


def setup_for(name):
    if name not in _cache:
        if name == "z2xz3":
            m = ProductMap((monomial(2), monomial(3)))
        else:
            m = SYMBOLS[name]()
        _cache[name] = Setup(m)
    return _cache[name]


@pytest.fixture(scope="session")
def grid():
    return QuadratureGrid(96, 256)


@pytest.fixture(scope="session")
def small_grid():
    return QuadratureGrid(48, 128)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# one line per acceptance criterion, echoed at the end of the pytest run
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
