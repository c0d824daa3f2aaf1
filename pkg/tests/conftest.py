import numpy as np
from hypothesis import settings, strategies as st

from freeot.measures import make_measure

settings.register_profile("default", deadline=None, max_examples=40)
settings.load_profile("default")


@st.composite
def measures(draw, min_atoms=1, max_atoms=8, lo=-3.0, hi=3.0):
    n = draw(st.integers(min_atoms, max_atoms))
    atoms = draw(st.lists(st.floats(lo, hi, allow_nan=False), min_size=n, max_size=n,
                          unique_by=lambda v: round(v, 6)))
    weights = draw(st.lists(st.floats(0.05, 1.0), min_size=len(atoms), max_size=len(atoms)))
    return make_measure(atoms, weights)


def positive_measures(**kw):
    return measures(lo=0.05, hi=3.0, **kw)


def rng_measure(rng, n, positive=False):
    atoms = rng.uniform(0.1, 2.0, n) if positive else rng.normal(size=n)
    return make_measure(atoms, rng.uniform(0.1, 1.0, n))


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import LINES
    except ImportError:
        return
    if LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(LINES, key=lambda s: int(s.split()[1])):
            terminalreporter.write_line(line)
