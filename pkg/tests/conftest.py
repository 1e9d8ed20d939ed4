import numpy as np
import pytest
from hypothesis import settings, strategies as st

settings.register_profile("default", max_examples=40, deadline=None)
settings.load_profile("default")

seeds = st.integers(min_value=0, max_value=2**32 - 1)
dims = st.integers(min_value=2, max_value=4)

KET0 = np.array([1, 0], dtype=complex)
KET1 = np.array([0, 1], dtype=complex)
PLUS = np.array([1, 1], dtype=complex) / np.sqrt(2)
MINUS = np.array([1, -1], dtype=complex) / np.sqrt(2)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def random_two_time(rng, dim=None):
    from qtotal import randgen
    from qtotal.twotime import Evolution, TwoTimeExperiment

    dim = dim or int(rng.integers(2, 5))
    return TwoTimeExperiment(
        randgen.random_density(dim, rng),
        randgen.random_povm(dim, int(rng.integers(2, 4)), rng),
        Evolution(randgen.random_unitary(dim, rng)),
        randgen.random_povm(dim, int(rng.integers(2, 4)), rng),
    )


def random_ewf(rng):
    from qtotal import randgen
    from qtotal.composite import CompositeSpace, EwfExperiment
    from qtotal.twotime import Evolution

    d1 = d2 = 2
    n = d1 * d2
    space = CompositeSpace((("L1", d1), ("L2", d2)))
    sets = [randgen.random_povm(d, int(rng.integers(2, 4)), rng) for d in (d1, d2, d1, d2)]
    return EwfExperiment(randgen.random_density(n, rng), space, (sets[0], sets[1]), (sets[2], sets[3]),
                         Evolution(randgen.random_unitary(n, rng)))


# filled by test_acceptance; one line per criterion
ACCEPTANCE: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
