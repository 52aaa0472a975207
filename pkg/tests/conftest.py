import itertools
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import strategies as st

from crossfree.ising import IsingModel, Term

SIGMA_X = np.array([[0.0, 1.0], [1.0, 0.0]])
# basis index bit 1 <-> spin +1, so sigma_z on one qubit is diag(-1, +1)
SIGMA_Z = np.diag([-1.0, 1.0])
IDENTITY = np.eye(2)


def single_site(op, q, n):
    """Operator ``op`` on qubit ``q``; qubit 0 is the least significant bit."""
    mats = [IDENTITY] * n
    mats[q] = op
    out = np.array([[1.0]])
    for mat in reversed(mats):
        out = np.kron(out, mat)
    return out


def kron_hamiltonian(model: IsingModel, lam: float) -> np.ndarray:
    """Dense H_P + lam H_B from Kronecker products, independent of the library path."""
    n = model.num_qubits
    dim = 1 << n
    H = float(model.offset) * np.eye(dim)
    for t in model.terms:
        op = np.eye(dim)
        for q in t.support:
            op = op @ single_site(SIGMA_Z, q, n)
        H += float(t.coeff) * op
    for q, d in enumerate(model.delta):
        H -= lam * float(d) * single_site(SIGMA_X, q, n)
    return H


def resum_energy(model: IsingModel, spins) -> Fraction:
    """Straight-line energy: explicit loops, no shared helpers."""
    total = Fraction(model.offset)
    for t in model.terms:
        p = 1
        for q in t.support:
            p = p * spins[q]
        total += t.coeff * p
    return total


def all_configs(n):
    return itertools.product((-1, 1), repeat=n)


def random_unit_model(rng: np.random.Generator, n: int, m: int, allow_h=True) -> IsingModel:
    supports = ([(i,) for i in range(n)] if allow_h else []) + list(itertools.combinations(range(n), 2))
    terms = []
    for _ in range(m):
        s = supports[rng.integers(len(supports))]
        terms.append(Term(s, int(rng.choice([-1, 1]))))
    return IsingModel(n, tuple(terms))


def random_rational_model(rng, n, m, with_triples=False) -> IsingModel:
    supports = [(i,) for i in range(n)] + list(itertools.combinations(range(n), 2))
    if with_triples and n >= 3:
        supports += list(itertools.combinations(range(n), 3))
    terms = []
    for _ in range(m):
        s = supports[rng.integers(len(supports))]
        c = Fraction(int(rng.integers(-7, 8)) or 1, int(rng.integers(1, 4)))
        terms.append(Term(s, c))
    return IsingModel(n, tuple(terms))


@st.composite
def unit_models(draw, max_n=5, max_m=8, min_m=0):
    n = draw(st.integers(1, max_n))
    supports = [(i,) for i in range(n)] + list(itertools.combinations(range(n), 2))
    m = draw(st.integers(min_m, max_m))
    terms = [Term(draw(st.sampled_from(supports)), draw(st.sampled_from([-1, 1]))) for _ in range(m)]
    return IsingModel(n, tuple(terms))


@st.composite
def rational_models(draw, max_n=5, max_m=8):
    n = draw(st.integers(1, max_n))
    supports = [(i,) for i in range(n)] + list(itertools.combinations(range(n), 2))
    if n >= 3:
        supports += list(itertools.combinations(range(n), 3))
    m = draw(st.integers(0, max_m))
    coeff = st.fractions(min_value=-4, max_value=4, max_denominator=6).filter(lambda c: c != 0)
    terms = [Term(draw(st.sampled_from(supports)), draw(coeff)) for _ in range(m)]
    return IsingModel(n, tuple(terms), offset=draw(st.fractions(-3, 3, max_denominator=4)))


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


# ---------------------------------------------------------------------------
# acceptance reporting: one line per criterion at the end of the run

_CRITERIA: dict[int, tuple[str, str, float]] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None or not (rep.when == "call" or rep.failed):
        return
    number, title = mark.args
    verdict = "PASS" if rep.passed else "FAIL"
    _CRITERIA[number] = (verdict, title, rep.duration)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_CRITERIA):
        verdict, title, secs = _CRITERIA[number]
        terminalreporter.write_line(f"criterion {number}: {verdict} {title} ({secs:.1f}s)")
