import numpy as np
import pytest

from natnet.network import Coupling, Dephasing, Injection, Mode, NetworkSpec, Sink


def random_spec(rng, n_modes=None, n_th_max=0.2):
    """A connected random network with injection at 0 and a sink elsewhere."""
    n = n_modes or int(rng.integers(2, 5))
    edges = {(int(rng.integers(0, k)), k) for k in range(1, n)}
    for i in range(n):
        for j in range(i + 1, n):
            if rng.random() < 0.3:
                edges.add((i, j))
    couplings = tuple(
        Coupling(i, j, float(rng.choice([-1, 1]) * rng.uniform(0.3, 2.0))) for i, j in sorted(edges)
    )
    return NetworkSpec(
        modes=tuple(Mode(i, 0.0 if i == 0 else float(rng.uniform(-3, 3))) for i in range(n)),
        couplings=couplings,
        dephasing=tuple(Dephasing(i, float(rng.uniform(0, 2))) for i in range(n) if rng.random() < 0.7),
        injection=Injection(0, float(rng.uniform(0.05, 1.0)), float(rng.uniform(0.0, n_th_max))),
        sink=Sink(int(rng.integers(1, n)), float(rng.uniform(0.1, 3.0))),
        label="random",
    )


def random_density_matrix(rng, d, hermitian_only=False):
    X = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    if hermitian_only:
        return X + X.conj().T
    rho = X @ X.conj().T
    return rho / np.trace(rho)


def spec_of(n, couplings=(), w=None, deph=(), inj=(0, 0.0, 0.0), sink=None):
    """Small hand-built network; tuples follow the dataclass field order."""
    w = w or [0.0] * n
    return NetworkSpec(
        modes=tuple(Mode(i, w[i]) for i in range(n)),
        couplings=tuple(Coupling(*c) for c in couplings),
        dephasing=tuple(Dephasing(*d) for d in deph),
        injection=Injection(*inj),
        sink=Sink(*(sink or (n - 1, 0.0))),
    )


@pytest.fixture
def rng():
    return np.random.default_rng(20240613)


#: One PASS/FAIL line per acceptance criterion, echoed in the terminal summary.
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
