import numpy as np
import pytest
from scipy.linalg import expm

from tomoent.fockcore import BipartiteState


def ladder(cutoff):
    """Truncated annihilation operator."""
    return np.diag(np.sqrt(np.arange(1, cutoff + 1)), 1)


def two_mode_ops(ca, cb):
    a = np.kron(ladder(ca), np.eye(cb + 1))
    b = np.kron(np.eye(ca + 1), ladder(cb))
    return a, b


def squeezed_by_expm(zeta, cutoff):
    """exp(zeta^* ab - zeta a^dag b^dag)|0;0> by dense matrix exponential."""
    a, b = two_mode_ops(cutoff, cutoff)
    gen = np.conj(zeta) * a @ b - zeta * a.conj().T @ b.conj().T
    vac = np.zeros((cutoff + 1) ** 2, dtype=complex)
    vac[0] = 1.0
    return BipartiteState((expm(gen) @ vac).reshape(cutoff + 1, cutoff + 1))


def random_state(rng, ca, cb=None, n_occupied=6):
    """Random normalized state supported on low Fock numbers."""
    cb = ca if cb is None else cb
    amps = np.zeros((ca + 1, cb + 1), dtype=complex)
    k = min(n_occupied, ca + 1, cb + 1)
    amps[:k, :k] = rng.normal(size=(k, k)) + 1j * rng.normal(size=(k, k))
    return BipartiteState(amps).normalize()


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


# acceptance criterion number -> (passed, detail); filled by test_acceptance.py
ACCEPTANCE = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
