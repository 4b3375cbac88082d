"""Initial states, number-conserving Hamiltonians and exact time evolution.

Both Hamiltonians commute with the total number operator ``N = a^dag a + b^dag b``,
so they are block diagonal over the anti-diagonals ``m + n = N`` of the
amplitude matrix.  Each block is diagonalized once and evolution is applied
in the eigenbasis, which removes integrator error entirely.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from math import comb, factorial

import numpy as np
from scipy.linalg import block_diag
from scipy.special import gammaln

from .errors import ConvergenceError
from .fockcore import LEAKAGE_TOL, BipartiteState

# ---------------------------------------------------------------------------
# Special functions


def laguerre(m: int, x: float) -> float:
    """Laguerre polynomial L_m(x) by the three-term recurrence."""
    if m < 0:
        raise ValueError("Laguerre order must be >= 0")
    prev, cur = 1.0, 1.0 - x
    if m == 0:
        return prev
    for k in range(1, m):
        prev, cur = cur, ((2 * k + 1 - x) * cur - k * prev) / (k + 1)
    return cur


# ---------------------------------------------------------------------------
# Single-mode states


def _check_tail(tail: float, what: str, cutoff: int) -> None:
    if tail >= LEAKAGE_TOL:
        raise ConvergenceError(
            f"{what}: weight {tail:.3e} beyond cutoff {cutoff} (need < {LEAKAGE_TOL:g})"
        )


def coherent_state(alpha: complex, cutoff: int) -> np.ndarray:
    """Fock amplitudes of the coherent state |alpha>, renormalized after truncation."""
    k = np.arange(cutoff + 1)
    alpha = complex(alpha)
    if alpha == 0:
        vec = np.zeros(cutoff + 1, dtype=complex)
        vec[0] = 1.0
        return vec
    # log-magnitude form avoids factorial overflow
    mag = np.exp(-0.5 * abs(alpha) ** 2 + k * np.log(abs(alpha)) - 0.5 * gammaln(k + 1))
    vec = mag * np.exp(1j * k * np.angle(alpha))
    tail = max(1.0 - float(np.sum(mag**2)), 0.0)
    _check_tail(tail, f"coherent state alpha={alpha}", cutoff)
    return vec / np.linalg.norm(vec)


def pacs_unnormalized(alpha: complex, m: int, cutoff: int) -> np.ndarray:
    """Amplitudes of a^dag^m |alpha> (not normalized); entries below m vanish."""
    if m < 0:
        raise ValueError("number of added photons must be >= 0")
    alpha = complex(alpha)
    vec = np.zeros(cutoff + 1, dtype=complex)
    if m > cutoff:
        return vec
    # coefficient of |k+m> is e^{-|a|^2/2} a^k sqrt((k+m)!) / k!
    d = np.exp(-0.5 * abs(alpha) ** 2) * np.sqrt(float(factorial(m)))
    vec[m] = d
    for k in range(1, cutoff - m + 1):
        d = d * alpha * np.sqrt(k + m) / k
        vec[k + m] = d
    return vec


def pacs_norm_squared(alpha: complex, m: int) -> float:
    """<alpha| a^m a^dag^m |alpha> = m! L_m(-|alpha|^2)."""
    return float(factorial(m)) * laguerre(m, -abs(alpha) ** 2)


def pacs_state(alpha: complex, m: int, cutoff: int) -> np.ndarray:
    """Normalized m-photon-added coherent state."""
    vec = pacs_unnormalized(alpha, m, cutoff)
    expected = pacs_norm_squared(alpha, m)
    tail = max(1.0 - float(np.sum(np.abs(vec) ** 2)) / expected, 0.0)
    _check_tail(tail, f"photon-added coherent state alpha={alpha}, m={m}", cutoff)
    return vec / np.linalg.norm(vec)


def fock_state(n: int, cutoff: int) -> np.ndarray:
    if not 0 <= n <= cutoff:
        raise ConvergenceError(f"Fock state |{n}> does not fit under cutoff {cutoff}")
    vec = np.zeros(cutoff + 1, dtype=complex)
    vec[n] = 1.0
    return vec


# ---------------------------------------------------------------------------
# Two-mode states


def binomial_state(N: int, cutoff_a: int, cutoff_b: int | None = None) -> BipartiteState:
    """2^{-N/2} sum_n sqrt(C(N, n)) |N-n; n>, an eigenstate of the total number."""
    cutoff_b = cutoff_a if cutoff_b is None else cutoff_b
    if N < 0 or N > min(cutoff_a, cutoff_b):
        raise ConvergenceError(f"binomial state N={N} exceeds cutoffs ({cutoff_a}, {cutoff_b})")
    amps = np.zeros((cutoff_a + 1, cutoff_b + 1), dtype=complex)
    for n in range(N + 1):
        amps[N - n, n] = np.sqrt(comb(N, n) / 2.0**N)
    return BipartiteState(amps)


def two_mode_squeezed(zeta: complex, cutoff_a: int, cutoff_b: int | None = None) -> BipartiteState:
    """exp(zeta^* ab - zeta a^dag b^dag)|0;0> in Schmidt form."""
    cutoff_b = cutoff_a if cutoff_b is None else cutoff_b
    r, phi = abs(zeta), np.angle(zeta)
    K = min(cutoff_a, cutoff_b)
    x = np.tanh(r)
    tail = x ** (2 * (K + 1))
    _check_tail(tail, f"two-mode squeezed state zeta={zeta}", K)
    amps = np.zeros((cutoff_a + 1, cutoff_b + 1), dtype=complex)
    n = np.arange(K + 1)
    amps[n, n] = (-np.exp(1j * phi) * x) ** n / np.cosh(r)
    return BipartiteState(amps).normalize()


def product_state(vec_a, vec_b) -> BipartiteState:
    return BipartiteState.product(vec_a, vec_b)


# ---------------------------------------------------------------------------
# Hamiltonians


@dataclass(frozen=True)
class AtomFieldParams:
    """Field mode (A) coupled to a Kerr-nonlinear oscillator (B)."""

    omega_f: float = 1.0
    omega_a: float = 1.0
    gamma: float = 1.0
    g: float = 1.0

    def __post_init__(self):
        vals = (self.omega_f, self.omega_a, self.gamma, self.g)
        if not all(np.isfinite(vals)):
            raise ValueError("atom-field parameters must be finite")
        if self.g == 0:
            raise ValueError("coupling g must be nonzero")
        if self.gamma < 0:
            raise ValueError("Kerr strength gamma must be >= 0")


@dataclass(frozen=True)
class BECParams:
    """Two-site Bose-Hubbard dimer with well detuning omega1 and hopping lam."""

    omega0: float = 1.0
    omega1: float = 1.0
    u: float = 1.0
    lam: float = 1.0

    def __post_init__(self):
        if not all(np.isfinite((self.omega0, self.omega1, self.u, self.lam))):
            raise ValueError("BEC parameters must be finite")
        if self.lambda1 <= 0:
            raise ValueError("need omega1 or lam nonzero (lambda1 > 0)")

    @property
    def lambda1(self) -> float:
        return float(np.hypot(self.omega1, self.lam))

    @property
    def gamma_angle(self) -> float:
        return float(np.arccos(np.clip(self.omega1 / self.lambda1, -1.0, 1.0)))


@dataclass(frozen=True, eq=False)
class BlockHamiltonian:
    """Number-conserving Hamiltonian stored as one real-symmetric block per total N.

    Block ``N`` acts on ``|N - n; n>`` for ``n`` in ``block_range(N)``; it is the
    full (N+1)-dimensional block whenever ``N <= min(cutoffs)``.
    """

    blocks: tuple
    cutoff_a: int
    cutoff_b: int
    eigvals: tuple = field(init=False, repr=False)
    eigvecs: tuple = field(init=False, repr=False)

    def __post_init__(self):
        vals, vecs = [], []
        for h in self.blocks:
            h = np.asarray(h, dtype=float)
            e, v = np.linalg.eigh(h)
            for arr in (h, e, v):
                arr.setflags(write=False)
            vals.append(e)
            vecs.append(v)
        object.__setattr__(self, "eigvals", tuple(vals))
        object.__setattr__(self, "eigvecs", tuple(vecs))

    @property
    def n_max(self) -> int:
        return len(self.blocks) - 1

    def block_range(self, N: int) -> np.ndarray:
        return np.arange(max(0, N - self.cutoff_a), min(N, self.cutoff_b) + 1)

    def spectrum(self) -> np.ndarray:
        return np.concatenate(self.eigvals)

    def dense(self) -> np.ndarray:
        """Full matrix in the flattened (m, n) product basis, for cross-checks."""
        da, db = self.cutoff_a + 1, self.cutoff_b + 1
        H = np.zeros((da * db, da * db))
        for N, h in enumerate(self.blocks):
            n = self.block_range(N)
            flat = (N - n) * db + n
            H[np.ix_(flat, flat)] = h
        return H


def _block_hamiltonian(diag_fn, hop, n_max, cutoff_a, cutoff_b):
    cutoff_a = n_max if cutoff_a is None else cutoff_a
    cutoff_b = cutoff_a if cutoff_b is None else cutoff_b
    if n_max < 1:
        raise ValueError("n_max must be >= 1")
    if n_max > cutoff_a + cutoff_b:
        raise ValueError("n_max exceeds the largest representable total number")
    blocks = []
    for N in range(n_max + 1):
        n = np.arange(max(0, N - cutoff_a), min(N, cutoff_b) + 1)
        h = np.diag(diag_fn(N, n).astype(float))
        # <N-n+1; n-1| a^dag b |N-n; n> = sqrt(n (N-n+1))
        off = hop * np.sqrt(n[1:] * (N - n[1:] + 1.0))
        h += np.diag(off, 1) + np.diag(off, -1)
        blocks.append(h)
    return BlockHamiltonian(tuple(blocks), cutoff_a, cutoff_b)


def build_hamiltonian_af(p: AtomFieldParams, n_max: int, cutoff_a=None, cutoff_b=None):
    """omega_f a^dag a + omega_a b^dag b + gamma b^dag^2 b^2 + g (a^dag b + a b^dag)."""
    return _block_hamiltonian(
        lambda N, n: (N - n) * p.omega_f + n * p.omega_a + p.gamma * n * (n - 1),
        p.g,
        n_max,
        cutoff_a,
        cutoff_b,
    )


def build_hamiltonian_bec(p: BECParams, n_max: int, cutoff_a=None, cutoff_b=None):
    """omega0 N + omega1 (a^dag a - b^dag b) + U N^2 - lam (a^dag b + a b^dag)."""
    return _block_hamiltonian(
        lambda N, n: p.omega0 * N + p.u * N**2 + p.omega1 * (N - 2 * n),
        -p.lam,
        n_max,
        cutoff_a,
        cutoff_b,
    )


# ---------------------------------------------------------------------------
# Evolution


class Propagator:
    """Precomputed eigenbasis expansion of one initial state.

    ``state(t)`` costs a single dense product with the block-diagonal
    eigenvector matrix, so long time grids are cheap.
    """

    def __init__(self, state: BipartiteState, H: BlockHamiltonian):
        if state.shape != (H.cutoff_a + 1, H.cutoff_b + 1):
            raise ValueError(
                f"state shape {state.shape} does not match Hamiltonian cutoffs "
                f"({H.cutoff_a}, {H.cutoff_b})"
            )
        rows, cols = [], []
        for N in range(H.n_max + 1):
            n = H.block_range(N)
            rows.append(N - n)
            cols.append(n)
        self._rows = np.concatenate(rows)
        self._cols = np.concatenate(cols)
        self._shape = state.shape
        amps = state.amps
        kept = amps[self._rows, self._cols]
        leak = max(state.norm_squared() - float(np.sum(np.abs(kept) ** 2)), 0.0)
        if leak >= LEAKAGE_TOL:
            raise ConvergenceError(
                f"weight {leak:.3e} in total-number sectors above n_max={H.n_max}"
            )
        self.V = block_diag(*H.eigvecs)
        self.energies = H.spectrum()
        coeffs = self.V.T @ kept
        self.coeffs = coeffs / np.linalg.norm(coeffs)

    def state(self, t: float) -> BipartiteState:
        vec = self.V @ (np.exp(-1j * self.energies * t) * self.coeffs)
        amps = np.zeros(self._shape, dtype=complex)
        amps[self._rows, self._cols] = vec
        return BipartiteState(amps)

    def energy(self) -> float:
        return float(np.sum(self.energies * np.abs(self.coeffs) ** 2))


def evolve(state: BipartiteState, H: BlockHamiltonian, t: float) -> BipartiteState:
    """exp(-iHt)|state> by per-block spectral decomposition."""
    return Propagator(state, H).state(t)


def number_moments(state: BipartiteState) -> tuple[float, float]:
    """<N_tot> and <N_tot^2>."""
    m = np.arange(state.cutoff_a + 1)[:, None]
    n = np.arange(state.cutoff_b + 1)[None, :]
    p = np.abs(state.amps) ** 2
    N = m + n
    return float(np.sum(p * N)), float(np.sum(p * N**2))


def energy_expectation(state: BipartiteState, H: BlockHamiltonian) -> float:
    return Propagator(state, H).energy()


# ---------------------------------------------------------------------------
# Closed-form BEC evolution of photon-added coherent products


def _raise_a(amps: np.ndarray) -> np.ndarray:
    out = np.zeros_like(amps)
    out[1:, :] = np.sqrt(np.arange(1, amps.shape[0]))[:, None] * amps[:-1, :]
    return out


def _raise_b(amps: np.ndarray) -> np.ndarray:
    out = np.zeros_like(amps)
    out[:, 1:] = np.sqrt(np.arange(1, amps.shape[1]))[None, :] * amps[:, :-1]
    return out


def bec_betas(p: BECParams, alpha_a: complex, alpha_b: complex, t: float):
    """Coherent amplitudes of the two wells after the linear (hopping) rotation."""
    l1 = p.lambda1
    c, s = np.cos(l1 * t), np.sin(l1 * t)
    b1 = alpha_a * c + 1j / l1 * (p.lam * alpha_b - p.omega1 * alpha_a) * s
    b2 = alpha_b * c + 1j / l1 * (p.lam * alpha_a + p.omega1 * alpha_b) * s
    return complex(b1), complex(b2)


def _psi00(p, alpha_a, alpha_b, t, da, db):
    b1, b2 = bec_betas(p, alpha_a, alpha_b, t)
    pa, qb = np.arange(da), np.arange(db)

    def series(beta, k):
        if beta == 0:
            out = np.zeros(len(k), dtype=complex)
            out[0] = 1.0
            return out
        return np.exp(k * np.log(abs(beta)) - 0.5 * gammaln(k + 1) + 1j * k * np.angle(beta))

    pref = np.exp(-0.5 * (abs(alpha_a) ** 2 + abs(alpha_b) ** 2))
    N = pa[:, None] + qb[None, :]
    return pref * np.outer(series(b1, pa), series(b2, qb)) * np.exp(-1j * t * N * (p.omega0 + p.u * N))


def bec_analytic_state(
    p: BECParams,
    alpha_a: complex,
    alpha_b: complex,
    m1: int,
    m2: int,
    t: float,
    cutoff_a: int,
    cutoff_b: int | None = None,
) -> BipartiteState:
    """State at time t for the initial product |alpha_a, m1> x |alpha_b, m2>.

    Builds the m1 = m2 = 0 solution in closed form and applies the
    operator-valued sum that carries the added bosons through the hopping
    rotation and the number-dependent nonlinear phase.
    """
    cutoff_b = cutoff_a if cutoff_b is None else cutoff_b
    if p.lam < 0:
        # parity (-1)^{b^dag b} maps H(lam) to H(-lam) and alpha_b to -alpha_b
        mirrored = BECParams(p.omega0, p.omega1, p.u, -p.lam)
        st = bec_analytic_state(mirrored, alpha_a, -alpha_b, m1, m2, t, cutoff_a, cutoff_b)
        parity = (-1.0) ** (np.arange(cutoff_b + 1) + m2)
        return BipartiteState(st.amps * parity[None, :])
    m = m1 + m2
    # work on a padded space so raising operators do not lose weight
    da, db = cutoff_a + m + 1, cutoff_b + m + 1
    psi00 = _psi00(p, alpha_a, alpha_b, t, da, db)

    l1, G = p.lambda1, p.gamma_angle
    cg, sg = np.cos(G / 2), np.sin(G / 2)
    N = np.arange(da)[:, None] + np.arange(db)[None, :]
    phase = np.exp(-1j * p.omega0 * t * m + 1j * l1 * t * (m1 - m2))
    base = phase * np.exp(-1j * p.u * t * m * (2 * N + m)) * psi00

    # cache a^dag^i b^dag^j applied to the phased psi00
    cache: dict = {}

    def raised(i, j):
        if (i, j) not in cache:
            if i == 0 and j == 0:
                cache[i, j] = base
            elif i > 0:
                cache[i, j] = _raise_a(raised(i - 1, j))
            else:
                cache[i, j] = _raise_b(raised(i, j - 1))
        return cache[i, j]

    out = np.zeros((da, db), dtype=complex)
    for k in range(m1 + 1):
        for l in range(m2 + 1):
            pbar = k + m2 - l
            qbar = l + m1 - k
            rot = np.exp(2j * (l - k) * l1 * t)
            for pp in range(pbar + 1):
                for q in range(qbar + 1):
                    s = k + l + pp + q
                    coef = (
                        (-1) ** (k - pp)
                        * comb(m1, k)
                        * comb(m2, l)
                        * comb(pbar, pp)
                        * comb(qbar, q)
                        * cg**s
                        * sg ** (2 * m - s)
                    )
                    if coef == 0:
                        continue
                    out += coef * rot * raised(pp + qbar - q, q + pbar - pp)

    kappa = (pacs_norm_squared(alpha_a, m1) * pacs_norm_squared(alpha_b, m2)) ** -0.5
    out *= kappa
    total = float(np.sum(np.abs(out) ** 2))
    kept = out[: cutoff_a + 1, : cutoff_b + 1]
    leak = max(total - float(np.sum(np.abs(kept) ** 2)), 0.0)
    state = BipartiteState(kept)
    if leak >= LEAKAGE_TOL:
        raise ConvergenceError(f"analytic BEC state leaks {leak:.3e} beyond the cutoffs")
    state.check_truncation()
    return state.normalize()
