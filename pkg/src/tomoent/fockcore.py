"""Two-mode pure states in a truncated Fock basis and their entanglement entropies.

A bipartite pure state is stored as the amplitude matrix ``c[m, n] = <m; n|psi>``
with rows labelling mode A and columns labelling mode B.  Everything downstream
(tomograms, indicators, evolution) is computed from this matrix.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConvergenceError, DensityMatrixError, NormalizationError

NORM_TOL = 1e-10
LEAKAGE_TOL = 1e-8
EIG_CLIP = 1e-10
EIG_ERROR = 1e-8

SUBSYSTEMS = ("A", "B")


def _frozen(arr):
    arr = np.array(arr, dtype=complex, copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class BipartiteState:
    """Pure state of two bosonic modes truncated at ``cutoff_a`` / ``cutoff_b`` quanta."""

    amps: np.ndarray

    def __post_init__(self):
        amps = np.asarray(self.amps)
        if amps.ndim != 2:
            raise ValueError(f"amplitude matrix must be 2-D, got shape {amps.shape}")
        object.__setattr__(self, "amps", _frozen(amps))

    @property
    def cutoff_a(self) -> int:
        return self.amps.shape[0] - 1

    @property
    def cutoff_b(self) -> int:
        return self.amps.shape[1] - 1

    @property
    def shape(self):
        return self.amps.shape

    def norm_squared(self) -> float:
        return float(np.sum(np.abs(self.amps) ** 2))

    def normalize(self) -> "BipartiteState":
        nrm = np.sqrt(self.norm_squared())
        if nrm == 0.0:
            raise NormalizationError("cannot normalize the zero vector", deficit=1.0)
        return BipartiteState(self.amps / nrm)

    def check_normalized(self, tol: float = NORM_TOL) -> None:
        deficit = 1.0 - self.norm_squared()
        if abs(deficit) > tol:
            raise NormalizationError(
                f"state is not normalized: 1 - <psi|psi> = {deficit:.3e}", deficit=deficit
            )

    def top_layer_weight(self) -> float:
        """Probability carried by the outermost Fock layer of either mode."""
        p = np.abs(self.amps) ** 2
        return float(p[-1, :].sum() + p[:-1, -1].sum())

    def check_truncation(self, tol: float = LEAKAGE_TOL) -> None:
        w = self.top_layer_weight()
        if w >= tol:
            raise ConvergenceError(
                f"weight {w:.3e} on the top Fock layer (cutoffs {self.cutoff_a}, "
                f"{self.cutoff_b}); increase the cutoff"
            )

    @classmethod
    def product(cls, vec_a, vec_b) -> "BipartiteState":
        return cls(np.outer(np.asarray(vec_a, dtype=complex), np.asarray(vec_b, dtype=complex)))

    @classmethod
    def basis(cls, m: int, n: int, cutoff_a: int, cutoff_b: int | None = None) -> "BipartiteState":
        cutoff_b = cutoff_a if cutoff_b is None else cutoff_b
        amps = np.zeros((cutoff_a + 1, cutoff_b + 1), dtype=complex)
        amps[m, n] = 1.0
        return cls(amps)


@dataclass(frozen=True)
class ReducedDensityMatrix:
    rho: np.ndarray
    subsystem_label: str = "A"

    def __post_init__(self):
        if self.subsystem_label not in SUBSYSTEMS:
            raise ValueError(f"subsystem label must be 'A' or 'B', got {self.subsystem_label!r}")
        object.__setattr__(self, "rho", _frozen(self.rho))

    @property
    def dim(self) -> int:
        return self.rho.shape[0]

    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvalsh(self.rho)


def partial_trace(state: BipartiteState, keep: str = "A") -> ReducedDensityMatrix:
    """Reduced density matrix of subsystem ``keep`` ("A" or "B")."""
    if keep not in SUBSYSTEMS:
        raise ValueError(f"keep must be 'A' or 'B', got {keep!r}")
    state.check_normalized()
    c = state.amps
    rho = c @ c.conj().T if keep == "A" else c.T @ c.conj()
    return ReducedDensityMatrix(rho, keep)


def _clipped_spectrum(rho: ReducedDensityMatrix) -> np.ndarray:
    lam = rho.eigenvalues()
    if lam.min() < -EIG_ERROR:
        raise DensityMatrixError(f"density matrix has eigenvalue {lam.min():.3e} < 0")
    return np.clip(lam, 0.0, None)


def svne(rho: ReducedDensityMatrix) -> float:
    """Von Neumann entropy in nats, with 0 ln 0 = 0."""
    lam = _clipped_spectrum(rho)
    lam = lam[lam > 0.0]
    return float(max(-np.sum(lam * np.log(lam)), 0.0))


def sle(rho: ReducedDensityMatrix) -> float:
    """Linear entropy 1 - Tr rho^2."""
    return float(1.0 - np.sum(np.abs(rho.rho) ** 2))


def overlap(s1: BipartiteState, s2: BipartiteState) -> complex:
    """Inner product <s1|s2>."""
    if s1.shape != s2.shape:
        raise ValueError(f"cutoff mismatch: {s1.shape} vs {s2.shape}")
    return complex(np.vdot(s1.amps, s2.amps))


def entanglement_entropies(state: BipartiteState) -> tuple[float, float]:
    """(SVNE, SLE) of a pure state from the Schmidt coefficients.

    Uses the smaller reduced matrix; both subsystems give identical values.
    """
    keep = "A" if state.cutoff_a <= state.cutoff_b else "B"
    rho = partial_trace(state, keep)
    return svne(rho), sle(rho)


# snapshot text format: one amplitude per line, "m n re im"

def write_snapshot(state: BipartiteState, path, precision: int = 17) -> None:
    with open(path, "w") as fh:
        fh.write(f"# cutoff_a={state.cutoff_a} cutoff_b={state.cutoff_b}\n")
        fh.write("# m n re im\n")
        for (m, n), c in np.ndenumerate(state.amps):
            fh.write(f"{m} {n} {c.real:.{precision}g} {c.imag:.{precision}g}\n")


def read_snapshot(path) -> BipartiteState:
    rows = np.loadtxt(path, comments="#", ndmin=2)
    m = rows[:, 0].astype(int)
    n = rows[:, 1].astype(int)
    amps = np.zeros((m.max() + 1, n.max() + 1), dtype=complex)
    amps[m, n] = rows[:, 2] + 1j * rows[:, 3]
    return BipartiteState(amps)
