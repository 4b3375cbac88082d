"""Optical tomograms of two-mode states on a uniform quadrature grid.

Rotated quadrature ``X_theta = (a e^{-i theta} + a^dag e^{i theta}) / sqrt(2)`` has
eigenfunctions ``<X_theta, theta|n> = e^{-i n theta} psi_n(x)`` where ``psi_n`` is
the n-th normalized Hermite function.  With this convention a coherent state
|alpha> has quadrature mean ``sqrt(2) Re(alpha e^{-i theta})``.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import GridTooSmallError
from .fockcore import BipartiteState, ReducedDensityMatrix

TOMO_NORM_TOL = 1e-6
PHASE_SIGN = -1


def simpson_weights(n_points: int, h: float) -> np.ndarray:
    """Composite Simpson weights h/3 * (1, 4, 2, ..., 2, 4, 1)."""
    if n_points < 3 or n_points % 2 == 0:
        raise ValueError(f"Simpson rule needs an odd number of points >= 3, got {n_points}")
    w = np.full(n_points, 2.0)
    w[1::2] = 4.0
    w[0] = w[-1] = 1.0
    return w * h / 3.0


@dataclass(frozen=True)
class QuadratureGrid:
    """Symmetric uniform grid [-x_max, x_max] with an odd number of points."""

    x_max: float = 8.0
    n_points: int = 257

    def __post_init__(self):
        if self.x_max <= 0:
            raise ValueError("x_max must be positive")
        if self.n_points < 3 or self.n_points % 2 == 0:
            raise ValueError(f"n_points must be odd and >= 3, got {self.n_points}")

    @property
    def x_min(self) -> float:
        return -self.x_max

    @property
    def h(self) -> float:
        return 2.0 * self.x_max / (self.n_points - 1)

    @cached_property
    def x(self) -> np.ndarray:
        x = np.linspace(-self.x_max, self.x_max, self.n_points)
        x.setflags(write=False)
        return x

    @cached_property
    def weights(self) -> np.ndarray:
        w = simpson_weights(self.n_points, self.h)
        w.setflags(write=False)
        return w

    def integrate(self, f) -> float:
        return float(self.weights @ f)

    def integrate2d(self, f) -> float:
        return float(self.weights @ f @ self.weights)

    def covers(self, cutoff: int, margin: float = 3.0) -> bool:
        """True if the grid extends ``margin`` past the classical turning point of |cutoff>."""
        return self.x_max >= np.sqrt(2 * cutoff + 1) + margin

    @classmethod
    def for_cutoff(cls, cutoff: int, spacing: float = 1 / 16, margin: float = 3.0):
        x_max = np.sqrt(2 * cutoff + 1) + margin
        half = int(np.ceil(x_max / spacing))
        half += half % 2
        return cls(half * spacing, 2 * half + 1)


@dataclass(frozen=True)
class AngleGrid:
    thetas_a: tuple
    thetas_b: tuple

    def __post_init__(self):
        for name in ("thetas_a", "thetas_b"):
            th = np.asarray(getattr(self, name), dtype=float)
            if th.size == 0:
                raise ValueError(f"{name} must be nonempty")
            if np.any(th < 0) or np.any(th >= np.pi):
                raise ValueError(f"{name} must lie in [0, pi)")
            if len(set(th.tolist())) != th.size:
                raise ValueError(f"{name} contains duplicates")
            gaps = np.diff(np.sort(th))
            if th.size > 2 and not np.allclose(gaps, gaps[0]):
                raise ValueError(f"{name} must be equally spaced")
            object.__setattr__(self, name, tuple(th.tolist()))

    @classmethod
    def uniform(cls, n_a: int = 5, n_b: int | None = None, offset: float = 0.0):
        """n equally spaced angles k*pi/n (+offset, wrapped into [0, pi)) per mode.

        The default 5 x 5 grid gives 25 pairs.
        """
        n_b = n_a if n_b is None else n_b
        return cls(
            tuple(np.sort(np.mod(offset + np.pi * np.arange(n_a) / n_a, np.pi))),
            tuple(np.sort(np.mod(offset + np.pi * np.arange(n_b) / n_b, np.pi))),
        )

    @property
    def n_pairs(self) -> int:
        return len(self.thetas_a) * len(self.thetas_b)


def hermite_functions(n_max: int, x) -> np.ndarray:
    """psi_0..psi_{n_max} at x, shape (len(x), n_max + 1).

    Stable normalized recurrence
    psi_{n+1} = x sqrt(2/(n+1)) psi_n - sqrt(n/(n+1)) psi_{n-1}.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    out = np.empty((x.size, n_max + 1))
    out[:, 0] = np.pi**-0.25 * np.exp(-0.5 * x**2)
    if n_max >= 1:
        out[:, 1] = np.sqrt(2.0) * x * out[:, 0]
    for n in range(1, n_max):
        out[:, n + 1] = x * np.sqrt(2.0 / (n + 1)) * out[:, n] - np.sqrt(n / (n + 1)) * out[:, n - 1]
    return out


def quadrature_overlap(n: int, x, theta: float, phase_sign: int = PHASE_SIGN):
    """<X_theta, theta | n> evaluated at x (scalar or array)."""
    if n < 0:
        raise ValueError("Fock index must be >= 0")
    val = hermite_functions(n, x)[:, n] * np.exp(phase_sign * 1j * n * theta)
    return val[0] if np.ndim(x) == 0 else val


def overlap_matrix(theta: float, cutoff: int, grid: QuadratureGrid, phase_sign: int = PHASE_SIGN):
    """Matrix O[i, n] = <x_i, theta | n> of shape (n_points, cutoff + 1)."""
    psi = hermite_functions(cutoff, grid.x)
    return psi * np.exp(phase_sign * 1j * np.arange(cutoff + 1) * theta)[None, :]


@dataclass(frozen=True)
class Tomogram:
    theta_a: float
    theta_b: float
    w: np.ndarray
    grid: QuadratureGrid

    def total(self) -> float:
        return self.grid.integrate2d(self.w)


@dataclass(frozen=True)
class ReducedTomogram:
    theta: float
    w: np.ndarray
    grid: QuadratureGrid

    def total(self) -> float:
        return self.grid.integrate(self.w)


def _check_norm(total: float, what: str) -> None:
    if abs(total - 1.0) > TOMO_NORM_TOL:
        raise GridTooSmallError(
            f"{what} integrates to {total:.9f}; enlarge or refine the quadrature grid",
            deficit=1.0 - total,
        )


def bipartite_tomogram(
    state: BipartiteState,
    theta_a: float,
    theta_b: float,
    grid: QuadratureGrid | None = None,
    phase_sign: int = PHASE_SIGN,
    check: bool = True,
) -> Tomogram:
    """w(x_a, x_b) = |sum_mn c_mn <x_a,theta_a|m><x_b,theta_b|n>|^2 on the grid."""
    grid = grid or QuadratureGrid()
    state.check_normalized()
    oa = overlap_matrix(theta_a, state.cutoff_a, grid, phase_sign)
    ob = overlap_matrix(theta_b, state.cutoff_b, grid, phase_sign)
    amp = oa @ state.amps @ ob.T
    w = amp.real**2 + amp.imag**2
    tomo = Tomogram(float(theta_a), float(theta_b), w, grid)
    if check:
        _check_norm(tomo.total(), f"tomogram at ({theta_a:.4f}, {theta_b:.4f})")
    return tomo


def tomogram_stack(
    state: BipartiteState,
    thetas_a,
    thetas_b,
    grid: QuadratureGrid | None = None,
    phase_sign: int = PHASE_SIGN,
) -> np.ndarray:
    """All tomograms for a Cartesian angle grid, shape (n_a, n_b, n_points, n_points).

    The (n_points x cutoff) overlap matrices are formed once per angle and the
    amplitudes come from a single matrix product.
    """
    grid = grid or QuadratureGrid()
    nx = grid.n_points
    psi_a = hermite_functions(state.cutoff_a, grid.x)
    psi_b = hermite_functions(state.cutoff_b, grid.x)
    ka = np.arange(state.cutoff_a + 1)
    kb = np.arange(state.cutoff_b + 1)
    # left factor: (n_a * nx, cutoff_b + 1)
    left = np.concatenate(
        [(psi_a * np.exp(phase_sign * 1j * ka * th)) @ state.amps for th in thetas_a]
    )
    # right factor: (cutoff_b + 1, n_b * nx)
    right = np.concatenate(
        [(psi_b * np.exp(phase_sign * 1j * kb * th)).T for th in thetas_b], axis=1
    )
    amp = left @ right
    w = amp.real**2 + amp.imag**2
    return w.reshape(len(thetas_a), nx, len(thetas_b), nx).transpose(0, 2, 1, 3)


def reduced_tomogram(tomo: Tomogram, keep: str = "A") -> ReducedTomogram:
    """Marginal over the other mode by Simpson integration."""
    if keep == "A":
        return ReducedTomogram(tomo.theta_a, tomo.w @ tomo.grid.weights, tomo.grid)
    if keep == "B":
        return ReducedTomogram(tomo.theta_b, tomo.grid.weights @ tomo.w, tomo.grid)
    raise ValueError(f"keep must be 'A' or 'B', got {keep!r}")


def single_mode_tomogram(
    rho,
    theta: float,
    grid: QuadratureGrid | None = None,
    phase_sign: int = PHASE_SIGN,
) -> ReducedTomogram:
    """<x,theta|rho|x,theta> for a density matrix or a pure-state vector."""
    grid = grid or QuadratureGrid()
    mat = rho.rho if isinstance(rho, ReducedDensityMatrix) else np.asarray(rho)
    if mat.ndim == 1:
        o = overlap_matrix(theta, mat.size - 1, grid, phase_sign)
        amp = o @ mat
        w = np.abs(amp) ** 2
    else:
        o = overlap_matrix(theta, mat.shape[0] - 1, grid, phase_sign)
        w = np.einsum("im,mn,in->i", o, mat, o.conj()).real
    return ReducedTomogram(float(theta), w, grid)


def write_tomogram(tomo: Tomogram, path, precision: int = 12) -> None:
    """Plain-text matrix: header lines then one row per x_a grid point."""
    g = tomo.grid
    header = (
        f"theta_a={tomo.theta_a!r} theta_b={tomo.theta_b!r}\n"
        f"x_min={g.x_min!r} x_max={g.x_max!r} n_points={g.n_points}\n"
        "rows: x_a ascending, columns: x_b ascending"
    )
    np.savetxt(path, tomo.w, fmt=f"%.{precision}g", header=header)


def read_tomogram(path) -> Tomogram:
    meta = {}
    with open(path) as fh:
        for line in fh:
            if not line.startswith("#"):
                break
            for tok in line[1:].split():
                if "=" in tok:
                    k, v = tok.split("=", 1)
                    meta[k] = float(v)
    w = np.loadtxt(path, comments="#", ndmin=2)
    grid = QuadratureGrid(meta["x_max"], int(meta["n_points"]))
    return Tomogram(meta["theta_a"], meta["theta_b"], w, grid)
