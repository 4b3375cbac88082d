"""Entanglement indicators computed directly from tomograms.

Mutual information uses the nonnegative convention
``S(theta_a) + S(theta_b) - S(theta_a, theta_b)``.  The IPR indicator is
``1 - <eta_A + eta_B - eta_AB>`` with the eta's left as raw densities, so a
product state does not in general give zero.
"""
from __future__ import annotations

import csv
from dataclasses import astuple, dataclass, fields

import numpy as np

from .fockcore import BipartiteState, entanglement_entropies
from .tomography import (
    AngleGrid,
    QuadratureGrid,
    ReducedTomogram,
    Tomogram,
    _check_norm,
    tomogram_stack,
)

FLAT_STD = 1e-12


def _wlogw(w: np.ndarray) -> np.ndarray:
    out = np.zeros_like(w)
    pos = w > 0
    out[pos] = w[pos] * np.log(w[pos])
    return out


def joint_tomographic_entropy(tomo: Tomogram) -> float:
    return -tomo.grid.integrate2d(_wlogw(tomo.w))


def subsystem_tomographic_entropy(rt: ReducedTomogram) -> float:
    return -rt.grid.integrate(_wlogw(rt.w))


def eta_ab(tomo: Tomogram) -> float:
    """Joint inverse participation ratio, the integral of w^2."""
    return tomo.grid.integrate2d(tomo.w**2)


def eta_sub(rt: ReducedTomogram) -> float:
    return rt.grid.integrate(rt.w**2)


@dataclass(frozen=True)
class TomographicSample:
    """Per-angle-pair tomographic quantities of one state.

    Arrays are indexed ``[i, j]`` for ``(thetas_a[i], thetas_b[j])``.
    """

    angles: AngleGrid
    s_joint: np.ndarray
    s_a: np.ndarray
    s_b: np.ndarray
    eta_ab: np.ndarray
    eta_a: np.ndarray
    eta_b: np.ndarray

    @property
    def mutual_information(self) -> np.ndarray:
        return self.s_a + self.s_b - self.s_joint

    def xi_tei(self) -> float:
        return float(np.mean(self.mutual_information))

    def xi_tei_prime(self) -> float:
        return dominant_mean(self.mutual_information)

    def xi_ipr(self) -> float:
        return float(1.0 - np.mean(self.eta_a + self.eta_b - self.eta_ab))


def dominant_mean(values) -> float:
    """Mean over samples exceeding mean + 1 (population) std.

    Falls back to the plain mean when the sample is flat or nothing exceeds
    the threshold.
    """
    v = np.ravel(np.asarray(values, dtype=float))
    if v.size < 4:
        raise ValueError("dominant-value average needs at least 4 samples")
    mean = float(np.mean(v))
    std = float(np.std(v))
    if std < FLAT_STD:
        return mean
    sel = v[v > mean + std]
    return float(np.mean(sel)) if sel.size else mean


def tomographic_sample(
    state: BipartiteState,
    angles: AngleGrid | None = None,
    grid: QuadratureGrid | None = None,
    check: bool = True,
) -> TomographicSample:
    """Entropies and IPRs for every angle pair of ``angles``."""
    angles = angles or AngleGrid.uniform(5)
    grid = grid or QuadratureGrid()
    state.check_normalized()
    wts = grid.weights
    stack = tomogram_stack(state, angles.thetas_a, angles.thetas_b, grid)
    wa = stack @ wts
    wb = wts @ stack
    totals = wa @ wts
    if check:
        worst = totals.flat[np.argmax(np.abs(totals - 1.0))]
        _check_norm(float(worst), "tomogram")
    s_joint = -((_wlogw(stack) @ wts) @ wts)
    s_a = -(_wlogw(wa) @ wts)
    s_b = -(_wlogw(wb) @ wts)
    e_ab = ((stack * stack) @ wts) @ wts
    e_a = (wa * wa) @ wts
    e_b = (wb * wb) @ wts
    return TomographicSample(angles, s_joint, s_a, s_b, e_ab, e_a, e_b)


def mutual_information(state, theta_a: float, theta_b: float, grid=None) -> float:
    """Tomographic mutual information at one angle pair."""
    angles = AngleGrid((theta_a,), (theta_b,))
    return float(tomographic_sample(state, angles, grid).mutual_information[0, 0])


def xi_tei(state, angles=None, grid=None) -> float:
    return tomographic_sample(state, angles, grid).xi_tei()


def xi_tei_prime(state, angles=None, grid=None) -> float:
    return tomographic_sample(state, angles, grid).xi_tei_prime()


def xi_ipr(state, angles=None, grid=None) -> float:
    return tomographic_sample(state, angles, grid).xi_ipr()


def hamming_distance(m: int, n: int, p: int, q: int) -> int:
    """Number of differing mode labels between |m; n> and |p; q>."""
    if min(m, n, p, q) < 0:
        raise ValueError("Fock labels must be nonnegative")
    return int(m != p) + int(n != q)


@dataclass(frozen=True)
class IndicatorRecord:
    t: float
    svne: float
    sle: float
    xi_tei: float
    xi_tei_prime: float
    xi_ipr: float
    d1: float
    d2: float
    d3: float
    delta: float

    @classmethod
    def from_values(cls, t, svne, sle, xi_tei, xi_tei_prime, xi_ipr):
        return cls(
            t,
            svne,
            sle,
            xi_tei,
            xi_tei_prime,
            xi_ipr,
            d1=abs(svne - xi_tei_prime),
            d2=abs(sle - xi_tei_prime),
            d3=abs(sle - xi_ipr),
            delta=abs(svne - sle),
        )


CSV_COLUMNS = tuple(f.name for f in fields(IndicatorRecord))


def indicator_record(state, t: float, angles=None, grid=None) -> IndicatorRecord:
    s_vn, s_lin = entanglement_entropies(state)
    sample = tomographic_sample(state, angles, grid)
    return IndicatorRecord.from_values(
        t, s_vn, s_lin, sample.xi_tei(), sample.xi_tei_prime(), sample.xi_ipr()
    )


def format_value(x: float) -> str:
    return f"{x:.12g}"


class IndicatorCSVWriter:
    """Appends IndicatorRecords to a CSV with a fixed header."""

    def __init__(self, fh):
        self._writer = csv.writer(fh, lineterminator="\n")
        self._writer.writerow(CSV_COLUMNS)

    def write(self, rec: IndicatorRecord) -> None:
        self._writer.writerow([format_value(v) for v in astuple(rec)])


def read_indicator_csv(path) -> dict:
    """Column name -> float array."""
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    header, body = rows[0], rows[1:]
    data = np.array(body, dtype=float).reshape(len(body), len(header))
    return {name: data[:, k] for k, name in enumerate(header)}
