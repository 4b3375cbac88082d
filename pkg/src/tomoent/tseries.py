"""Nonlinear time-series analysis of a scalar indicator series.

Pipeline: delay from lagged mutual information, embedding dimension from
false nearest neighbours, averaged maximal local Lyapunov exponents from
products of neighbourhood-fitted Jacobians, extrapolation
``Lambda_L = Lambda_inf + m / L^q`` and the periodogram.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.ndimage import gaussian_filter
from scipy.spatial import cKDTree

from .errors import DegenerateSeriesError

MIN_LENGTH = 1000


@dataclass(frozen=True)
class TimeSeries:
    values: np.ndarray
    dt: float = 1.0
    label: str = ""

    def __post_init__(self):
        v = np.array(self.values, dtype=float, copy=True).ravel()
        if not np.all(np.isfinite(v)):
            raise DegenerateSeriesError("time series contains non-finite values")
        if self.dt <= 0:
            raise ValueError("sampling step dt must be positive")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    def __len__(self):
        return self.values.size

    def require_length(self, n: int = MIN_LENGTH) -> None:
        if len(self) < n:
            raise DegenerateSeriesError(f"series has {len(self)} points, need at least {n}")


@dataclass(frozen=True)
class DelayEmbedding:
    delay: int
    dim: int
    vectors: np.ndarray
    dt: float = 1.0

    @property
    def n_points(self) -> int:
        return self.vectors.shape[0]


def embed(ts: TimeSeries | np.ndarray, dim: int, delay: int) -> DelayEmbedding:
    """Delay vectors (x_i, x_{i+tau}, ..., x_{i+(dim-1)tau})."""
    x = ts.values if isinstance(ts, TimeSeries) else np.asarray(ts, dtype=float)
    dt = ts.dt if isinstance(ts, TimeSeries) else 1.0
    if dim < 1 or delay < 1:
        raise ValueError("dim and delay must be >= 1")
    n = x.size - (dim - 1) * delay
    if n < 2:
        raise DegenerateSeriesError("series too short for this embedding")
    vecs = np.column_stack([x[k * delay : k * delay + n] for k in range(dim)])
    return DelayEmbedding(delay, dim, vecs, dt)


# ---------------------------------------------------------------------------
# Delay


def _mutual_information(x, y, edges, smooth=2.0):
    """Plug-in MI of a Gaussian-smoothed 2-D histogram (a binned kernel estimate)."""
    pxy, _, _ = np.histogram2d(x, y, bins=[edges, edges])
    if smooth:
        pxy = gaussian_filter(pxy, smooth, mode="constant")
    pxy /= pxy.sum()
    px = pxy.sum(axis=1)
    py = pxy.sum(axis=0)
    nz = pxy > 0
    return float(np.sum(pxy[nz] * np.log(pxy[nz] / np.outer(px, py)[nz])))


def lagged_mutual_information(
    ts: TimeSeries, max_lag: int, bins: int = 64, smooth: float = 2.0
) -> np.ndarray:
    """I(x_t; x_{t+lag}) for lag = 0..max_lag.

    Raw histograms give a jagged curve for deterministic signals; smoothing
    the joint histogram makes the first minimum well defined.
    """
    x = ts.values
    edges = np.linspace(x.min(), x.max(), bins + 1)
    return np.array(
        [_mutual_information(x[: x.size - k], x[k:], edges, smooth) for k in range(max_lag + 1)]
    )


def autocorrelation(x: np.ndarray, max_lag: int) -> np.ndarray:
    x = x - x.mean()
    var = float(x @ x)
    return np.array([float(x[: x.size - k] @ x[k:]) / var for k in range(max_lag + 1)])


def estimate_delay(
    ts: TimeSeries, max_lag: int | None = None, bins: int = 64, smooth: float = 2.0
) -> int:
    """First minimum of the lagged mutual information.

    A lag whose mutual information is already at the level of a shuffled copy
    of the series counts as an immediate minimum (returns 1).  If the mutual
    information decays to that independence level without a local minimum,
    the first 1/e crossing of the autocorrelation is used instead.
    """
    ts.require_length()
    x = ts.values
    if np.ptp(x) == 0:
        raise DegenerateSeriesError("constant series has no delay structure")
    max_lag = max_lag or min(len(ts) // 10, 500)
    mi = lagged_mutual_information(ts, max_lag, bins, smooth)
    rng = np.random.default_rng(0)
    edges = np.linspace(x.min(), x.max(), bins + 1)
    band = 1.5 * _mutual_information(x, rng.permutation(x), edges, smooth)
    for k in range(1, max_lag):
        if mi[k] <= band:
            if k == 1:
                return 1
            break
        if mi[k] < mi[k - 1] and mi[k] <= mi[k + 1]:
            return k
    acf = autocorrelation(x, max_lag)
    below = np.nonzero(acf < np.exp(-1.0))[0]
    if below.size:
        return int(max(below[0], 1))
    return max_lag


# ---------------------------------------------------------------------------
# Embedding dimension


class EmbeddingDimensionError(DegenerateSeriesError):
    def __init__(self, message, fnn_curve):
        super().__init__(message)
        self.fnn_curve = fnn_curve


def fnn_fractions(
    ts: TimeSeries,
    tau: int,
    max_dim: int = 10,
    ratio: float = 10.0,
    atol: float = 2.0,
    theiler: int = 0,
) -> np.ndarray:
    """Fraction of false nearest neighbours for dim = 1..max_dim.

    A neighbour in dimension d is false if adding coordinate d+1 stretches the
    distance by more than ``ratio`` or pushes it beyond ``atol`` times the
    series standard deviation.
    """
    x = ts.values
    sd = float(np.std(x))
    out = []
    for d in range(1, max_dim + 1):
        n = x.size - d * tau
        if n < 10:
            break
        vecs = np.column_stack([x[k * tau : k * tau + n] for k in range(d)])
        nxt = x[d * tau : d * tau + n]
        k_query = min(2 + 2 * theiler, n)
        dist, idx = cKDTree(vecs).query(vecs, k=k_query)
        dist, idx = np.atleast_2d(dist), np.atleast_2d(idx)
        far = np.abs(idx - np.arange(n)[:, None]) > theiler
        far[:, 0] &= idx[:, 0] != np.arange(n)
        col = np.argmax(far, axis=1)
        ok = far[np.arange(n), col]
        rd = dist[np.arange(n), col][ok]
        j = idx[np.arange(n), col][ok]
        i = np.arange(n)[ok]
        extra = np.abs(nxt[i] - nxt[j])
        rd1 = np.sqrt(rd**2 + extra**2)
        # the tiny absolute slack keeps exact repeats from counting as false
        false = (extra > ratio * rd + 1e-10 * sd) | (rd1 / sd > atol)
        out.append(float(np.mean(false)) if false.size else 1.0)
    return np.array(out)


def fnn_embedding_dim(
    ts: TimeSeries, tau: int, max_dim: int = 10, threshold: float = 0.01, **kw
) -> int:
    """Smallest dimension whose FNN fraction is below ``threshold``."""
    curve = fnn_fractions(ts, tau, max_dim, **kw)
    below = np.nonzero(curve < threshold)[0]
    if below.size == 0:
        pretty = ", ".join(f"{d + 1}:{f:.3f}" for d, f in enumerate(curve))
        raise EmbeddingDimensionError(
            f"no embedding dimension <= {max_dim} has FNN fraction < {threshold}; curve {pretty}",
            curve,
        )
    return int(below[0] + 1)


# ---------------------------------------------------------------------------
# Local Lyapunov exponents


@dataclass
class LyapunovEstimate:
    window_lengths: np.ndarray
    lambda_L: np.ndarray
    lambda_inf: float = np.nan
    m: float = np.nan
    q: float = np.nan
    residual: float = np.nan


class LocalJacobians:
    """Least-squares linear maps of neighbourhoods one step forward.

    The Jacobian at point j maps displacements ``y_k - y_j`` of its
    ``n_neighbors`` nearest neighbours onto ``y_{k+s} - y_{j+s}`` (s = stride).
    Neighbours closer in time than ``theiler`` samples are excluded.  A small
    relative ridge term regularizes directions the data do not explore.
    """

    def __init__(
        self,
        emb: DelayEmbedding,
        stride: int | None = None,
        n_neighbors: int | None = None,
        theiler: int | None = None,
        ridge: float = 1e-3,
        max_radius: float | None = None,
    ):
        self.emb = emb
        self.stride = emb.delay if stride is None else stride
        self.n_neighbors = n_neighbors or max(2 * emb.dim + 2, 6)
        self.theiler = 2 * emb.delay if theiler is None else theiler
        self.ridge = ridge
        y = emb.vectors
        self.n_usable = y.shape[0] - self.stride
        if self.n_usable <= self.n_neighbors + 2 * self.theiler + 1:
            raise DegenerateSeriesError("embedding too short for neighbourhood fits")
        self.tree = cKDTree(y[: self.n_usable])
        scale = float(np.max(np.ptp(y, axis=0))) or 1.0
        self.max_radius = 0.5 * scale if max_radius is None else max_radius
        self._cache: dict = {}

    def neighbors(self, j: int) -> np.ndarray:
        y = self.emb.vectors
        k = self.n_neighbors + 2 * self.theiler + 1
        dist, idx = self.tree.query(y[j], k=min(k, self.n_usable))
        keep = np.abs(idx - j) > self.theiler
        idx, dist = idx[keep][: self.n_neighbors], dist[keep][: self.n_neighbors]
        if idx.size < self.n_neighbors or dist[-1] > self.max_radius:
            raise DegenerateSeriesError(
                f"insufficient neighbours of point {j} within search radius {self.max_radius:.4g}"
            )
        return idx

    def jacobian(self, j: int) -> np.ndarray:
        if j not in self._cache:
            y = self.emb.vectors
            s = self.stride
            nb = self.neighbors(j)
            dx = y[nb] - y[j]
            dy = y[nb + s] - y[j + s]
            A = dx.T @ dx
            reg = self.ridge * np.trace(A) / A.shape[0]
            # J dx = dy in the least-squares sense: J = dy^T dx (dx^T dx + reg)^-1
            self._cache[j] = np.linalg.solve(A + reg * np.eye(A.shape[0]), dx.T @ dy).T
        return self._cache[j]


def local_lyapunov(
    emb: DelayEmbedding,
    L: int,
    n_init: int = 100,
    seed: int | None = 0,
    base_points=None,
    jacobians: LocalJacobians | None = None,
    **kw,
) -> float:
    """Average over base points of the maximal exponent over L steps.

    Each trajectory starts from the displacement to its nearest neighbour,
    is pushed through L local Jacobians with renormalization after every step,
    and yields sum(ln growth) / (L * dt * stride).
    """
    jac = jacobians or LocalJacobians(emb, **kw)
    if base_points is None:
        base_points = draw_base_points(jac, L, n_init, seed)
    exps = [_trajectory_exponent(jac, int(j), L) for j in base_points]
    return float(np.mean(exps))


def draw_base_points(jac: LocalJacobians, L_max: int, n_init: int, seed) -> np.ndarray:
    last = jac.n_usable - L_max * jac.stride
    if last < n_init:
        raise DegenerateSeriesError(
            f"only {max(last, 0)} base points support windows of {L_max} steps"
        )
    rng = np.random.default_rng(seed)
    return np.sort(rng.choice(last, size=n_init, replace=False))


def _trajectory_exponent(jac: LocalJacobians, j: int, L: int) -> float:
    y = jac.emb.vectors
    u = y[jac.neighbors(j)[0]] - y[j]
    u = u / np.linalg.norm(u)
    total = 0.0
    for step in range(L):
        v = jac.jacobian(j + step * jac.stride) @ u
        nv = np.linalg.norm(v)
        if nv == 0.0:
            return -np.inf
        total += np.log(nv)
        u = v / nv
    return total / (L * jac.emb.dt * jac.stride)


def default_window_lengths(n_points: int, stride: int = 1, count: int = 14, start: int = 5):
    """``count`` geometrically spaced window lengths from ``start`` up to n/20 samples."""
    top = max(n_points // 20 // max(stride, 1), start + count)
    Ls = np.round(np.geomspace(start, top, count)).astype(int)
    # rounding can collide at short lengths: push duplicates up, then pull the
    # tail back under ``top`` (there are at least ``count`` integers available)
    for i in range(1, count):
        Ls[i] = max(Ls[i], Ls[i - 1] + 1)
    Ls[-1] = min(Ls[-1], top)
    for i in range(count - 2, -1, -1):
        Ls[i] = min(Ls[i], Ls[i + 1] - 1)
    return Ls


def lyapunov_curve(
    emb: DelayEmbedding,
    window_lengths=None,
    n_init: int = 100,
    seed: int | None = 0,
    fit: bool = True,
    **kw,
) -> LyapunovEstimate:
    """Lambda_L for each window length using one shared set of base points."""
    jac = LocalJacobians(emb, **kw)
    Ls = (
        default_window_lengths(emb.n_points, jac.stride)
        if window_lengths is None
        else np.asarray(window_lengths, dtype=int)
    )
    if np.any(np.diff(Ls) <= 0):
        raise ValueError("window lengths must be strictly increasing")
    base = draw_base_points(jac, int(Ls[-1]), n_init, seed)
    lam = np.array([local_lyapunov(emb, int(L), base_points=base, jacobians=jac) for L in Ls])
    est = LyapunovEstimate(Ls, lam)
    if fit:
        est.lambda_inf, est.m, est.q, est.residual = fit_lambda_inf(list(zip(Ls, lam)))
    return est


def fit_lambda_inf(points, q_grid=None, refine: bool = True):
    """Least-squares fit of Lambda_L = Lambda_inf + m / L^q.

    For each q on a log grid over [0.05, 3] the model is linear in
    (Lambda_inf, m); the best q is then polished by bounded scalar
    minimization.  Returns (lambda_inf, m, q, residual_rms).
    """
    from scipy.optimize import minimize_scalar

    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[0] < 4:
        raise ValueError("need at least 4 (L, Lambda_L) points")
    L, lam = pts[:, 0], pts[:, 1]
    if np.any(L <= 0):
        raise ValueError("window lengths must be positive")
    if np.ptp(L) == 0:
        raise DegenerateSeriesError("all window lengths equal; fit is degenerate")

    def solve(q):
        X = np.column_stack([np.ones_like(L), L**-q])
        coef, *_ = np.linalg.lstsq(X, lam, rcond=None)
        r = lam - X @ coef
        return float(r @ r), coef

    q_grid = np.geomspace(0.05, 3.0, 400) if q_grid is None else np.asarray(q_grid)
    sse = np.array([solve(q)[0] for q in q_grid])
    k = int(np.argmin(sse))
    q = float(q_grid[k])
    if refine:
        lo, hi = q_grid[max(k - 1, 0)], q_grid[min(k + 1, q_grid.size - 1)]
        if hi > lo:
            res = minimize_scalar(lambda qq: solve(qq)[0], bounds=(lo, hi), method="bounded",
                                  options={"xatol": 1e-10})
            if res.fun <= sse[k]:
                q = float(res.x)
    s, (lam_inf, m) = solve(q)
    return float(lam_inf), float(m), q, float(np.sqrt(s / L.size))


# ---------------------------------------------------------------------------
# Power spectrum


@dataclass(frozen=True)
class PowerSpectrum:
    freqs: np.ndarray
    s: np.ndarray
    variance: float

    def parseval_error(self) -> float:
        if self.variance == 0:
            return float(np.sum(self.s))
        return abs(float(np.sum(self.s)) - self.variance) / self.variance


def power_spectrum(ts: TimeSeries, freq_unit: float = 1.0) -> PowerSpectrum:
    """One-sided periodogram of the mean-subtracted series (rectangular window).

    Normalized so the bins sum to the series variance; frequencies are in
    cycles per unit time divided by ``freq_unit``.
    """
    x = ts.values
    n = x.size
    if n < 2:
        raise DegenerateSeriesError("power spectrum needs at least 2 samples")
    x = x - x.mean()
    X = np.fft.rfft(x)
    s = np.abs(X) ** 2 / n**2
    s[1:] *= 2.0
    if n % 2 == 0:
        s[-1] /= 2.0
    freqs = np.fft.rfftfreq(n, d=ts.dt) / freq_unit
    return PowerSpectrum(freqs, s, float(np.mean(x**2)))
