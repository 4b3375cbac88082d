"""Built-in oracle checks behind ``tomoent validate``.

Each check compares a library result with an independent closed form or a
second computation path and reports the observed error.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .fockcore import BipartiteState, entanglement_entropies, overlap
from .indicators import tomographic_sample
from .models import (
    BECParams,
    bec_analytic_state,
    binomial_state,
    build_hamiltonian_bec,
    coherent_state,
    evolve,
    pacs_state,
    product_state,
    two_mode_squeezed,
)
from .tomography import AngleGrid, QuadratureGrid
from .tseries import (
    TimeSeries,
    embed,
    estimate_delay,
    fit_lambda_inf,
    fnn_embedding_dim,
    lyapunov_curve,
    power_spectrum,
)


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str


def _result(name, error, tol) -> CheckResult:
    return CheckResult(name, bool(error < tol), f"error {error:.2e} (tolerance {tol:.0e})")


def check_squeezed_entropy():
    worst = 0.0
    for r in (0.1, 0.5, 0.7):
        c2, s2 = math.cosh(r) ** 2, math.sinh(r) ** 2
        exact = c2 * math.log(c2) - s2 * math.log(s2)
        worst = max(worst, abs(entanglement_entropies(two_mode_squeezed(r, 40))[0] - exact))
    return _result("squeezed-state SVNE closed form", worst, 1e-6)


def check_binomial_entropy():
    err = abs(entanglement_entropies(binomial_state(1, 4))[0] - math.log(2))
    return _result("binomial N=1 SVNE = ln 2", err, 1e-12)


def check_vacuum_tomogram():
    vac = BipartiteState.basis(0, 0, 10)
    smp = tomographic_sample(vac, AngleGrid.uniform(3), QuadratureGrid())
    err = max(
        np.max(np.abs(smp.s_a - 0.5 * (1 + math.log(math.pi)))),
        np.max(np.abs(smp.eta_a - 1 / math.sqrt(2 * math.pi))),
        np.max(np.abs(smp.eta_ab - 1 / (2 * math.pi))),
    )
    return _result("vacuum tomographic entropy and IPR", float(err), 1e-7)


def check_gaussian_mi():
    r = 0.5
    smp = tomographic_sample(two_mode_squeezed(r, 40), AngleGrid((0.0,), (0.0,)), QuadratureGrid())
    # x_a, x_b have variance cosh(2r)/2 and correlation -tanh(2r)
    exact = -0.5 * math.log(1 - math.tanh(2 * r) ** 2)
    return _result("Gaussian mutual information", abs(smp.mutual_information[0, 0] - exact), 1e-4)


def check_product_nulls():
    worst = 0.0
    for m in (0, 1, 3):
        psi = product_state(pacs_state(1.0, m, 30), coherent_state(0.0, 30))
        smp = tomographic_sample(psi, AngleGrid.uniform(5), QuadratureGrid())
        worst = max(worst, *entanglement_entropies(psi), abs(smp.xi_tei()), abs(smp.xi_tei_prime()))
    return _result("product-state nulls", worst, 1e-6)


def check_bec_propagator():
    p = BECParams(1.0, 1.0, 1.0, 1.0)
    H = build_hamiltonian_bec(p, 30, 30, 30)
    worst = 0.0
    for m1, m2 in ((0, 0), (0, 1), (1, 0), (1, 1)):
        psi0 = product_state(pacs_state(1.0, m1, 30), pacs_state(1.0, m2, 30))
        for t in (0.3, 1.7):
            ov = overlap(bec_analytic_state(p, 1.0, 1.0, m1, m2, t, 30), evolve(psi0, H, t))
            worst = max(worst, abs(1 - abs(ov)))
    return _result("closed-form BEC propagator vs spectral evolution", worst, 1e-7)


def check_fit_recovery():
    L = np.geomspace(5, 250, 14)
    lam = 0.2 + 1.5 / L**0.8 + 1e-6 * np.random.default_rng(7).standard_normal(L.size)
    lam_inf, m, q, _ = fit_lambda_inf(list(zip(L, lam)))
    err = max(abs(lam_inf - 0.2), abs(m - 1.5), abs(q - 0.8))
    return _result("Lambda_inf + m/L^q fit recovery", err, 1e-3)


def check_parseval():
    x = np.random.default_rng(3).standard_normal(4097)
    return _result("periodogram Parseval identity", power_spectrum(TimeSeries(x)).parseval_error(), 1e-6)


def logistic_series(n: int = 5000, x0: float = 0.3141592, burn: int = 100) -> np.ndarray:
    x = np.empty(n + burn)
    x[0] = x0
    for i in range(1, x.size):
        x[i] = 4.0 * x[i - 1] * (1.0 - x[i - 1])
    return x[burn:]


def check_logistic_lyapunov():
    ts = TimeSeries(logistic_series())
    tau = estimate_delay(ts)
    est = lyapunov_curve(embed(ts, fnn_embedding_dim(ts, tau), tau))
    return _result("logistic map Lambda_inf = ln 2", abs(est.lambda_inf - math.log(2)), 0.1 * math.log(2))


QUICK = (
    check_squeezed_entropy,
    check_binomial_entropy,
    check_vacuum_tomogram,
    check_gaussian_mi,
    check_product_nulls,
    check_fit_recovery,
    check_parseval,
)
SLOW = (check_bec_propagator, check_logistic_lyapunov)


def run_checks(quick: bool = False) -> list[CheckResult]:
    return [check() for check in (QUICK if quick else QUICK + SLOW)]
