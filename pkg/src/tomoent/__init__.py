"""Tomographic entanglement indicators for two-mode bosonic systems.

Evolve the atom-field and double-well BEC models exactly in a truncated Fock
space, build optical tomograms, compare the tomographic indicators with the
subsystem von Neumann and linear entropies, and analyse indicator time series.
"""
from .errors import (
    ConfigError,
    ConvergenceError,
    DegenerateSeriesError,
    DensityMatrixError,
    GridTooSmallError,
    NormalizationError,
    TomoentError,
)
from .fockcore import (
    BipartiteState,
    ReducedDensityMatrix,
    entanglement_entropies,
    overlap,
    partial_trace,
    sle,
    svne,
)
from .indicators import (
    IndicatorRecord,
    TomographicSample,
    hamming_distance,
    indicator_record,
    mutual_information,
    tomographic_sample,
    xi_ipr,
    xi_tei,
    xi_tei_prime,
)
from .models import (
    AtomFieldParams,
    BECParams,
    BlockHamiltonian,
    Propagator,
    bec_analytic_state,
    binomial_state,
    build_hamiltonian_af,
    build_hamiltonian_bec,
    coherent_state,
    evolve,
    pacs_state,
    product_state,
    two_mode_squeezed,
)
from .tomography import (
    AngleGrid,
    QuadratureGrid,
    bipartite_tomogram,
    reduced_tomogram,
    single_mode_tomogram,
)
from .tseries import (
    LyapunovEstimate,
    PowerSpectrum,
    TimeSeries,
    embed,
    estimate_delay,
    fit_lambda_inf,
    fnn_embedding_dim,
    local_lyapunov,
    lyapunov_curve,
    power_spectrum,
)

__version__ = "0.1.0"
