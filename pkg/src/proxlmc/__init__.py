"""Proximal Langevin sampling for composite log-concave targets exp(-F - G).

The packages splits along the math: state spaces and deterministic RNG
streams (:mod:`proxlmc.space`), the potential and prox catalog
(:mod:`proxlmc.potentials`), step kernels and chain drivers
(:mod:`proxlmc.samplers`), Wasserstein and primal-dual diagnostics
(:mod:`proxlmc.diagnostics`), analytically checkable experiments
(:mod:`proxlmc.experiments`), and the CLI (:mod:`proxlmc.cli`).
"""

from .space import (
    FLAT,
    SYMMETRIC,
    EigenDecomposition,
    EigenFailure,
    RngStream,
    Space,
    flatten_point,
    inner,
    norm,
    spectral_apply,
    sym_eigendecomposition,
    unflatten_point,
)
from .potentials import (
    AbsoluteValue,
    BoxIndicator,
    ConjugateUnavailable,
    CoordinateAbsolute,
    DiagonalAbsolute,
    LipschitzProxTerm,
    LogBarrier,
    NonsmoothPotential,
    PrecisionLikelihood,
    PsdIndicator,
    Quadratic,
    QuadraticSum,
    SmoothPotential,
    SpectralLogBarrier,
    ZeroPotential,
    ZeroSmooth,
    build_gamma_potential,
    build_precision_likelihood,
    build_quadratic_sum,
    coordinate_absolute_term,
    diagonal_absolute_term,
    dual_from_primal,
    moreau_gradient,
    prox_box,
    prox_logbarrier_scalar,
    prox_logdet,
    prox_psd,
)
from .samplers import (
    SAMPLER_IDS,
    ChainDivergence,
    ChainTrace,
    EnsembleResult,
    SamplerConfig,
    run_chain,
    run_ensemble,
    step_myula,
    step_projected_langevin,
    step_psgla,
    step_size_warning,
    step_spla,
    step_ula,
    tune_for_epsilon,
)
from .diagnostics import (
    CEstimate,
    EmpiricalMeasure,
    PdpgReport,
    QuantileOracle,
    bootstrap_w2_se,
    ergodic_mean,
    estimate_C,
    feasibility_fraction,
    lemma2_residual,
    pdpg_gap_check,
    sliced_wasserstein2,
    wasserstein2_1d,
)
from .experiments import (
    AssembledExperiment,
    GroundTruth,
    TruncGaussSpec,
    WishartExperimentSpec,
    assemble_experiment,
    gamma_posterior_quantile,
    gamma_quantile,
    generate_gaussian_data,
    posterior_ground_truth,
    sample_wishart,
    trunc_gauss_quantile,
)
from .verify import (
    SUITES,
    SuiteResult,
    golden_section_min,
    run_suites,
    suite_lemma2,
    suite_moreau,
    suite_pdpg,
    suite_reductions,
    suite_spectral_prox,
)

__all__ = [name for name in dir() if not name.startswith("_")]
