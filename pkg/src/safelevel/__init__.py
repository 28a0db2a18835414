"""Statistical assessment of railway-operator safety levels.

Library surface, by module:

    probkit    numeric kernels (binomial/Poisson pmfs and tails,
               regularized incomplete beta, log-gamma, samplers) and
               reproducible splittable random streams
    rate_ratio exact conditional test comparing two count/exposure windows
    bayes      Beta-Binomial comparator, embedded reference level table,
               prior calibration, product-binomial severity likelihood
    classify   three-tier decisions, thresholds, markers, table comparison
    simulate   compound Poisson processes, severity mixtures, moment
               algebra, Monte-Carlo error-rate studies
    ingest     accident/exposure CSV parsing, window aggregation,
               correlation, report emission
    cli        the `safelevel` command
"""
from .bayes import (
    BayesResult,
    BetaPrior,
    SeverityCounts,
    andrasik_lookup,
    calibrate_prior,
    posterior_deterioration_prob,
    severity_posteriors,
    severity_product_likelihood,
)
from .classify import (
    Category,
    Decision,
    PosteriorThresholds,
    PThresholds,
    classify_p,
    classify_posterior,
    compare_decision_tables,
)
from .ingest import (
    AccidentRecord,
    ExposureRecord,
    aggregate,
    emit_report,
    parse_accidents,
    parse_exposures,
    pearson_correlation,
)
from .probkit import RandomStream, backend_name
from .rate_ratio import (
    CountWindow,
    RateRatioResult,
    conditional_success_prob,
    generate_p_table,
    rate_ratio_test,
)
from .simulate import (
    CompoundPoissonSpec,
    ErrorRateReport,
    ProcessRealization,
    SeverityModel,
    estimate_error_rates,
    loss_class_histogram,
    simulate_process,
    theoretical_moments,
    variational_coefficients,
)

__version__ = "0.1.0"

__all__ = [
    "AccidentRecord",
    "BayesResult",
    "BetaPrior",
    "Category",
    "CompoundPoissonSpec",
    "CountWindow",
    "Decision",
    "ErrorRateReport",
    "ExposureRecord",
    "PThresholds",
    "PosteriorThresholds",
    "ProcessRealization",
    "RandomStream",
    "RateRatioResult",
    "SeverityCounts",
    "SeverityModel",
    "aggregate",
    "andrasik_lookup",
    "backend_name",
    "calibrate_prior",
    "classify_p",
    "classify_posterior",
    "compare_decision_tables",
    "conditional_success_prob",
    "emit_report",
    "estimate_error_rates",
    "generate_p_table",
    "loss_class_histogram",
    "parse_accidents",
    "parse_exposures",
    "pearson_correlation",
    "posterior_deterioration_prob",
    "rate_ratio_test",
    "severity_posteriors",
    "severity_product_likelihood",
    "simulate_process",
    "theoretical_moments",
    "variational_coefficients",
]
