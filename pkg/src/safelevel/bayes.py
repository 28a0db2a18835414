"""Bayesian comparator for two accident counts.

A Beta prior on the target window's share of events is updated with the
observed counts; the posterior probability that the share exceeds its
null value measures deterioration.  The module also ships the published
reference grid of posterior levels for 0..5 reference events against
0..7 target events (the Andrasik table), a least-squares prior
calibration against that grid, and the product-binomial likelihood that
treats fatalities and serious injuries as independent dimensions.

The reference grid is authoritative for decisions; the fitted prior is a
best-effort reconstruction only, since the prior behind the published
grid is not public.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from importlib import resources

from . import probkit
from .rate_ratio import CountWindow, conditional_success_prob

__all__ = [
    "ANDRASIK_MAX_REF",
    "ANDRASIK_MAX_TARGET",
    "BayesResult",
    "BetaPrior",
    "CalibrationReport",
    "SeverityCounts",
    "andrasik_lookup",
    "andrasik_marker",
    "calibrate_prior",
    "posterior_deterioration_prob",
    "severity_posteriors",
    "severity_product_likelihood",
]

ANDRASIK_MAX_REF = 5
ANDRASIK_MAX_TARGET = 7

_TABLE_RESOURCE = "andrasik_levels_v1.csv"


@dataclass(frozen=True)
class BetaPrior:
    alpha: float
    beta: float

    def __post_init__(self):
        for name in ("alpha", "beta"):
            value = getattr(self, name)
            if not (isinstance(value, (int, float)) and math.isfinite(value) and value > 0):
                raise ValueError(f"{name} must be a positive finite number, got {value!r}")


@dataclass(frozen=True)
class BayesResult:
    posterior_deterioration: float
    posterior_alpha: float
    posterior_beta: float
    p0: float


@dataclass(frozen=True)
class SeverityCounts:
    """Fatality and serious-injury counts for both periods.

    Target counts play the success role in the product-binomial
    likelihood; reference counts the failure role.
    """

    fatal_ref: int
    fatal_target: int
    serious_ref: int
    serious_target: int

    def __post_init__(self):
        for name in ("fatal_ref", "fatal_target", "serious_ref", "serious_target"):
            value = getattr(self, name)
            if not isinstance(value, int) or value < 0:
                raise ValueError(f"{name} must be a non-negative integer, got {value!r}")


def posterior_deterioration_prob(
    prior: BetaPrior,
    reference: CountWindow,
    target: CountWindow,
) -> BayesResult:
    """Posterior probability that the target share exceeds its null value.

    The target share has posterior Beta(alpha + y, beta + x) after
    observing y target and x reference events; the result is the upper
    tail of that posterior at p0, the exposure share the target window
    would claim were both rates equal.
    """
    p0 = conditional_success_prob(reference.exposure, target.exposure, 1.0)
    a = prior.alpha + target.events
    b = prior.beta + reference.events
    prob = 1.0 - probkit.reg_inc_beta(a, b, p0)
    return BayesResult(prob, a, b, p0)


def _load_table() -> tuple[list[list[float]], list[list[str]]]:
    levels = [[math.nan] * (ANDRASIK_MAX_TARGET + 1) for _ in range(ANDRASIK_MAX_REF + 1)]
    markers = [[""] * (ANDRASIK_MAX_TARGET + 1) for _ in range(ANDRASIK_MAX_REF + 1)]
    text = resources.files(__package__).joinpath("_data", _TABLE_RESOURCE).read_text()
    for row in csv.DictReader(text.splitlines()):
        i = int(row["n_ref"])
        j = int(row["n_target"])
        levels[i][j] = float(row["level"])
        markers[i][j] = row["marker"]
    if any(math.isnan(v) for r in levels for v in r):
        raise RuntimeError(f"reference table {_TABLE_RESOURCE} is incomplete")
    return levels, markers


_ANDRASIK_LEVELS, _ANDRASIK_MARKERS = _load_table()


def _check_table_index(n_ref: int, n_target: int) -> None:
    if not isinstance(n_ref, int) or not 0 <= n_ref <= ANDRASIK_MAX_REF:
        raise ValueError(f"n_ref must be an integer in 0..{ANDRASIK_MAX_REF}, got {n_ref!r}")
    if not isinstance(n_target, int) or not 0 <= n_target <= ANDRASIK_MAX_TARGET:
        raise ValueError(
            f"n_target must be an integer in 0..{ANDRASIK_MAX_TARGET}, got {n_target!r}"
        )


def andrasik_lookup(n_ref: int, n_target: int) -> float:
    """Published posterior level for the given counts, exactly as printed."""
    _check_table_index(n_ref, n_target)
    return _ANDRASIK_LEVELS[n_ref][n_target]


def andrasik_marker(n_ref: int, n_target: int) -> str:
    """Published decision marker ("+", "*", or "") for the given counts."""
    _check_table_index(n_ref, n_target)
    return _ANDRASIK_MARKERS[n_ref][n_target]


@dataclass(frozen=True)
class CalibrationReport:
    """Least-squares fit of a Beta prior to the published level grid."""

    prior: "BetaPrior"
    objective: float
    uniform_objective: float
    grid_prior: "BetaPrior"
    grid_objective: float
    residuals: tuple[tuple[float, ...], ...]

    def to_dict(self) -> dict:
        return {
            "alpha": self.prior.alpha,
            "beta": self.prior.beta,
            "objective": self.objective,
            "uniform_objective": self.uniform_objective,
            "grid_alpha": self.grid_prior.alpha,
            "grid_beta": self.grid_prior.beta,
            "grid_objective": self.grid_objective,
            "residuals": [list(row) for row in self.residuals],
        }


def _calibration_objective(alpha: float, beta: float, targets, p0: float) -> float:
    total = 0.0
    for i in range(len(targets)):
        for j in range(len(targets[i])):
            fit = 1.0 - probkit.reg_inc_beta(alpha + j, beta + i, p0)
            diff = fit - targets[i][j]
            total += diff * diff
    return total


def calibrate_prior(
    targets: list[list[float]] | None = None,
    reference_exposure: float = 4.0,
    target_exposure: float = 1.0,
) -> tuple[BetaPrior, CalibrationReport]:
    """Reconstruct a Beta prior that best reproduces the level grid.

    Scans alpha and beta over 61 logarithmic steps each across
    [1e-3, 1e3], then refines the best grid point with a bounded
    Nelder-Mead pass in log10 space.  Deterministic for a given grid.
    Returns the fitted prior and a report with the objective, the
    uniform-prior baseline, and per-cell residuals (fit minus target).
    """
    if targets is None:
        targets = _ANDRASIK_LEVELS
    p0 = conditional_success_prob(reference_exposure, target_exposure, 1.0)

    best = (math.inf, 1.0, 1.0)
    for ia in range(61):
        alpha = 10.0 ** ((ia - 30) / 10.0)
        for ib in range(61):
            beta = 10.0 ** ((ib - 30) / 10.0)
            obj = _calibration_objective(alpha, beta, targets, p0)
            if obj < best[0]:
                best = (obj, alpha, beta)
    grid_objective, grid_alpha, grid_beta = best

    from scipy.optimize import minimize

    res = minimize(
        lambda v: _calibration_objective(10.0 ** v[0], 10.0 ** v[1], targets, p0),
        x0=[math.log10(grid_alpha), math.log10(grid_beta)],
        method="Nelder-Mead",
        bounds=[(-3.0, 3.0), (-3.0, 3.0)],
        options={"xatol": 1e-8, "fatol": 1e-14, "maxiter": 2000},
    )
    if res.fun <= grid_objective:
        alpha, beta = 10.0 ** res.x[0], 10.0 ** res.x[1]
        objective = float(res.fun)
    else:
        alpha, beta, objective = grid_alpha, grid_beta, grid_objective

    prior = BetaPrior(alpha, beta)
    residuals = tuple(
        tuple(
            1.0 - probkit.reg_inc_beta(alpha + j, beta + i, p0) - targets[i][j]
            for j in range(len(targets[i]))
        )
        for i in range(len(targets))
    )
    report = CalibrationReport(
        prior=prior,
        objective=objective,
        uniform_objective=_calibration_objective(1.0, 1.0, targets, p0),
        grid_prior=BetaPrior(grid_alpha, grid_beta),
        grid_objective=grid_objective,
        residuals=residuals,
    )
    return prior, report


def severity_product_likelihood(counts: SeverityCounts, p_f: float, p_s: float) -> float:
    """Probability of the observed severity split under independent shares.

    Product of two binomial terms: fatalities split with success
    probability p_f, serious injuries with p_s, target counts as
    successes.
    """
    for name, value in (("p_f", p_f), ("p_s", p_s)):
        if not (isinstance(value, (int, float)) and 0.0 <= value <= 1.0):
            raise ValueError(f"{name} must lie in [0, 1], got {value!r}")
    fatal = probkit.binom_pmf(counts.fatal_target, counts.fatal_target + counts.fatal_ref, p_f)
    serious = probkit.binom_pmf(
        counts.serious_target, counts.serious_target + counts.serious_ref, p_s
    )
    return fatal * serious


def severity_posteriors(
    prior_f: BetaPrior,
    prior_s: BetaPrior,
    counts: SeverityCounts,
    reference_exposure: float,
    target_exposure: float,
) -> tuple[float, float]:
    """Posterior deterioration probabilities per severity dimension.

    Two independent Beta-Binomial updates, one for fatalities and one
    for serious injuries, both against the same exposure-share null.
    Returned as a (fatal, serious) pair; the two dimensions are never
    merged into a single decision.
    """
    fatal = posterior_deterioration_prob(
        prior_f,
        CountWindow(counts.fatal_ref, reference_exposure),
        CountWindow(counts.fatal_target, target_exposure),
    )
    serious = posterior_deterioration_prob(
        prior_s,
        CountWindow(counts.serious_ref, reference_exposure),
        CountWindow(counts.serious_target, target_exposure),
    )
    return fatal.posterior_deterioration, serious.posterior_deterioration
