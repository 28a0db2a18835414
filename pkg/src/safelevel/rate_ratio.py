"""Exact rate-ratio test for two event counts with exposures.

Comparing two Poisson counts x (reference) and y (target) conditionally
on their total reduces to a binomial experiment: given x + y events, the
number falling in the target window is Binomial(x + y, p0) under the null
hypothesis, where p0 is the target window's share of the combined
exposure.  The one-sided p-value is the inclusive upper binomial tail in
the deterioration direction (target rate exceeding null_ratio times the
reference rate).
"""
from __future__ import annotations

import math
from dataclasses import dataclass

from . import probkit

__all__ = [
    "CountWindow",
    "RateRatioResult",
    "conditional_success_prob",
    "generate_p_table",
    "rate_ratio_test",
]


@dataclass(frozen=True)
class CountWindow:
    """An event count paired with the operational exposure that produced it."""

    events: int
    exposure: float
    label: str = ""

    def __post_init__(self):
        if not isinstance(self.events, int) or self.events < 0:
            raise ValueError(f"events must be a non-negative integer, got {self.events!r}")
        if not (isinstance(self.exposure, (int, float)) and math.isfinite(self.exposure)
                and self.exposure > 0):
            raise ValueError(f"exposure must be a positive finite number, got {self.exposure!r}")


@dataclass(frozen=True)
class RateRatioResult:
    """Outcome of the exact conditional test."""

    p_one_sided: float
    p_two_sided: float
    conditional_n: int
    p0: float
    null_ratio: float


def conditional_success_prob(
    reference_exposure: float,
    target_exposure: float,
    null_ratio: float = 1.0,
) -> float:
    """Probability that a single event falls in the target window under H0.

    H0 states rate_target = null_ratio * rate_reference, which makes each
    event land in the target window with probability
    null_ratio * t2 / (t1 + null_ratio * t2).
    """
    for name, value in (
        ("reference_exposure", reference_exposure),
        ("target_exposure", target_exposure),
        ("null_ratio", null_ratio),
    ):
        if not (isinstance(value, (int, float)) and math.isfinite(value) and value > 0):
            raise ValueError(f"{name} must be a positive finite number, got {value!r}")
    weighted = null_ratio * target_exposure
    return weighted / (reference_exposure + weighted)


def rate_ratio_test(
    reference: CountWindow,
    target: CountWindow,
    null_ratio: float = 1.0,
    two_sided_method: str = "central",
) -> RateRatioResult:
    """Exact conditional test of H0: rate_target <= null_ratio * rate_reference.

    `p_one_sided` is P(X >= target.events | n, p0), the chance of a target
    share at least as extreme as observed in the deterioration direction.
    `p_two_sided` uses the central method by default (twice the smaller
    tail, capped at 1); pass two_sided_method="minlike" for the
    minimum-likelihood method, which sums every outcome no more probable
    than the observed one.
    """
    x = reference.events
    y = target.events
    p0 = conditional_success_prob(reference.exposure, target.exposure, null_ratio)
    n = x + y
    if n == 0:
        return RateRatioResult(1.0, 1.0, 0, p0, null_ratio)
    upper = probkit.binom_upper_tail(y, n, p0)
    lower = probkit.binom_lower_tail(y, n, p0)
    if two_sided_method == "central":
        p_two = min(1.0, 2.0 * min(lower, upper))
    elif two_sided_method == "minlike":
        observed = probkit.binom_pmf(y, n, p0)
        cutoff = observed * (1.0 + 1e-7)  # tie tolerance for equal-probability outcomes
        p_two = 0.0
        for j in range(n + 1):
            pj = probkit.binom_pmf(j, n, p0)
            if pj <= cutoff:
                p_two += pj
        p_two = min(p_two, 1.0)
    else:
        raise ValueError(f"unknown two_sided_method {two_sided_method!r}")
    return RateRatioResult(upper, p_two, n, p0, null_ratio)


def generate_p_table(
    max_ref: int,
    max_target: int,
    reference_exposure: float,
    target_exposure: float,
) -> list[list[float]]:
    """One-sided p-values for every (reference, target) count combination.

    Entry [i][j] tests i reference events against j target events at the
    given exposures; rows run 0..max_ref, columns 0..max_target.
    """
    if max_ref < 0 or max_target < 0:
        raise ValueError("max_ref and max_target must be non-negative")
    table = []
    for i in range(max_ref + 1):
        ref = CountWindow(i, reference_exposure)
        row = []
        for j in range(max_target + 1):
            tgt = CountWindow(j, target_exposure)
            row.append(rate_ratio_test(ref, tgt).p_one_sided)
        table.append(row)
    return table
