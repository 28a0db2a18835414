"""Three-tier deterioration decisions from p-values or posterior probabilities.

Small p-values (exact test) and large posterior deterioration
probabilities (Bayesian comparator) both escalate through the same three
categories.  Markers are the compact table rendering of a category: "+"
for probable deterioration, "*" for potential deterioration, "" for none.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

__all__ = [
    "Category",
    "Decision",
    "DisagreementCell",
    "DisagreementReport",
    "PThresholds",
    "PosteriorThresholds",
    "classify_p",
    "classify_posterior",
    "compare_decision_tables",
    "marker_for",
]


class Category(enum.Enum):
    NO_DETERIORATION = "NoDeterioration"
    POTENTIAL_DETERIORATION = "PotentialDeterioration"
    PROBABLE_DETERIORATION = "ProbableDeterioration"

    @property
    def severity(self) -> int:
        """0 for none, 1 for potential, 2 for probable; usable for ordering."""
        return _SEVERITY[self]


_SEVERITY = {
    Category.NO_DETERIORATION: 0,
    Category.POTENTIAL_DETERIORATION: 1,
    Category.PROBABLE_DETERIORATION: 2,
}

_MARKERS = {
    Category.NO_DETERIORATION: "",
    Category.POTENTIAL_DETERIORATION: "*",
    Category.PROBABLE_DETERIORATION: "+",
}


def marker_for(category: Category) -> str:
    return _MARKERS[category]


@dataclass(frozen=True)
class Decision:
    """A categorised comparison outcome along with the statistic it came from."""

    category: Category
    marker: str = ""
    source: str = ""

    def __post_init__(self):
        expected = _MARKERS[self.category]
        if self.marker == "":
            object.__setattr__(self, "marker", expected)
        elif self.marker != expected:
            raise ValueError(
                f"marker {self.marker!r} does not match category {self.category.value}"
            )


@dataclass(frozen=True)
class PThresholds:
    """Cutoffs for p-value classification; smaller p means stronger evidence."""

    probable: float = 0.1
    potential: float = 0.25

    def __post_init__(self):
        if not (0.0 < self.probable < self.potential < 1.0):
            raise ValueError(
                f"require 0 < probable < potential < 1, got ({self.probable}, {self.potential})"
            )


@dataclass(frozen=True)
class PosteriorThresholds:
    """Cutoffs for posterior classification; larger posterior means stronger evidence."""

    probable: float = 0.9
    potential: float = 0.75

    def __post_init__(self):
        if not (0.0 < self.potential < self.probable < 1.0):
            raise ValueError(
                f"require 0 < potential < probable < 1, got ({self.probable}, {self.potential})"
            )


def _check_unit_interval(name: str, value: float) -> None:
    if not (isinstance(value, (int, float)) and math.isfinite(value) and 0.0 <= value <= 1.0):
        raise ValueError(f"{name} must lie in [0, 1], got {value!r}")


def classify_p(
    p: float,
    thresholds: PThresholds = PThresholds(),
    source: str = "p_one_sided",
    inclusive: bool = True,
) -> Decision:
    """Classify a one-sided p-value.

    Values on a threshold fall into the more severe category when
    `inclusive` is true (the default); set it false for strict
    comparison.
    """
    _check_unit_interval("p", p)
    if inclusive:
        probable = p <= thresholds.probable
        potential = p <= thresholds.potential
    else:
        probable = p < thresholds.probable
        potential = p < thresholds.potential
    category = (
        Category.PROBABLE_DETERIORATION if probable
        else Category.POTENTIAL_DETERIORATION if potential
        else Category.NO_DETERIORATION
    )
    return Decision(category, source=source)


def classify_posterior(
    posterior: float,
    thresholds: PosteriorThresholds = PosteriorThresholds(),
    source: str = "posterior_deterioration",
    inclusive: bool = True,
) -> Decision:
    """Classify a posterior deterioration probability (large is severe)."""
    _check_unit_interval("posterior", posterior)
    if inclusive:
        probable = posterior >= thresholds.probable
        potential = posterior >= thresholds.potential
    else:
        probable = posterior > thresholds.probable
        potential = posterior > thresholds.potential
    category = (
        Category.PROBABLE_DETERIORATION if probable
        else Category.POTENTIAL_DETERIORATION if potential
        else Category.NO_DETERIORATION
    )
    return Decision(category, source=source)


@dataclass(frozen=True)
class DisagreementCell:
    row: int
    col: int
    left: Decision
    right: Decision


@dataclass(frozen=True)
class DisagreementReport:
    disagreements: tuple[DisagreementCell, ...]
    agreement_count: int
    total: int

    @property
    def agreement_fraction(self) -> float:
        return self.agreement_count / self.total if self.total else 1.0


def compare_decision_tables(
    left: list[list[Decision]],
    right: list[list[Decision]],
) -> DisagreementReport:
    """Cell-by-cell category comparison of two equally shaped decision grids."""
    if len(left) != len(right):
        raise ValueError(f"row count mismatch: {len(left)} vs {len(right)}")
    cells = []
    agree = 0
    total = 0
    for i, (lrow, rrow) in enumerate(zip(left, right)):
        if len(lrow) != len(rrow):
            raise ValueError(f"column count mismatch in row {i}: {len(lrow)} vs {len(rrow)}")
        for j, (a, b) in enumerate(zip(lrow, rrow)):
            total += 1
            if a.category is b.category:
                agree += 1
            else:
                cells.append(DisagreementCell(i, j, a, b))
    return DisagreementReport(tuple(cells), agree, total)
