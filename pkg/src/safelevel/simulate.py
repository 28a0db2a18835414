"""Compound Poisson accident process and Monte-Carlo error-rate studies.

An accident process over exposure t has a Poisson(rate * t) event count,
uniform event positions, and i.i.d. severities from a mixture model.
The cumulative severity X_t = sum of the individual severities has
E(X_t) = rate * t * E(S) and V(X_t) = rate * t * E(S^2).

The error-rate study draws count pairs under a null and an alternative
regime and reports how often a decision procedure (exact test p-value,
or the embedded posterior-level table) raises at least the counted
category.  Every replication derives its own substream, so reports are
bit-identical for any worker count.
"""
from __future__ import annotations

import bisect
import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Union

from . import probkit
from .bayes import ANDRASIK_MAX_REF, ANDRASIK_MAX_TARGET, andrasik_lookup
from .classify import (
    Category,
    PosteriorThresholds,
    PThresholds,
    classify_p,
    classify_posterior,
)
from .probkit import RandomStream
from .rate_ratio import CountWindow, rate_ratio_test

__all__ = [
    "AndrasikTableProcedure",
    "CompoundPoissonSpec",
    "Constant",
    "EmpiricalPMF",
    "ErrorRateReport",
    "LOSS_CLASS_LABELS",
    "Pareto",
    "ProcessRealization",
    "RateRatioPProcedure",
    "SeverityModel",
    "Weibull",
    "estimate_error_rates",
    "loss_class_histogram",
    "procedure_from_dict",
    "severity_model_from_dict",
    "simulate_process",
    "theoretical_moments",
    "variational_coefficients",
]


def _check_positive(name: str, value) -> None:
    if not (isinstance(value, (int, float)) and math.isfinite(value) and value > 0):
        raise ValueError(f"{name} must be a positive finite number, got {value!r}")


def _positive_uniform(stream: RandomStream) -> float:
    u = stream.next_double()
    while u == 0.0:
        u = stream.next_double()
    return u


@dataclass(frozen=True)
class Constant:
    """Degenerate severity: every event loses exactly `value`."""

    value: float

    def __post_init__(self):
        _check_positive("value", self.value)

    def mean(self) -> float:
        return self.value

    def second_moment(self) -> float:
        return self.value * self.value

    def sample(self, stream: RandomStream) -> float:
        return self.value


@dataclass(frozen=True)
class Pareto:
    """Heavy-tailed severity on [scale, inf); shape alpha controls the tail.

    The mean is infinite for shape <= 1 and the second moment for
    shape <= 2; the moment accessors return inf there so callers can
    refuse analyses that need them.
    """

    scale: float
    shape: float

    def __post_init__(self):
        _check_positive("scale", self.scale)
        _check_positive("shape", self.shape)

    def mean(self) -> float:
        if self.shape <= 1.0:
            return math.inf
        return self.shape * self.scale / (self.shape - 1.0)

    def second_moment(self) -> float:
        if self.shape <= 2.0:
            return math.inf
        return self.shape * self.scale * self.scale / (self.shape - 2.0)

    def sample(self, stream: RandomStream) -> float:
        # inverse CDF with the uniform guarded away from 0
        u = _positive_uniform(stream)
        return self.scale * u ** (-1.0 / self.shape)


@dataclass(frozen=True)
class Weibull:
    """Weibull severity with shape k and scale; support (0, inf)."""

    shape: float
    scale: float

    def __post_init__(self):
        _check_positive("shape", self.shape)
        _check_positive("scale", self.scale)

    def mean(self) -> float:
        return self.scale * math.exp(probkit.log_gamma(1.0 + 1.0 / self.shape))

    def second_moment(self) -> float:
        return self.scale * self.scale * math.exp(probkit.log_gamma(1.0 + 2.0 / self.shape))

    def sample(self, stream: RandomStream) -> float:
        u = _positive_uniform(stream)
        return self.scale * (-math.log(u)) ** (1.0 / self.shape)


@dataclass(frozen=True)
class EmpiricalPMF:
    """Discrete severity over explicit positive values with probabilities."""

    values: tuple[float, ...]
    probs: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "values", tuple(self.values))
        object.__setattr__(self, "probs", tuple(self.probs))
        if len(self.values) != len(self.probs) or not self.values:
            raise ValueError("values and probs must be non-empty and equally long")
        for v in self.values:
            _check_positive("values entry", v)
        for p in self.probs:
            if not (isinstance(p, (int, float)) and 0.0 <= p <= 1.0):
                raise ValueError(f"probs entries must lie in [0, 1], got {p!r}")
        if abs(sum(self.probs) - 1.0) > 1e-12:
            raise ValueError(f"probs must sum to 1 within 1e-12, got {sum(self.probs)!r}")

    def mean(self) -> float:
        return sum(v * p for v, p in zip(self.values, self.probs))

    def second_moment(self) -> float:
        return sum(v * v * p for v, p in zip(self.values, self.probs))

    def sample(self, stream: RandomStream) -> float:
        u = stream.next_double()
        acc = 0.0
        for v, p in zip(self.values, self.probs):
            acc += p
            if u < acc:
                return v
        return self.values[-1]  # guards accumulated rounding at u ~ 1


SeverityComponent = Union[Constant, Pareto, Weibull, EmpiricalPMF]


@dataclass(frozen=True)
class SeverityModel:
    """Mixture of severity components with weights summing to 1."""

    components: tuple[tuple[float, SeverityComponent], ...]

    def __post_init__(self):
        object.__setattr__(self, "components", tuple(tuple(c) for c in self.components))
        if not self.components:
            raise ValueError("severity model needs at least one component")
        total = 0.0
        for weight, comp in self.components:
            if not (isinstance(weight, (int, float)) and 0.0 <= weight <= 1.0):
                raise ValueError(f"component weight must lie in [0, 1], got {weight!r}")
            if not isinstance(comp, (Constant, Pareto, Weibull, EmpiricalPMF)):
                raise ValueError(f"unknown severity component {comp!r}")
            total += weight
        if abs(total - 1.0) > 1e-12:
            raise ValueError(f"component weights must sum to 1 within 1e-12, got {total!r}")

    def mean(self) -> float:
        return sum(w * c.mean() for w, c in self.components)

    def second_moment(self) -> float:
        return sum(w * c.second_moment() for w, c in self.components)

    def sample(self, stream: RandomStream) -> float:
        # single-component models consume no mixture uniform
        if len(self.components) == 1:
            return self.components[0][1].sample(stream)
        u = stream.next_double()
        acc = 0.0
        for weight, comp in self.components:
            acc += weight
            if u < acc:
                return comp.sample(stream)
        return self.components[-1][1].sample(stream)


@dataclass(frozen=True)
class CompoundPoissonSpec:
    rate: float
    exposure: float
    severity: SeverityModel

    def __post_init__(self):
        if not (isinstance(self.rate, (int, float)) and math.isfinite(self.rate)
                and self.rate >= 0):
            raise ValueError(f"rate must be a non-negative finite number, got {self.rate!r}")
        _check_positive("exposure", self.exposure)


@dataclass(frozen=True)
class ProcessRealization:
    event_positions: tuple[float, ...]
    severities: tuple[float, ...]
    n_events: int
    total_severity: float


def simulate_process(spec: CompoundPoissonSpec, stream: RandomStream) -> ProcessRealization:
    """Draw one realization of the accident process.

    Draw order is part of the contract: the event count first, then all
    positions in one batch, then one severity per event.
    """
    n = probkit.sample_poisson(spec.rate * spec.exposure, stream)
    positions = tuple(sorted(float(u) * spec.exposure for u in stream.next_doubles(n)))
    severities = tuple(spec.severity.sample(stream) for _ in range(n))
    return ProcessRealization(positions, severities, n, math.fsum(severities))


def theoretical_moments(spec: CompoundPoissonSpec) -> tuple[float, float]:
    """Exact mean and variance of the cumulative severity X_t."""
    s_mean = spec.severity.mean()
    s_second = spec.severity.second_moment()
    if not math.isfinite(s_mean) or not math.isfinite(s_second):
        raise ValueError(
            "severity moments are infinite (Pareto components need shape > 2 here)"
        )
    lam_t = spec.rate * spec.exposure
    return lam_t * s_mean, lam_t * s_second


def variational_coefficients(
    n_mean: float,
    n_var: float,
    s_mean: float,
    s_var: float,
) -> tuple[float, float, float]:
    """Coefficients of variation for N, S, and the product S*N.

    Uses the independent-product identity
    Var(SN) = Var(S)Var(N) + Var(S)(E N)^2 + Var(N)(E S)^2, which in
    relative terms is v_SN^2 = v_S^2 v_N^2 + v_S^2 + v_N^2.  It follows
    that v_SN >= v_N always, with equality only for constant severity:
    observing counts alone is never noisier than observing summed losses.
    """
    _check_positive("n_mean", n_mean)
    _check_positive("s_mean", s_mean)
    for name, value in (("n_var", n_var), ("s_var", s_var)):
        if not (isinstance(value, (int, float)) and math.isfinite(value) and value >= 0):
            raise ValueError(f"{name} must be a non-negative finite number, got {value!r}")
    v_n = math.sqrt(n_var) / n_mean
    v_s = math.sqrt(s_var) / s_mean
    v_sn = math.sqrt(v_s * v_s * v_n * v_n + v_s * v_s + v_n * v_n)
    return v_n, v_s, v_sn


LOSS_CLASS_LABELS = ("A", "B", "C", "D", "E", "F", "G")


def loss_class_histogram(
    severities: list[float],
    boundaries: list[float],
) -> dict[str, int]:
    """Bucket severities into the seven loss classes A (smallest) to G.

    Class A is everything up to the first boundary (inclusive), class G
    everything above the last; interior classes are half-open (low, high].
    """
    bounds = list(boundaries)
    if len(bounds) != 6:
        raise ValueError(f"exactly 6 boundaries required, got {len(bounds)}")
    for b in bounds:
        _check_positive("boundary", b)
    if any(a >= b for a, b in zip(bounds, bounds[1:])):
        raise ValueError(f"boundaries must be strictly ascending, got {bounds!r}")
    counts = dict.fromkeys(LOSS_CLASS_LABELS, 0)
    for s in severities:
        counts[LOSS_CLASS_LABELS[bisect.bisect_left(bounds, s)]] += 1
    return counts


@dataclass(frozen=True)
class RateRatioPProcedure:
    """Decide from the exact test's one-sided p-value."""

    thresholds: PThresholds = field(default_factory=PThresholds)

    procedure_id = "rate-ratio-p"

    def decide(self, x: int, y: int, exposure_ref: float, exposure_target: float):
        result = rate_ratio_test(CountWindow(x, exposure_ref), CountWindow(y, exposure_target))
        return classify_p(result.p_one_sided, self.thresholds).category, False


@dataclass(frozen=True)
class AndrasikTableProcedure:
    """Decide from the embedded posterior-level table.

    The table is indexed by raw counts; counts beyond its 0..5 x 0..7
    range are clipped to the nearest edge and the clip is reported.
    Exposures do not enter the lookup: the published levels fix the
    reference-to-target geometry.
    """

    thresholds: PosteriorThresholds = field(default_factory=PosteriorThresholds)

    procedure_id = "andrasik-table"

    def decide(self, x: int, y: int, exposure_ref: float, exposure_target: float):
        cx = min(x, ANDRASIK_MAX_REF)
        cy = min(y, ANDRASIK_MAX_TARGET)
        level = andrasik_lookup(cx, cy)
        return classify_posterior(level, self.thresholds).category, (cx, cy) != (x, y)


Procedure = Union[RateRatioPProcedure, AndrasikTableProcedure]


@dataclass(frozen=True)
class ErrorRateReport:
    procedure_id: str
    alpha_hat: float
    power_hat: float
    replications: int
    mc_stderr_alpha: float
    mc_stderr_power: float
    clip_fraction_null: float = 0.0
    clip_fraction_alt: float = 0.0

    def to_dict(self) -> dict:
        return {
            "procedure_id": self.procedure_id,
            "alpha_hat": self.alpha_hat,
            "power_hat": self.power_hat,
            "replications": self.replications,
            "mc_stderr_alpha": self.mc_stderr_alpha,
            "mc_stderr_power": self.mc_stderr_power,
            "clip_fraction_null": self.clip_fraction_null,
            "clip_fraction_alt": self.clip_fraction_alt,
        }


def _counted_severity(decision_counted) -> int:
    if isinstance(decision_counted, Category):
        if decision_counted is Category.NO_DETERIORATION:
            raise ValueError("decision_counted must be Potential or Probable")
        return decision_counted.severity
    if isinstance(decision_counted, str):
        key = decision_counted.strip().lower()
        if key in ("probable", "probabledeterioration"):
            return Category.PROBABLE_DETERIORATION.severity
        if key in ("potential", "potentialdeterioration"):
            return Category.POTENTIAL_DETERIORATION.severity
    raise ValueError(f"unknown decision_counted {decision_counted!r}")


def estimate_error_rates(
    procedure: Procedure,
    rate_ref: float,
    rate_target_null: float,
    rate_target_alt: float,
    exposure_ref: float,
    exposure_target: float,
    decision_counted="probable",
    replications: int = 100_000,
    stream: RandomStream | None = None,
    workers: int = 1,
) -> ErrorRateReport:
    """Monte-Carlo type-I error and power of a decision procedure.

    Reference and target counts are drawn as independent Poissons with
    means rate * exposure (the study exercises the whole procedure, so
    totals are not conditioned on).  Replication r of regime g uses the
    substream stream.child(g, r), making the report a pure function of
    the stream regardless of `workers`.
    """
    for name, value in (("rate_ref", rate_ref), ("rate_target_null", rate_target_null),
                        ("rate_target_alt", rate_target_alt)):
        if not (isinstance(value, (int, float)) and math.isfinite(value) and value >= 0):
            raise ValueError(f"{name} must be a non-negative finite number, got {value!r}")
    _check_positive("exposure_ref", exposure_ref)
    _check_positive("exposure_target", exposure_target)
    if not isinstance(replications, int) or replications < 1:
        raise ValueError(f"replications must be a positive integer, got {replications!r}")
    if not isinstance(workers, int) or workers < 1:
        raise ValueError(f"workers must be a positive integer, got {workers!r}")
    if stream is None:
        raise ValueError("an explicit RandomStream is required for reproducibility")
    min_severity = _counted_severity(decision_counted)

    cache: dict[tuple[int, int], tuple[bool, bool]] = {}

    def decide(x: int, y: int) -> tuple[bool, bool]:
        key = (x, y)
        hit = cache.get(key)
        if hit is None:
            category, clipped = procedure.decide(x, y, exposure_ref, exposure_target)
            hit = (category.severity >= min_severity, clipped)
            cache[key] = hit
        return hit

    mean_ref = rate_ref * exposure_ref

    def run_chunk(regime: int, mean_target: float, lo: int, hi: int) -> tuple[int, int]:
        hits = 0
        clips = 0
        for r in range(lo, hi):
            sub = stream.child(regime, r)
            x = probkit.sample_poisson(mean_ref, sub)
            y = probkit.sample_poisson(mean_target, sub)
            met, clipped = decide(x, y)
            hits += met
            clips += clipped
        return hits, clips

    def run_regime(regime: int, mean_target: float) -> tuple[int, int]:
        if workers == 1:
            return run_chunk(regime, mean_target, 0, replications)
        step = -(-replications // workers)
        spans = [(lo, min(lo + step, replications))
                 for lo in range(0, replications, step)]
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(
                lambda span: run_chunk(regime, mean_target, *span), spans
            ))
        return sum(p[0] for p in parts), sum(p[1] for p in parts)

    null_hits, null_clips = run_regime(0, rate_target_null * exposure_target)
    alt_hits, alt_clips = run_regime(1, rate_target_alt * exposure_target)

    alpha_hat = null_hits / replications
    power_hat = alt_hits / replications
    report = ErrorRateReport(
        procedure_id=procedure.procedure_id,
        alpha_hat=alpha_hat,
        power_hat=power_hat,
        replications=replications,
        mc_stderr_alpha=math.sqrt(alpha_hat * (1.0 - alpha_hat) / replications),
        mc_stderr_power=math.sqrt(power_hat * (1.0 - power_hat) / replications),
        clip_fraction_null=null_clips / replications,
        clip_fraction_alt=alt_clips / replications,
    )
    if (null_clips or alt_clips) and isinstance(procedure, AndrasikTableProcedure):
        warnings.warn(
            "counts outside the reference table were clipped "
            f"(null fraction {report.clip_fraction_null:.4f}, "
            f"alt fraction {report.clip_fraction_alt:.4f})",
            RuntimeWarning,
            stacklevel=2,
        )
    return report


_COMPONENT_KINDS = {
    "constant": (Constant, ("value",)),
    "pareto": (Pareto, ("scale", "shape")),
    "weibull": (Weibull, ("shape", "scale")),
    "empirical": (EmpiricalPMF, ("values", "probs")),
}


def severity_model_from_dict(data: dict, path: str = "severity") -> SeverityModel:
    """Build a severity model from its JSON form.

    Expected shape: {"components": [{"weight": w, "kind": k, ...params}]}.
    Raises ValueError naming the offending field path.
    """
    if not isinstance(data, dict):
        raise ValueError(f"{path}: expected an object, got {type(data).__name__}")
    entries = data.get("components")
    if not isinstance(entries, list) or not entries:
        raise ValueError(f"{path}.components: expected a non-empty list")
    components = []
    for idx, entry in enumerate(entries):
        here = f"{path}.components[{idx}]"
        if not isinstance(entry, dict):
            raise ValueError(f"{here}: expected an object")
        kind = entry.get("kind")
        if kind not in _COMPONENT_KINDS:
            raise ValueError(
                f"{here}.kind: expected one of {sorted(_COMPONENT_KINDS)}, got {kind!r}"
            )
        cls, fields = _COMPONENT_KINDS[kind]
        weight = entry.get("weight", 1.0)
        kwargs = {}
        for name in fields:
            if name not in entry:
                raise ValueError(f"{here}.{name}: required for kind {kind!r}")
            kwargs[name] = entry[name]
        extra = set(entry) - set(fields) - {"kind", "weight"}
        if extra:
            raise ValueError(f"{here}: unknown fields {sorted(extra)}")
        try:
            if cls is EmpiricalPMF:
                kwargs = {k: tuple(v) for k, v in kwargs.items()}
            components.append((weight, cls(**kwargs)))
        except (TypeError, ValueError) as exc:
            raise ValueError(f"{here}: {exc}") from None
    try:
        return SeverityModel(tuple(components))
    except ValueError as exc:
        raise ValueError(f"{path}: {exc}") from None


def severity_model_to_dict(model: SeverityModel) -> dict:
    out = []
    for weight, comp in model.components:
        if isinstance(comp, Constant):
            entry = {"kind": "constant", "value": comp.value}
        elif isinstance(comp, Pareto):
            entry = {"kind": "pareto", "scale": comp.scale, "shape": comp.shape}
        elif isinstance(comp, Weibull):
            entry = {"kind": "weibull", "shape": comp.shape, "scale": comp.scale}
        else:
            entry = {"kind": "empirical", "values": list(comp.values),
                     "probs": list(comp.probs)}
        entry["weight"] = weight
        out.append(entry)
    return {"components": out}


def procedure_from_dict(data: dict, path: str = "procedure") -> Procedure:
    """Build a decision procedure from {"kind": ..., optional thresholds}."""
    if not isinstance(data, dict):
        raise ValueError(f"{path}: expected an object, got {type(data).__name__}")
    kind = data.get("kind")
    extra = set(data) - {"kind", "probable", "potential"}
    if extra:
        raise ValueError(f"{path}: unknown fields {sorted(extra)}")
    try:
        if kind == "rate-ratio-p":
            defaults = PThresholds()
            return RateRatioPProcedure(PThresholds(
                probable=data.get("probable", defaults.probable),
                potential=data.get("potential", defaults.potential),
            ))
        if kind == "andrasik-table":
            defaults = PosteriorThresholds()
            return AndrasikTableProcedure(PosteriorThresholds(
                probable=data.get("probable", defaults.probable),
                potential=data.get("potential", defaults.potential),
            ))
    except ValueError as exc:
        raise ValueError(f"{path}: {exc}") from None
    raise ValueError(
        f"{path}.kind: expected 'rate-ratio-p' or 'andrasik-table', got {kind!r}"
    )
