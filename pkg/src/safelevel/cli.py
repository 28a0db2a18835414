"""Command-line front end.

Subcommands:

    test      exact rate-ratio test on two count/exposure windows
    table     p-value matrix over count grids, optionally with markers
    bayes     posterior deterioration probability or reference-table lookup
    simulate  compound Poisson batches (batch or moment-check mode)
    power     Monte-Carlo type-I/type-II error study
    assess    CSV ingestion through test and report emission

Exit codes: 0 success, 1 usage or data error; with --gate, the decision
maps to 0 (none), 3 (potential), or 4 (probable).  Randomized commands
take their seed from --seed, the config file, or SAFELEVEL_SEED, in that
order, and never fall back to nondeterminism.
"""
from __future__ import annotations

import argparse
import json
import math
import os
import sys

from . import bayes, ingest, simulate
from .classify import (
    Category,
    Decision,
    PosteriorThresholds,
    PThresholds,
    classify_p,
    classify_posterior,
    marker_for,
)
from .ingest import ComparisonResult, ReportBundle, format_fixed
from .probkit import RandomStream
from .rate_ratio import CountWindow, generate_p_table, rate_ratio_test

__all__ = ["main"]

SPEC_VERSION = 1

_GATE_CODES = {
    Category.NO_DETERIORATION: 0,
    Category.POTENTIAL_DETERIORATION: 3,
    Category.PROBABLE_DETERIORATION: 4,
}


class _Parser(argparse.ArgumentParser):
    """argparse exits 2 on usage errors; the contract here is 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        raise _UsageError(message)


class _UsageError(ValueError):
    pass


def _decimal(text: str, locale_decimal: bool) -> str:
    return text.replace(".", ",") if locale_decimal else text


def _parse_thresholds(text: str, kind: str):
    try:
        first, second = (float(part) for part in text.split(","))
    except ValueError:
        raise _UsageError(
            f"--thresholds expects two comma-separated numbers, got {text!r}"
        ) from None
    try:
        if kind == "p":
            return PThresholds(probable=first, potential=second)
        return PosteriorThresholds(probable=first, potential=second)
    except ValueError as exc:
        raise _UsageError(str(exc)) from None


def _resolve_seed(cli_seed, config_seed=None):
    if cli_seed is not None:
        return cli_seed
    if config_seed is not None:
        if not isinstance(config_seed, int) or isinstance(config_seed, bool):
            raise _UsageError(f"config seed must be an integer, got {config_seed!r}")
        return config_seed
    env = os.environ.get("SAFELEVEL_SEED")
    if env is not None:
        try:
            return int(env)
        except ValueError:
            raise _UsageError(f"SAFELEVEL_SEED must be an integer, got {env!r}") from None
    raise _UsageError("no seed given (use --seed, the config file, or SAFELEVEL_SEED)")


def _emit_json(doc: dict, out=None) -> None:
    (out or sys.stdout).write(json.dumps(doc, indent=2) + "\n")


def _decision_dict(decision: Decision) -> dict:
    return {
        "category": decision.category.value,
        "marker": decision.marker,
        "source": decision.source,
    }


# ---------------------------------------------------------------- test

def _add_window_flags(parser: _Parser) -> None:
    parser.add_argument("--ref-events", type=int, required=True)
    parser.add_argument("--ref-exposure", type=float, required=True)
    parser.add_argument("--target-events", type=int, required=True)
    parser.add_argument("--target-exposure", type=float, required=True)


def cmd_test(args) -> int:
    thresholds = _parse_thresholds(args.thresholds, "p")
    reference = CountWindow(args.ref_events, args.ref_exposure, "reference")
    target = CountWindow(args.target_events, args.target_exposure, "target")
    result = rate_ratio_test(reference, target, null_ratio=args.null_ratio)
    gated_p = result.p_two_sided if args.alternative == "two-sided" else result.p_one_sided
    decision = classify_p(gated_p, thresholds, source=args.alternative)

    if args.format == "json":
        _emit_json({
            "spec_version": SPEC_VERSION,
            "command": "test",
            "p_one_sided": result.p_one_sided,
            "p_two_sided": result.p_two_sided,
            "conditional_n": result.conditional_n,
            "p0": result.p0,
            "null_ratio": result.null_ratio,
            "alternative": args.alternative,
            "decision": _decision_dict(decision),
        })
    else:
        loc = args.locale_decimal
        print(f"p (one-sided): {_decimal(format_fixed(result.p_one_sided), loc)}")
        print(f"p (two-sided): {_decimal(format_fixed(result.p_two_sided), loc)}")
        print(f"p0: {_decimal(repr(result.p0), loc)}")
        print(f"conditional n: {result.conditional_n}")
        marked = f"{decision.marker} {decision.category.value}".strip()
        print(f"decision: {marked}")
    return _GATE_CODES[decision.category] if args.gate else 0


# --------------------------------------------------------------- table

def cmd_table(args) -> int:
    if args.max_ref < 0 or args.max_target < 0:
        raise _UsageError("--max-ref and --max-target must be non-negative")
    thresholds = _parse_thresholds(args.thresholds, "p")
    table = generate_p_table(
        args.max_ref, args.max_target, args.ref_exposure, args.target_exposure
    )
    markers = [
        [marker_for(classify_p(p, thresholds).category) for p in row]
        for row in table
    ]

    if args.format == "json":
        cells = [
            {"n_ref": i, "n_target": j, "p": table[i][j],
             "marker": markers[i][j] if args.markers else ""}
            for i in range(len(table)) for j in range(len(table[i]))
        ]
        _emit_json({
            "spec_version": SPEC_VERSION,
            "command": "table",
            "max_ref": args.max_ref,
            "max_target": args.max_target,
            "ref_exposure": args.ref_exposure,
            "target_exposure": args.target_exposure,
            "markers": bool(args.markers),
            "cells": cells,
        })
    elif args.format == "csv":
        print("n_ref,n_target,p,marker")
        for i, row in enumerate(table):
            for j, p in enumerate(row):
                marker = markers[i][j] if args.markers else ""
                print(f"{i},{j},{p!r},{marker}")
    else:
        loc = args.locale_decimal
        width = 8
        header = "ref\\tgt" + "".join(f"{j:>{width}}" for j in range(len(table[0])))
        print(header)
        for i, row in enumerate(table):
            cells = []
            for j, p in enumerate(row):
                text = _decimal(format_fixed(p), loc)
                if args.markers and markers[i][j]:
                    text = f"{markers[i][j]} {text}"
                cells.append(f"{text:>{width}}")
            print(f"{i:<7}" + "".join(cells))
    return 0


# --------------------------------------------------------------- bayes

def cmd_bayes(args) -> int:
    thresholds = _parse_thresholds(args.thresholds, "posterior")
    if args.lookup is not None:
        n_ref, n_target = args.lookup
        level = bayes.andrasik_lookup(n_ref, n_target)
        decision = classify_posterior(level, thresholds, source="andrasik-table")
        payload = {
            "spec_version": SPEC_VERSION,
            "command": "bayes",
            "mode": "lookup",
            "n_ref": n_ref,
            "n_target": n_target,
            "posterior_deterioration": level,
            "published_marker": bayes.andrasik_marker(n_ref, n_target),
            "decision": _decision_dict(decision),
        }
        lines = [
            f"posterior deterioration: {format_fixed(level)}",
            f"decision: {f'{decision.marker} {decision.category.value}'.strip()}",
        ]
    else:
        missing = [flag for flag, value in (
            ("--ref-events", args.ref_events), ("--ref-exposure", args.ref_exposure),
            ("--target-events", args.target_events),
            ("--target-exposure", args.target_exposure),
        ) if value is None]
        if missing:
            raise _UsageError(
                f"either --lookup or all window flags required; missing {' '.join(missing)}"
            )
        prior = bayes.BetaPrior(args.prior_alpha, args.prior_beta)
        result = bayes.posterior_deterioration_prob(
            prior,
            CountWindow(args.ref_events, args.ref_exposure, "reference"),
            CountWindow(args.target_events, args.target_exposure, "target"),
        )
        decision = classify_posterior(
            result.posterior_deterioration, thresholds, source="beta-posterior"
        )
        payload = {
            "spec_version": SPEC_VERSION,
            "command": "bayes",
            "mode": "posterior",
            "posterior_deterioration": result.posterior_deterioration,
            "posterior_alpha": result.posterior_alpha,
            "posterior_beta": result.posterior_beta,
            "p0": result.p0,
            "decision": _decision_dict(decision),
        }
        lines = [
            f"posterior deterioration: {format_fixed(result.posterior_deterioration)}",
            f"posterior: Beta({result.posterior_alpha:g}, {result.posterior_beta:g})",
            f"p0: {result.p0!r}",
            f"decision: {f'{decision.marker} {decision.category.value}'.strip()}",
        ]

    if args.format == "json":
        _emit_json(payload)
    else:
        for line in lines:
            print(line)
    return 0


# ------------------------------------------------------- simulate/power

def _load_config(path: str) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except OSError as exc:
        raise _UsageError(f"cannot read config {path!r}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise _UsageError(f"config {path!r} is not valid JSON: {exc}") from None
    if not isinstance(data, dict):
        raise _UsageError("config root must be a JSON object")
    return data


def _config_number(config: dict, path: str, default=None, required=False,
                   minimum=None, exclusive=False, integer=False):
    cursor = config
    parts = path.split(".")
    for part in parts[:-1]:
        cursor = cursor.get(part, {}) if isinstance(cursor, dict) else {}
    value = cursor.get(parts[-1]) if isinstance(cursor, dict) else None
    if value is None:
        if required:
            raise _UsageError(f"config error at {path}: required")
        return default
    ok = isinstance(value, int) and not isinstance(value, bool) if integer \
        else isinstance(value, (int, float)) and not isinstance(value, bool)
    if ok and minimum is not None:
        ok = value > minimum if exclusive else value >= minimum
    if not ok:
        kind = "an integer" if integer else "a number"
        bound = ""
        if minimum is not None:
            bound = f" {'>' if exclusive else '>='} {minimum}"
        raise _UsageError(f"config error at {path}: expected {kind}{bound}, got {value!r}")
    return value


def _write_files(out_prefix: str, doc: dict, csv_lines: list[str]) -> tuple[str, str]:
    json_path = out_prefix + ".json"
    csv_path = out_prefix + ".csv"
    with open(json_path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(json.dumps(doc, indent=2) + "\n")
    with open(csv_path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(csv_lines) + "\n")
    return json_path, csv_path


def cmd_simulate(args) -> int:
    config = _load_config(args.config)
    mode = config.get("mode", "batch")
    if mode not in ("batch", "moment-check"):
        raise _UsageError(
            f"config error at mode: expected 'batch' or 'moment-check', got {mode!r}"
        )
    process = config.get("process")
    if not isinstance(process, dict):
        raise _UsageError("config error at process: required object")
    rate = _config_number(config, "process.rate", required=True, minimum=0)
    exposure = _config_number(config, "process.exposure", required=True,
                              minimum=0, exclusive=True)
    severity_data = process.get("severity")
    if severity_data is None:
        raise _UsageError("config error at process.severity: required")
    try:
        severity = simulate.severity_model_from_dict(severity_data, "process.severity")
        spec = simulate.CompoundPoissonSpec(rate, float(exposure), severity)
    except ValueError as exc:
        raise _UsageError(str(exc)) from None
    replications = args.replications or _config_number(
        config, "replications", default=10_000, minimum=1, integer=True)
    seed = _resolve_seed(args.seed, config.get("seed"))
    stream_id = _config_number(config, "stream_id", default=0, minimum=0, integer=True)

    theoretical = None
    if mode == "moment-check":
        theoretical = simulate.theoretical_moments(spec)

    base = RandomStream(seed, stream_id)
    csv_lines = ["replication,n_events,total_severity"]
    count_sum = 0
    total_sum = 0.0
    total_sq_sum = 0.0
    for r in range(replications):
        real = simulate.simulate_process(spec, base.child(r))
        csv_lines.append(f"{r},{real.n_events},{real.total_severity!r}")
        count_sum += real.n_events
        total_sum += real.total_severity
        total_sq_sum += real.total_severity * real.total_severity

    mean_hat = total_sum / replications
    var_hat = max(0.0, (total_sq_sum - replications * mean_hat * mean_hat)
                  / (replications - 1)) if replications > 1 else 0.0
    summary = {
        "replications": replications,
        "seed": seed,
        "stream_id": stream_id,
        "mean_events": count_sum / replications,
        "mean_total_severity": mean_hat,
        "var_total_severity": var_hat,
        "mc_stderr_mean": math.sqrt(var_hat / replications),
    }
    if theoretical is not None:
        summary["theoretical_mean"] = theoretical[0]
        summary["theoretical_variance"] = theoretical[1]
    doc = {
        "spec_version": SPEC_VERSION,
        "command": "simulate",
        "mode": mode,
        "config": {
            "process": {
                "rate": rate,
                "exposure": float(exposure),
                "severity": simulate.severity_model_to_dict(severity),
            },
        },
        "summary": summary,
    }
    json_path, csv_path = _write_files(args.out, doc, csv_lines)

    if args.format == "json":
        _emit_json(doc)
    else:
        print(f"replications: {replications}")
        print(f"mean total severity: {mean_hat:.6g}"
              f" (mc stderr {summary['mc_stderr_mean']:.3g})")
        print(f"variance of total severity: {var_hat:.6g}")
        if theoretical is not None:
            print(f"theoretical mean/variance: {theoretical[0]:.6g} / {theoretical[1]:.6g}")
        print(f"wrote {json_path} and {csv_path}")
    return 0


def cmd_power(args) -> int:
    config = _load_config(args.config)
    procedure_data = config.get("procedure")
    if procedure_data is None:
        raise _UsageError("config error at procedure: required")
    try:
        procedure = simulate.procedure_from_dict(procedure_data, "procedure")
    except ValueError as exc:
        raise _UsageError(str(exc)) from None
    rate_ref = _config_number(config, "rate_ref", required=True, minimum=0)
    rate_null = _config_number(config, "rate_target_null", required=True, minimum=0)
    rate_alt = _config_number(config, "rate_target_alt", required=True, minimum=0)
    exp_ref = _config_number(config, "exposure_ref", required=True,
                             minimum=0, exclusive=True)
    exp_target = _config_number(config, "exposure_target", required=True,
                                minimum=0, exclusive=True)
    counted = config.get("decision_counted", "probable")
    replications = args.replications or _config_number(
        config, "replications", default=10_000, minimum=1, integer=True)
    workers = args.workers or _config_number(
        config, "workers", default=1, minimum=1, integer=True)
    seed = _resolve_seed(args.seed, config.get("seed"))
    stream_id = _config_number(config, "stream_id", default=0, minimum=0, integer=True)

    try:
        report = simulate.estimate_error_rates(
            procedure,
            rate_ref, rate_null, rate_alt,
            float(exp_ref), float(exp_target),
            decision_counted=counted,
            replications=replications,
            stream=RandomStream(seed, stream_id),
            workers=workers,
        )
    except ValueError as exc:
        raise _UsageError(f"config error: {exc}") from None

    doc = {
        "spec_version": SPEC_VERSION,
        "command": "power",
        "config": {
            "procedure_id": report.procedure_id,
            "rate_ref": rate_ref,
            "rate_target_null": rate_null,
            "rate_target_alt": rate_alt,
            "exposure_ref": exp_ref,
            "exposure_target": exp_target,
            "decision_counted": str(counted),
            "seed": seed,
            "stream_id": stream_id,
            "workers": workers,
        },
        "report": report.to_dict(),
    }
    csv_lines = ["regime,rate_target,estimate,mc_stderr,clip_fraction"]
    csv_lines.append(
        f"null,{rate_null!r},{report.alpha_hat!r},"
        f"{report.mc_stderr_alpha!r},{report.clip_fraction_null!r}"
    )
    csv_lines.append(
        f"alt,{rate_alt!r},{report.power_hat!r},"
        f"{report.mc_stderr_power!r},{report.clip_fraction_alt!r}"
    )
    json_path, csv_path = _write_files(args.out, doc, csv_lines)

    if args.format == "json":
        _emit_json(doc)
    else:
        print(f"procedure: {report.procedure_id}")
        print(f"replications: {report.replications}")
        print(f"alpha_hat: {report.alpha_hat:.6g} (mc stderr {report.mc_stderr_alpha:.3g})")
        print(f"power_hat: {report.power_hat:.6g} (mc stderr {report.mc_stderr_power:.3g})")
        if report.clip_fraction_null or report.clip_fraction_alt:
            print(f"clip fractions: null {report.clip_fraction_null:.4g},"
                  f" alt {report.clip_fraction_alt:.4g}")
        print(f"wrote {json_path} and {csv_path}")
    return 0


# -------------------------------------------------------------- assess

def _parse_date_arg(text: str, flag: str):
    import datetime
    try:
        return datetime.date.fromisoformat(text)
    except ValueError:
        raise _UsageError(f"{flag} expects ISO-8601 dates, got {text!r}") from None


def cmd_assess(args) -> int:
    records = ingest.parse_accidents(args.accidents)
    exposures = ingest.parse_exposures(args.exposure)
    ref_window = tuple(_parse_date_arg(t, "--reference") for t in args.reference)
    target_window = tuple(_parse_date_arg(t, "--target") for t in args.target)

    details = {}
    for name, window in (("reference", ref_window), ("target", target_window)):
        details[name] = ingest.aggregate_detail(
            records, exposures, window, args.operator,
            category=args.category, basis=args.basis, fwsi_weight=args.fwsi_weight,
        )
    reference = details["reference"].window
    target = details["target"].window

    label = (f"{args.operator} {args.basis}"
             + (f" [{args.category}]" if args.category else ""))
    comparisons = []
    if args.method in ("rate-ratio", "both"):
        result = rate_ratio_test(reference, target, null_ratio=args.null_ratio)
        decision = classify_p(result.p_one_sided, _parse_thresholds(args.thresholds, "p"))
        extras = [
            ("p_two_sided", result.p_two_sided),
            ("p0", result.p0),
            ("null_ratio", result.null_ratio),
        ]
        if args.basis == "fwsi":
            extras.append(("reference_unrounded", details["reference"].raw_total))
            extras.append(("target_unrounded", details["target"].raw_total))
        comparisons.append(ComparisonResult(
            label=label,
            method="rate-ratio",
            reference_events=reference.events,
            reference_exposure=reference.exposure,
            target_events=target.events,
            target_exposure=target.exposure,
            statistic_kind="p_one_sided",
            statistic=result.p_one_sided,
            decision=decision,
            extras=tuple(extras),
        ))
    if args.method in ("bayes", "both"):
        prior = bayes.BetaPrior(args.prior_alpha, args.prior_beta)
        result = bayes.posterior_deterioration_prob(prior, reference, target)
        decision = classify_posterior(result.posterior_deterioration)
        extras = [
            ("posterior_alpha", result.posterior_alpha),
            ("posterior_beta", result.posterior_beta),
            ("p0", result.p0),
        ]
        if args.basis == "fwsi":
            extras.append(("reference_unrounded", details["reference"].raw_total))
            extras.append(("target_unrounded", details["target"].raw_total))
        comparisons.append(ComparisonResult(
            label=label,
            method="bayes",
            reference_events=reference.events,
            reference_exposure=reference.exposure,
            target_events=target.events,
            target_exposure=target.exposure,
            statistic_kind="posterior_deterioration",
            statistic=result.posterior_deterioration,
            decision=decision,
            extras=tuple(extras),
        ))

    bundle = ReportBundle(
        comparisons=tuple(comparisons),
        fwsi_weight=args.fwsi_weight if args.basis == "fwsi" else None,
    )
    sys.stdout.write(ingest.emit_report(bundle, args.format).decode("utf-8"))
    return 0


# ---------------------------------------------------------------- main

def build_parser() -> _Parser:
    parser = _Parser(prog="safelevel", description=__doc__,
                     formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)

    p_test = sub.add_parser("test", help="exact rate-ratio test")
    _add_window_flags(p_test)
    p_test.add_argument("--null-ratio", type=float, default=1.0)
    p_test.add_argument("--alternative", choices=["greater", "two-sided"],
                        default="greater")
    p_test.add_argument("--thresholds", default="0.1,0.25",
                        help="probable,potential p cutoffs")
    p_test.add_argument("--gate", action="store_true",
                        help="exit 0/3/4 by decision category")
    p_test.add_argument("--format", choices=["text", "json"], default="text")
    p_test.add_argument("--locale-decimal", action="store_true",
                        help="render decimals with a comma")
    p_test.set_defaults(func=cmd_test)

    p_table = sub.add_parser("table", help="p-value matrix over count grids")
    p_table.add_argument("--max-ref", type=int, default=5)
    p_table.add_argument("--max-target", type=int, default=7)
    p_table.add_argument("--ref-exposure", type=float, default=4.0)
    p_table.add_argument("--target-exposure", type=float, default=1.0)
    p_table.add_argument("--markers", action="store_true",
                         help="annotate cells with +/* decision markers")
    p_table.add_argument("--thresholds", default="0.1,0.25")
    p_table.add_argument("--format", choices=["text", "csv", "json"], default="text")
    p_table.add_argument("--locale-decimal", action="store_true")
    p_table.set_defaults(func=cmd_table)

    p_bayes = sub.add_parser("bayes", help="posterior deterioration probability")
    p_bayes.add_argument("--lookup", nargs=2, type=int, metavar=("N_REF", "N_TARGET"),
                         help="read the embedded reference table")
    p_bayes.add_argument("--prior-alpha", type=float, default=1.0)
    p_bayes.add_argument("--prior-beta", type=float, default=1.0)
    p_bayes.add_argument("--ref-events", type=int)
    p_bayes.add_argument("--ref-exposure", type=float)
    p_bayes.add_argument("--target-events", type=int)
    p_bayes.add_argument("--target-exposure", type=float)
    p_bayes.add_argument("--thresholds", default="0.9,0.75",
                         help="probable,potential posterior cutoffs")
    p_bayes.add_argument("--format", choices=["text", "json"], default="text")
    p_bayes.set_defaults(func=cmd_bayes)

    p_sim = sub.add_parser("simulate", help="compound Poisson batches")
    p_sim.add_argument("--config", required=True, help="JSON study configuration")
    p_sim.add_argument("--seed", type=int)
    p_sim.add_argument("--replications", type=int)
    p_sim.add_argument("--out", required=True, help="output path prefix")
    p_sim.add_argument("--format", choices=["text", "json"], default="text")
    p_sim.set_defaults(func=cmd_simulate)

    p_power = sub.add_parser("power", help="type-I/type-II error study")
    p_power.add_argument("--config", required=True)
    p_power.add_argument("--seed", type=int)
    p_power.add_argument("--replications", type=int)
    p_power.add_argument("--workers", type=int)
    p_power.add_argument("--out", required=True)
    p_power.add_argument("--format", choices=["text", "json"], default="text")
    p_power.set_defaults(func=cmd_power)

    p_assess = sub.add_parser("assess", help="CSV ingestion through report emission")
    p_assess.add_argument("--accidents", required=True)
    p_assess.add_argument("--exposure", required=True)
    p_assess.add_argument("--operator", required=True)
    p_assess.add_argument("--category")
    p_assess.add_argument("--reference", nargs=2, required=True,
                          metavar=("START", "END"), help="half-open date window")
    p_assess.add_argument("--target", nargs=2, required=True,
                          metavar=("START", "END"))
    p_assess.add_argument("--basis", choices=["events", "fatalities", "fwsi"],
                          default="events")
    p_assess.add_argument("--fwsi-weight", type=float, default=0.1)
    p_assess.add_argument("--method", choices=["rate-ratio", "bayes", "both"],
                          default="rate-ratio")
    p_assess.add_argument("--null-ratio", type=float, default=1.0)
    p_assess.add_argument("--thresholds", default="0.1,0.25")
    p_assess.add_argument("--prior-alpha", type=float, default=1.0)
    p_assess.add_argument("--prior-beta", type=float, default=1.0)
    p_assess.add_argument("--format", choices=["text", "json", "csv"], default="text")
    p_assess.set_defaults(func=cmd_assess)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except _UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
