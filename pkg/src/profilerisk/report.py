"""Report documents (JSON schema v1), flat CSV tables and plot-data files.

JSON carries full precision and canonical key order; CSV renders
percentages at one decimal with half-up rounding.
"""
from __future__ import annotations

import csv
import io
import json
import statistics
from decimal import ROUND_HALF_UP, Decimal
from fractions import Fraction
from functools import lru_cache
from importlib import resources
from pathlib import Path
from typing import Any, Iterable, Mapping, Sequence

import jsonschema
import numpy as np

from . import __version__, _backend
from ._io import atomic_write_text
from .attack import AttackReport, RunSummary
from .metrics import MetricsTable
from .partition import KDelta, UniquenessReport

SCHEMA_VERSION = 1


def fmt_decimal(x: Fraction | float, places: int = 1) -> str:
    """Half-up rounding of an exact fraction (or float, via its repr)."""
    if isinstance(x, Fraction):
        d = Decimal(x.numerator) / Decimal(x.denominator)
    else:
        d = Decimal(repr(float(x)))
    q = Decimal(1).scaleb(-places)
    out = d.quantize(q, rounding=ROUND_HALF_UP)
    return str(out + 0)  # normalizes -0.0


def fmt_median(x: Fraction | float) -> str:
    f = Fraction(x)
    return str(f.numerator) if f.denominator == 1 else fmt_decimal(f, 1)


def threshold_labels(thresholds: Iterable[int]) -> list[str]:
    return ["k=1", *(f"k<{t}" for t in thresholds)]


# ----------------------------------------------------------------------
# result -> JSON-ready dicts


def uniqueness_to_dict(rep: UniquenessReport, run: int | None = None, per_speaker: bool = True) -> dict:
    out = {
        "run": run,
        "n_speakers": rep.n_speakers,
        "n_unique": rep.n_unique,
        "n_below": {str(t): c for t, c in rep.n_below.items()},
        "pct_unique": float(rep.pct_unique),
        "pct_below": {str(t): float(p) for t, p in rep.pct_below.items()},
        "median_k": float(rep.median_k),
    }
    if per_speaker:
        out["per_speaker_k"] = dict(rep.per_speaker_k)
    return out


def summarize_uniqueness(runs: Sequence[UniquenessReport]) -> dict:
    """Mean and sample std over runs for each uniqueness row."""
    def ms(values: list[float]) -> dict:
        return {
            "mean": statistics.fmean(values),
            "std": statistics.stdev(values) if len(values) > 1 else 0.0,
        }

    thresholds = runs[0].thresholds
    return {
        "n_runs": len(runs),
        "pct_unique": ms([float(r.pct_unique) for r in runs]),
        "pct_below": {str(t): ms([float(r.pct_below[t]) for r in runs]) for t in thresholds},
        "median_k": ms([float(r.median_k) for r in runs]),
    }


def attack_to_dict(cf: AttackReport, run: int | None = None, mc: AttackReport | None = None) -> dict:
    out: dict[str, Any] = {
        "run": run,
        "error_rate": cf.error_rate,
        "mode": cf.mode,
        "per_target": {
            t: {"match_set_size": o.match_set_size, "success_prob": str(o.success_prob)}
            for t, o in cf.per_target.items()
        },
    }
    if cf.exact_error is not None:
        out["exact_error"] = str(cf.exact_error)
    if mc is not None:
        out["monte_carlo"] = {
            "error_rate": mc.error_rate,
            "trials": mc.trials,
            "seed": mc.seed,
            "std_error": mc.std_error,
        }
    return out


def run_summary_to_dict(s: RunSummary) -> dict:
    return {
        "mean": s.mean,
        "std": s.std,
        "n_runs": s.n_runs,
        "single_run": s.single_run,
        "display": s.display(),
    }


def kdelta_rows(kd: KDelta) -> list[dict]:
    return [
        {
            "threshold": t,
            "worse": float(r.worse),
            "unchanged": float(r.unchanged),
            "better": float(r.better),
        }
        for t, r in kd.rows.items()
    ]


def mean_kdelta_rows(runs: Sequence[KDelta]) -> list[dict]:
    out = []
    for t in runs[0].rows:
        rows = [kd.rows[t] for kd in runs]
        out.append(
            {
                "threshold": t,
                "worse": float(sum(r.worse for r in rows) / len(rows)),
                "unchanged": float(sum(r.unchanged for r in rows) / len(rows)),
                "better": float(sum(r.better for r in rows) / len(rows)),
            }
        )
    return out


def metrics_to_dict(table: MetricsTable) -> dict:
    return {
        "granularity": table.granularity,
        "baseline_kind": table.baseline_kind,
        "attributes": {
            name: {"accuracy": m.accuracy, "weighted_f1": m.weighted_f1, "baseline": m.baseline}
            for name, m in table.attributes.items()
        },
    }


# ----------------------------------------------------------------------
# documents


def build_report(
    kind: str,
    results: Mapping[str, Any],
    config: Mapping[str, Any],
    inputs: Sequence[Mapping[str, Any]],
) -> dict:
    doc = {
        "schema_version": SCHEMA_VERSION,
        "kind": kind,
        "tool": {
            "name": "profilerisk",
            "version": __version__,
            "numpy": np.__version__,
            "backend": _backend.BACKEND,
        },
        "config": dict(config),
        "inputs": [dict(i) for i in inputs],
        "results": dict(results),
    }
    validate_report(doc)
    return doc


@lru_cache(maxsize=1)
def report_schema() -> dict:
    text = resources.files("profilerisk").joinpath("report_schema_v1.json").read_text("utf-8")
    return json.loads(text)


def validate_report(doc: Mapping[str, Any]) -> None:
    """Raise jsonschema.ValidationError if ``doc`` does not follow schema v1."""
    jsonschema.validate(doc, report_schema())


def dumps(doc: Mapping[str, Any]) -> str:
    return json.dumps(doc, sort_keys=True, indent=2, ensure_ascii=False, allow_nan=False) + "\n"


# ----------------------------------------------------------------------
# CSV tables and plot data


def _csv(rows: Iterable[Sequence[Any]]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    for row in rows:
        writer.writerow(row)
    return buf.getvalue()


def uniqueness_rows(results: Mapping[str, Any]) -> list[list[str]]:
    """Uniqueness table: one row per metric, one column per condition.

    Multi-run conditions show the run mean.
    """
    conds = results["conditions"]
    keys = [None, *(str(t) for t in results["thresholds"])]
    rows = [["metric", *(c["condition"] for c in conds)]]
    for key, label in zip(keys, threshold_labels(results["thresholds"])):
        row = [label]
        for c in conds:
            if len(c["runs"]) == 1:
                # render from counts so rounding sees the exact fraction
                r = c["runs"][0]
                count = r["n_unique"] if key is None else r["n_below"][key]
                row.append(fmt_decimal(Fraction(100 * count, r["n_speakers"])))
            else:
                s = c["summary"]
                row.append(fmt_decimal(s["pct_unique"]["mean"] if key is None else s["pct_below"][key]["mean"]))
        rows.append(row)
    med = ["median"]
    for c in conds:
        if len(c["runs"]) == 1:
            med.append(fmt_median(Fraction(c["runs"][0]["median_k"])))
        else:
            med.append(fmt_decimal(c["summary"]["median_k"]["mean"]))
    rows.append(med)
    return rows


def threshold_series_rows(results: Mapping[str, Any]) -> list[list[Any]]:
    """Per-run percentage of speakers at each threshold, per condition."""
    rows: list[list[Any]] = [["condition", "run", "threshold", "pct"]]
    for c in results["conditions"]:
        for r in c["runs"]:
            run = "" if r["run"] is None else r["run"]
            rows.append([c["condition"], run, "k=1", fmt_decimal(Fraction(100 * r["n_unique"], r["n_speakers"]))])
            for t in results["thresholds"]:
                pct = Fraction(100 * r["n_below"][str(t)], r["n_speakers"])
                rows.append([c["condition"], run, f"k<{t}", fmt_decimal(pct)])
    return rows


def error_rate_rows(results: Mapping[str, Any]) -> list[list[Any]]:
    rows: list[list[Any]] = [["target", "reference", "mean", "std", "n_runs", "display"]]
    for c in results["conditions"]:
        rows.append(
            [c["target"], c["reference"], fmt_decimal(c["mean"], 4), fmt_decimal(c["std"], 4), c["n_runs"], c["display"]]
        )
    return rows


def kdelta_rows_csv(results: Mapping[str, Any]) -> list[list[Any]]:
    rows: list[list[Any]] = [["threshold", "worse", "unchanged", "better"]]
    for r in results["mean_rows"]:
        rows.append([r["threshold"], fmt_decimal(r["worse"]), fmt_decimal(r["unchanged"]), fmt_decimal(r["better"])])
    return rows


def metrics_table_rows(results: Mapping[str, Any]) -> list[list[Any]]:
    rows: list[list[Any]] = [["attribute", "baseline", "accuracy", "weighted_f1"]]
    for name, m in results["attributes"].items():
        rows.append([name, fmt_decimal(m["baseline"], 2), fmt_decimal(m["accuracy"], 2), fmt_decimal(m["weighted_f1"], 2)])
    return rows


# kind -> {file stem: row builder}
CSV_TABLES = {
    "uniqueness": {"uniqueness_table": uniqueness_rows, "threshold_series": threshold_series_rows},
    "attack": {"error_rates": error_rate_rows},
    "kdelta": {"kdelta_table": kdelta_rows_csv},
    "metrics": {"metrics_table": metrics_table_rows},
}


def csv_tables(doc: Mapping[str, Any]) -> dict[str, str]:
    builders = CSV_TABLES.get(doc["kind"], {})
    return {stem: _csv(fn(doc["results"])) for stem, fn in builders.items()}


def emit_report(doc: Mapping[str, Any], fmt: str, path: str | Path) -> list[Path]:
    """Write ``doc`` as JSON to ``path`` or, for ``csv``, each flat table next to it.

    CSV files are named ``<path stem>_<table>.csv``. Returns written paths.
    """
    path = Path(path)
    if fmt == "json":
        validate_report(doc)
        return [atomic_write_text(path, dumps(doc))]
    if fmt == "csv":
        out = []
        for stem, text in csv_tables(doc).items():
            out.append(atomic_write_text(path.with_name(f"{path.stem}_{stem}.csv"), text))
        return out
    raise ValueError(f"unknown report format {fmt!r}")
