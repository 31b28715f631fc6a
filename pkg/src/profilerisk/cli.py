"""Command-line front end.

    profilerisk <command> [--config run.json] [--schema S] [--seed N] [--runs R]
                [--thresholds 3,5,10] [--out DIR] [--format json,csv] ...

Values come from built-in defaults, then the JSON config file, then flags
(flags win). Every output embeds the resolved config and input hashes and
is written atomically. Exit codes: 0 ok, 1 validation, 2 usage, 3 internal.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import sys
import traceback
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable, Sequence

from . import report as rep
from ._seeding import derive_seed
from .attack import AttackInstance, attack_closed_form, attack_monte_carlo, summarize_runs
from .channel import ConfusionChannel, apply_channel, channel_from_accuracy, load_channel
from .dataset import (
    ProfileDataset,
    detect_kind,
    load_dataset,
    load_truth_mapping,
    scan_labels,
    to_speaker_level,
    write_dataset,
)
from .errors import ProfileRiskError, ValidationError
from .metrics import classification_metrics
from .partition import k_delta, partition_speakers, uniqueness_report
from .profile_build import ResamplePlan, aggregate, resample_single, to_labels, write_runs
from .schema import AttributeSchema, argmax_profile, load_schema

EXIT_OK, EXIT_VALIDATION, EXIT_USAGE, EXIT_INTERNAL = 0, 1, 2, 3

DEFAULTS: dict[str, Any] = {
    "seed": 0,
    "thresholds": [3, 5, 10],
    "out": "out",
    "format": ["json", "csv"],
    "level": None,
    "mode": None,
    "mc_trials": 0,
    "baseline": "majority",
}

# salt for the Monte Carlo seed stream, so it never coincides with resampling seeds
_MC_STREAM = 0x4D43


class ConfigError(ProfileRiskError):
    pass


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:  # type: ignore[override]
        raise UsageError(message)


@dataclass
class InputSpec:
    path: str
    label: str
    role: str
    kind: str | None = None

    def to_dict(self) -> dict[str, Any]:
        d = {"path": self.path, "label": self.label, "role": self.role}
        if self.kind:
            d["kind"] = self.kind
        return d


# ----------------------------------------------------------------------
# config resolution


def _parse_input(value: Any, role: str, base: Path | None) -> InputSpec:
    if isinstance(value, dict):
        if "path" not in value:
            raise ConfigError(f"input entry without 'path': {value!r}")
        path, label, kind = str(value["path"]), value.get("label"), value.get("kind")
        role = value.get("role", role)
    else:
        text = str(value)
        label, kind = None, None
        head, sep, tail = text.partition("=")
        if sep and "/" not in head and head:
            label, path = head, tail
        else:
            path = text
    if base is not None and not Path(path).is_absolute():
        path = str(base / path)
    return InputSpec(path, label or Path(path).stem, role, kind)


def _as_list(value: Any) -> list:
    if value is None:
        return []
    return list(value) if isinstance(value, (list, tuple)) else [value]


def _split_csv_arg(value: Any) -> list[str]:
    if isinstance(value, str):
        return [v.strip() for v in value.split(",") if v.strip()]
    return [str(v) for v in _as_list(value)]


class Settings:
    """Merged view of defaults < config file < command-line flags."""

    def __init__(self, args: argparse.Namespace) -> None:
        self.command = args.command
        self.file: dict[str, Any] = {}
        self.base: Path | None = None
        if args.config:
            cfg_path = Path(args.config)
            if not cfg_path.exists():
                raise ConfigError(f"config file not found: {cfg_path}")
            try:
                self.file = json.loads(cfg_path.read_text(encoding="utf-8"))
            except json.JSONDecodeError as exc:
                raise ConfigError(f"config file is not valid JSON: {exc}") from None
            if not isinstance(self.file, dict):
                raise ConfigError("config file must hold a JSON object")
            self.base = cfg_path.parent
        self.args = args

    def get(self, name: str, default: Any = None) -> Any:
        flag = getattr(self.args, name, None)
        if flag is not None and flag != []:
            return flag
        if name in self.file:
            return self.file[name]
        return DEFAULTS.get(name) if default is None else default

    def path(self, name: str, required: bool = True) -> str | None:
        flag = getattr(self.args, name, None)
        if flag is not None:
            value = flag
        elif name in self.file:
            value = self.file[name]
            if self.base is not None and not Path(value).is_absolute():
                value = str(self.base / value)
        else:
            value = None
        if value is None:
            if required:
                raise ConfigError(f"--{name.replace('_', '-')} is required")
            return None
        if not Path(value).exists():
            raise ConfigError(f"{name} file not found: {value}")
        return str(value)

    def inputs(self, name: str, role: str, required: bool = True) -> list[InputSpec]:
        flag = getattr(self.args, name, None)
        if flag:
            specs = [_parse_input(v, role, None) for v in flag]
        else:
            specs = [_parse_input(v, role, self.base) for v in _as_list(self.file.get(name))]
        if required and not specs:
            raise ConfigError(f"no {name} given")
        for s in specs:
            if not Path(s.path).exists():
                raise ConfigError(f"input file not found: {s.path}", path=s.path)
        labels = [s.label for s in specs]
        if len(set(labels)) != len(labels):
            raise ConfigError(f"duplicate input labels in {name}: {labels}")
        return specs

    @property
    def seed(self) -> int:
        return int(self.get("seed"))

    @property
    def thresholds(self) -> list[int]:
        ts = sorted({int(t) for t in _split_csv_arg(self.get("thresholds"))})
        if not ts or ts[0] < 2:
            raise ConfigError("thresholds must be integers >= 2")
        return ts

    @property
    def formats(self) -> list[str]:
        fmts = _split_csv_arg(self.get("format"))
        bad = [f for f in fmts if f not in ("json", "csv")]
        if bad or not fmts:
            raise ConfigError(f"unknown output format(s): {bad or fmts}")
        return fmts

    def runs(self, default: int) -> int:
        r = int(self.get("runs", default))
        if r < 1:
            raise ConfigError("runs must be >= 1")
        return r

    @property
    def out(self) -> Path:
        if self.args.out is None and "out" in self.file and self.base is not None:
            return self.base / self.file["out"]
        return Path(self.get("out"))

    def schema(self) -> tuple[AttributeSchema, str]:
        path = self.path("schema")
        assert path is not None
        return load_schema(path), path


def _file_sha256(path: str) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _load(spec: InputSpec, schema: AttributeSchema) -> ProfileDataset:
    return load_dataset(spec.path, schema, kind=spec.kind, source_label=spec.label)  # type: ignore[arg-type]


def _input_entry(spec: InputSpec, ds: ProfileDataset | None = None) -> dict[str, Any]:
    d = spec.to_dict()
    d["sha256"] = ds.content_hash() if ds is not None else _file_sha256(spec.path)
    return d


def _write(doc: dict, settings: Settings, stem: str) -> list[Path]:
    out = settings.out
    written = []
    for fmt in settings.formats:
        written += rep.emit_report(doc, fmt, out / f"{stem}.json")
    return written


def _speaker_runs(
    ds: ProfileDataset, level: str, plan: ResamplePlan
) -> list[tuple[int | None, ProfileDataset]]:
    """Speaker-level label datasets to analyse: one aggregate, or one per resampling run."""
    if level == "speaker":
        return [(None, aggregate(ds))]
    runs = resample_single(to_labels(ds), plan)
    return [(i, to_speaker_level(r)) for i, r in enumerate(runs)]


# ----------------------------------------------------------------------
# commands


def cmd_validate(settings: Settings) -> int:
    schema, schema_path = settings.schema()
    specs = settings.inputs("inputs", "input")
    summaries, errors, inputs = [], [], []
    for spec in specs:
        summary: dict[str, Any] = {"label": spec.label, "path": spec.path}
        issues: list[ProfileRiskError] = []
        ds = None
        try:
            if (spec.kind or detect_kind(spec.path)) == "posteriors":
                ds = _load(spec, schema)
                records = list(ds.records)
            else:
                records, issues = scan_labels(spec.path, schema)
        except ProfileRiskError as exc:
            issues, records = [exc], []
        speakers = {r.speaker_id for r in records}
        bad_speakers = set()
        for issue in issues:
            key = getattr(issue, "key", None)
            if isinstance(key, tuple):
                bad_speakers.add(key[0])
        all_speakers = speakers | bad_speakers
        coverage = {}
        # posteriors count towards their argmax level
        label_payloads = [
            r.payload if isinstance(r.payload, tuple) else argmax_profile(r.payload, schema)
            for r in records
        ]
        for a, attr in enumerate(schema.attributes):
            counts = {lvl: 0 for lvl in attr.levels}
            for prof in label_payloads:
                counts[attr.levels[prof[a]]] += 1
            coverage[attr.name] = {
                "levels_observed": sum(1 for c in counts.values() if c),
                "levels_total": attr.n_levels,
                "counts": counts,
            }
        summary.update(
            n_speakers=len(all_speakers),
            n_utterances=len(records) + sum(1 for i in issues if isinstance(i, ValidationError)),
            n_complete_speakers=len(all_speakers - bad_speakers),
            incomplete_speakers=sorted(bad_speakers),
            coverage=coverage,
            n_errors=len(issues),
        )
        summaries.append(summary)
        for issue in issues:
            errors.append({"input": spec.label, **issue.to_dict()})
        if ds is None and records and not issues:
            ds = ProfileDataset(schema, tuple(records))
        inputs.append(_input_entry(spec, ds))
        line = f"{spec.label}: {summary['n_speakers']} speakers, {summary['n_utterances']} utterances"
        if bad_speakers:
            line += f", {len(bad_speakers)} incomplete speakers"
        print(line)
        for name, cov in coverage.items():
            print(f"  {name}: {cov['levels_observed']}/{cov['levels_total']} levels observed")
    if settings.args.out or "out" in settings.file:
        config = {"command": "validate", "schema": schema_path, "inputs": [s.to_dict() for s in specs]}
        doc = rep.build_report(
            "validate", {"summaries": summaries, "errors": errors, "valid": not errors}, config, inputs
        )
        rep.emit_report(doc, "json", settings.out / "validate.json")
    if errors:
        sys.stderr.write(json.dumps({"valid": False, "errors": errors}, sort_keys=True) + "\n")
        return EXIT_VALIDATION
    return EXIT_OK


def cmd_uniqueness(settings: Settings) -> int:
    schema, schema_path = settings.schema()
    specs = settings.inputs("inputs", "condition")
    level = settings.get("level") or "speaker"
    if level not in ("speaker", "utterance"):
        raise ConfigError(f"unknown level {level!r}")
    thresholds = settings.thresholds
    runs = settings.runs(10) if level == "utterance" else 1
    plan = ResamplePlan(runs, settings.seed)
    conditions, inputs = [], []
    for spec in specs:
        ds = _load(spec, schema)
        inputs.append(_input_entry(spec, ds))
        reports = []
        run_dicts = []
        for run, sds in _speaker_runs(ds, level, plan):
            ur = uniqueness_report(partition_speakers(sds), thresholds)
            reports.append(ur)
            run_dicts.append(rep.uniqueness_to_dict(ur, run))
        conditions.append(
            {
                "condition": spec.label,
                "level": level,
                "runs": run_dicts,
                "summary": rep.summarize_uniqueness(reports),
            }
        )
    config = {
        "command": "uniqueness",
        "schema": schema_path,
        "inputs": [s.to_dict() for s in specs],
        "level": level,
        "runs": runs,
        "seed": settings.seed,
        "thresholds": thresholds,
        "per_run_seeds": list(plan.per_run_seeds) if level == "utterance" else [],
    }
    doc = rep.build_report(
        "uniqueness", {"thresholds": thresholds, "conditions": conditions}, config, inputs
    )
    _write(doc, settings, "uniqueness")
    return EXIT_OK


def cmd_attack(settings: Settings) -> int:
    schema, schema_path = settings.schema()
    targets = settings.inputs("inputs", "target")
    references = settings.inputs("reference", "reference")
    truth_path = settings.path("truth", required=False)
    truth = load_truth_mapping(truth_path) if truth_path else None
    level = settings.get("level") or "utterance"
    if level not in ("speaker", "utterance"):
        raise ConfigError(f"unknown level {level!r}")
    runs = settings.runs(10) if level == "utterance" else 1
    mc_trials = int(settings.get("mc_trials"))
    plan = ResamplePlan(runs, settings.seed)
    mc_master = derive_seed(settings.seed, _MC_STREAM)

    inputs = []
    ref_sets = []
    for spec in references:
        ds = _load(spec, schema)
        inputs.append(_input_entry(spec, ds))
        ref_sets.append((spec.label, aggregate(ds)))
    target_runs = []
    for spec in targets:
        ds = _load(spec, schema)
        inputs.append(_input_entry(spec, ds))
        target_runs.append((spec.label, _speaker_runs(ds, level, plan)))
    if truth_path:
        inputs.append({"path": truth_path, "role": "truth", "label": "truth", "sha256": _file_sha256(truth_path)})

    conditions = []
    for tlabel, truns in target_runs:
        for rlabel, refs in ref_sets:
            run_dicts, errors = [], []
            for run, tds in truns:
                inst = AttackInstance.build(tds, refs, truth)
                cf = attack_closed_form(inst)
                mc = None
                if mc_trials > 0:
                    mc_seed = derive_seed(mc_master, 0 if run is None else run)
                    mc = attack_monte_carlo(inst, mc_trials, mc_seed)
                run_dicts.append(rep.attack_to_dict(cf, run, mc))
                errors.append(cf.error_rate)
            summary = summarize_runs(errors)
            conditions.append(
                {"target": tlabel, "reference": rlabel, "runs": run_dicts, **rep.run_summary_to_dict(summary)}
            )
    config = {
        "command": "attack",
        "schema": schema_path,
        "inputs": [s.to_dict() for s in targets],
        "reference": [s.to_dict() for s in references],
        "truth": truth_path,
        "level": level,
        "runs": runs,
        "seed": settings.seed,
        "mc_trials": mc_trials,
        "per_run_seeds": list(plan.per_run_seeds) if level == "utterance" else [],
    }
    doc = rep.build_report("attack", {"conditions": conditions}, config, inputs)
    _write(doc, settings, "attack")
    return EXIT_OK


def cmd_resample(settings: Settings) -> int:
    schema, schema_path = settings.schema()
    specs = settings.inputs("inputs", "input")
    plan = ResamplePlan(settings.runs(10), settings.seed)
    out_dir = settings.out
    files, inputs = [], []
    for spec in specs:
        ds = _load(spec, schema)
        inputs.append(_input_entry(spec, ds))
        runs = resample_single(ds, plan)
        for i, (path, run) in enumerate(zip(write_runs(runs, out_dir, spec.label), runs)):
            files.append(
                {
                    "condition": spec.label,
                    "run": i,
                    "seed": plan.per_run_seeds[i],
                    "path": path.name,
                    "sha256": run.content_hash(),
                }
            )
    config = {
        "command": "resample",
        "schema": schema_path,
        "inputs": [s.to_dict() for s in specs],
        "runs": plan.runs,
        "seed": settings.seed,
        "per_run_seeds": list(plan.per_run_seeds),
    }
    doc = rep.build_report("resample", {"files": files}, config, inputs)
    rep.emit_report(doc, "json", out_dir / "resample.json")
    return EXIT_OK


def _parse_accuracy(values: Sequence[Any]) -> dict[str, float]:
    if isinstance(values, dict):
        return {str(k): float(v) for k, v in values.items()}
    out = {}
    for item in values:
        name, sep, val = str(item).partition("=")
        if not sep:
            raise ConfigError(f"--accuracy expects NAME=VALUE, got {item!r}")
        out[name] = float(val)
    return out


def cmd_channel(settings: Settings) -> int:
    schema, schema_path = settings.schema()
    specs = settings.inputs("inputs", "input")
    channel_path = settings.path("channel", required=False)
    mode = settings.get("mode")
    accuracy = settings.get("accuracy")
    if channel_path:
        ch = load_channel(channel_path)
        if mode:
            ch = ConfusionChannel(ch.matrices, mode)
    elif accuracy:
        ch = channel_from_accuracy(schema, _parse_accuracy(accuracy), mode or "independent")
    else:
        raise ConfigError("give --channel FILE or --accuracy NAME=VALUE ...")
    runs = settings.runs(1)
    seeds = [derive_seed(settings.seed, i) for i in range(runs)]
    files, inputs = [], []
    for spec in specs:
        ds = to_labels(_load(spec, schema))
        inputs.append(_input_entry(spec, ds))
        for i, seed in enumerate(seeds):
            suffix = "_noisy" if runs == 1 else f"_noisy_run{i}"
            noisy = apply_channel(ds, ch, seed)
            noisy = noisy.derive(noisy.records, source_label=f"{spec.label}{suffix}")
            path = write_dataset(noisy, settings.out / f"{spec.label}{suffix}.csv")
            files.append(
                {"condition": spec.label, "run": i, "seed": seed, "path": path.name, "sha256": noisy.content_hash()}
            )
    if channel_path:
        inputs.append({"path": channel_path, "role": "channel", "label": "channel", "sha256": _file_sha256(channel_path)})
    config = {
        "command": "channel",
        "schema": schema_path,
        "inputs": [s.to_dict() for s in specs],
        "channel": ch.to_dict(),
        "runs": runs,
        "seed": settings.seed,
    }
    doc = rep.build_report("channel", {"files": files}, config, inputs)
    rep.emit_report(doc, "json", settings.out / "channel.json")
    return EXIT_OK


def cmd_kdelta(settings: Settings) -> int:
    schema, schema_path = settings.schema()
    gt_spec = settings.inputs("gt", "ground_truth")
    specs = settings.inputs("inputs", "inferred")
    level = settings.get("level") or "speaker"
    mode = settings.get("mode") or "threshold"
    if mode not in ("threshold", "raw"):
        raise ConfigError(f"unknown kdelta mode {mode!r}")
    thresholds = settings.thresholds
    runs = settings.runs(10) if level == "utterance" else 1
    plan = ResamplePlan(runs, settings.seed)
    gt_ds = _load(gt_spec[0], schema)
    inputs = [_input_entry(gt_spec[0], gt_ds)]
    gt_assign = partition_speakers(aggregate(gt_ds))
    deltas, run_dicts = [], []
    for spec in specs:
        ds = _load(spec, schema)
        inputs.append(_input_entry(spec, ds))
        for run, sds in _speaker_runs(ds, level, plan):
            kd = k_delta(gt_assign, partition_speakers(sds), thresholds, mode)
            deltas.append(kd)
            run_dicts.append({"condition": spec.label, "run": run, "rows": rep.kdelta_rows(kd)})
    config = {
        "command": "kdelta",
        "schema": schema_path,
        "gt": gt_spec[0].to_dict(),
        "inputs": [s.to_dict() for s in specs],
        "level": level,
        "mode": mode,
        "runs": runs,
        "seed": settings.seed,
        "thresholds": thresholds,
    }
    results = {"mode": mode, "runs": run_dicts, "mean_rows": rep.mean_kdelta_rows(deltas)}
    doc = rep.build_report("kdelta", results, config, inputs)
    _write(doc, settings, "kdelta")
    return EXIT_OK


def cmd_metrics(settings: Settings) -> int:
    schema, schema_path = settings.schema()
    truth_spec = settings.inputs("truth_set", "truth")[0]
    pred_spec = settings.inputs("inputs", "prediction")[0]
    level = settings.get("level") or "utterance"
    baseline_kind = settings.get("baseline")
    truth = _load(truth_spec, schema)
    pred = _load(pred_spec, schema)
    inputs = [_input_entry(truth_spec, truth), _input_entry(pred_spec, pred)]
    if level == "speaker":
        truth, pred = aggregate(truth), aggregate(pred)
    else:
        truth, pred = to_labels(truth), to_labels(pred)
    table = classification_metrics(pred, truth, baseline_kind)
    config = {
        "command": "metrics",
        "schema": schema_path,
        "truth_set": truth_spec.to_dict(),
        "inputs": [pred_spec.to_dict()],
        "level": level,
        "baseline": baseline_kind,
    }
    doc = rep.build_report("metrics", rep.metrics_to_dict(table), config, inputs)
    _write(doc, settings, "metrics")
    return EXIT_OK


def cmd_report(settings: Settings) -> int:
    """Re-validate JSON reports and render their flat tables."""
    specs = settings.inputs("inputs", "report")
    for spec in specs:
        try:
            doc = json.loads(Path(spec.path).read_text("utf-8"))
            rep.validate_report(doc)
        except (json.JSONDecodeError, rep.jsonschema.ValidationError) as exc:
            raise ProfileRiskError(f"{spec.path}: not a valid v1 report: {exc}", path=spec.path) from None
        for fmt in settings.formats:
            rep.emit_report(doc, fmt, settings.out / f"{spec.label}.json")
        print(f"{spec.label}: {doc['kind']} report ok")
    return EXIT_OK


COMMANDS: dict[str, Callable[[Settings], int]] = {
    "validate": cmd_validate,
    "uniqueness": cmd_uniqueness,
    "attack": cmd_attack,
    "resample": cmd_resample,
    "channel": cmd_channel,
    "kdelta": cmd_kdelta,
    "metrics": cmd_metrics,
    "report": cmd_report,
}


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--config", help="JSON run config; flags override its values")
    common.add_argument("--schema", help="attribute schema JSON")
    common.add_argument("--seed", type=int)
    common.add_argument("--runs", type=int)
    common.add_argument("--thresholds", help="comma-separated k thresholds (>= 2)")
    common.add_argument("--out", help="output directory")
    common.add_argument("--format", help="json, csv or json,csv")

    parser = _Parser(prog="profilerisk", description=__doc__.split("\n")[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def add(name: str, help: str) -> argparse.ArgumentParser:
        p = sub.add_parser(name, parents=[common], help=help)
        p.add_argument("inputs", nargs="*", metavar="[LABEL=]PATH")
        return p

    add("validate", "check schema and dataset files, print a coverage summary")
    p = add("uniqueness", "anonymity set sizes and uniqueness percentages")
    p.add_argument("--level", choices=["speaker", "utterance"])
    p = add("attack", "exact-match re-identification attack")
    p.add_argument("--reference", action="append", metavar="[LABEL=]PATH")
    p.add_argument("--truth", help="CSV target_speaker_id,reference_speaker_id")
    p.add_argument("--level", choices=["speaker", "utterance"])
    p.add_argument("--mc-trials", dest="mc_trials", type=int)
    add("resample", "draw one utterance per speaker, per run")
    p = add("channel", "push labels through confusion matrices")
    p.add_argument("--channel", help="channel JSON file")
    p.add_argument("--accuracy", action="append", metavar="ATTR=ACC")
    p.add_argument("--mode", choices=["independent", "speaker_consistent"])
    p = add("kdelta", "per-speaker change of k between ground truth and inferred profiles")
    p.add_argument("--gt", action="append", metavar="[LABEL=]PATH")
    p.add_argument("--level", choices=["speaker", "utterance"])
    p.add_argument("--mode", choices=["threshold", "raw"])
    p = add("metrics", "accuracy, weighted F1 and baseline per attribute")
    p.add_argument("--truth", dest="truth_set", action="append", metavar="[LABEL=]PATH")
    p.add_argument("--level", choices=["speaker", "utterance"])
    p.add_argument("--baseline", choices=["majority", "weighted_random"])
    add("report", "validate JSON reports and render CSV tables")
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except UsageError as exc:
        sys.stderr.write(json.dumps({"error": "UsageError", "message": str(exc)}) + "\n")
        return EXIT_USAGE
    try:
        return COMMANDS[args.command](Settings(args))
    except ProfileRiskError as exc:
        sys.stderr.write(json.dumps(exc.to_dict(), sort_keys=True, default=str) + "\n")
        return EXIT_VALIDATION
    except Exception as exc:  # pragma: no cover - defensive
        sys.stderr.write(
            json.dumps(
                {"error": type(exc).__name__, "message": str(exc), "traceback": traceback.format_exc()},
                sort_keys=True,
            )
            + "\n"
        )
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
