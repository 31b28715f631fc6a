"""Profile datasets: loading, validation, canonical writing.

Label files are CSV (``speaker_id,utterance_id,<attr1>,...``) or JSONL with
the same fields; posterior files are JSONL with a ``posteriors`` list of
per-attribute probability vectors. Level names never contain commas, so the
CSV dialect needs no quoting.
"""
from __future__ import annotations

import csv
import hashlib
import io
import json
from collections import defaultdict
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Iterator, Literal, Union

import numpy as np

from ._io import atomic_write_text
from .errors import (
    DimensionMismatch,
    DistributionError,
    EmptyDataset,
    GranularityError,
    ParseError,
    ProfileRiskError,
    UnknownSpeakerError,
    ValidationError,
)
from .schema import AttributeSchema, PosteriorProfile, Profile, make_posterior

Granularity = Literal["utterance", "speaker"]
Payload = Union[Profile, PosteriorProfile]

_BAD_ID_CHARS = set(',\r\n"')


@dataclass(frozen=True)
class ProfileRecord:
    speaker_id: str
    utterance_id: str
    payload: Payload

    @property
    def key(self) -> tuple[str, str]:
        return (self.speaker_id, self.utterance_id)


@dataclass(frozen=True)
class DatasetMeta:
    source_label: str = "unknown"
    granularity: Granularity = "utterance"


@dataclass(frozen=True)
class ProfileDataset:
    """Immutable, canonically ordered collection of profile records.

    Records are sorted by (speaker_id, utterance_id) on construction, so two
    datasets built from permuted inputs compare equal.
    """

    schema: AttributeSchema
    records: tuple[ProfileRecord, ...]
    meta: DatasetMeta = field(default_factory=DatasetMeta)

    def __post_init__(self) -> None:
        records = tuple(sorted(self.records, key=lambda r: r.key))
        object.__setattr__(self, "records", records)
        if not records:
            raise EmptyDataset("dataset has no records")
        if self.meta.granularity not in ("utterance", "speaker"):
            raise GranularityError(f"unknown granularity {self.meta.granularity!r}")
        kinds = {isinstance(r.payload, PosteriorProfile) for r in records}
        if len(kinds) > 1:
            raise ValidationError(None, "dataset mixes label and posterior payloads")
        prev = None
        for r in records:
            if r.key == prev:
                raise ValidationError(r.key, "duplicate (speaker_id, utterance_id)")
            prev = r.key
            if isinstance(r.payload, PosteriorProfile):
                r.payload.check(self.schema)
            else:
                self.schema.check_profile(r.payload)
        if self.meta.granularity == "speaker":
            counts = self.utterance_counts()
            multi = sorted(s for s, c in counts.items() if c > 1)
            if multi:
                raise GranularityError(
                    f"speaker-granularity dataset has several records for {multi[:5]}"
                )

    # -- views -----------------------------------------------------------
    @property
    def payload_kind(self) -> Literal["labels", "posteriors"]:
        return "posteriors" if isinstance(self.records[0].payload, PosteriorProfile) else "labels"

    @property
    def granularity(self) -> Granularity:
        return self.meta.granularity

    @property
    def source_label(self) -> str:
        return self.meta.source_label

    def __len__(self) -> int:
        return len(self.records)

    def speakers(self) -> list[str]:
        return sorted({r.speaker_id for r in self.records})

    def utterance_counts(self) -> dict[str, int]:
        counts: dict[str, int] = defaultdict(int)
        for r in self.records:
            counts[r.speaker_id] += 1
        return dict(counts)

    def by_speaker(self) -> dict[str, tuple[ProfileRecord, ...]]:
        groups: dict[str, list[ProfileRecord]] = defaultdict(list)
        for r in self.records:
            groups[r.speaker_id].append(r)
        return {s: tuple(rs) for s, rs in sorted(groups.items())}

    def label_matrix(self) -> np.ndarray:
        """(n_records, n_attributes) int64 array of level indices."""
        if self.payload_kind != "labels":
            raise GranularityError("label_matrix needs label payloads")
        return np.array([r.payload for r in self.records], dtype=np.int64).reshape(
            len(self.records), len(self.schema)
        )

    def speaker_profiles(self) -> dict[str, Profile]:
        """speaker_id -> label profile, for speaker-granularity label datasets."""
        require_speaker_labels(self)
        return {r.speaker_id: r.payload for r in self.records}  # type: ignore[misc]

    # -- derivation --------------------------------------------------------
    def derive(
        self,
        records: Iterable[ProfileRecord],
        *,
        source_label: str | None = None,
        granularity: Granularity | None = None,
    ) -> "ProfileDataset":
        meta = replace(
            self.meta,
            **{k: v for k, v in (("source_label", source_label), ("granularity", granularity)) if v},
        )
        return ProfileDataset(self.schema, tuple(records), meta)

    # -- serialization ---------------------------------------------------
    def to_text(self) -> str:
        if self.payload_kind == "labels":
            return _labels_csv_text(self)
        return _posteriors_jsonl_text(self)

    def content_hash(self) -> str:
        h = hashlib.sha256()
        h.update(json.dumps(self.schema.to_dict(), sort_keys=True).encode())
        h.update(b"\0")
        h.update(self.to_text().encode("utf-8"))
        return h.hexdigest()


def require_speaker_labels(ds: ProfileDataset) -> None:
    if ds.granularity != "speaker":
        raise GranularityError(
            f"dataset {ds.source_label!r} has utterance granularity; speaker granularity required"
        )
    if ds.payload_kind != "labels":
        raise GranularityError(f"dataset {ds.source_label!r} carries posteriors; labels required")


def to_speaker_level(ds: ProfileDataset) -> ProfileDataset:
    """Relabel a one-record-per-speaker dataset as speaker granularity."""
    if ds.granularity == "speaker":
        return ds
    return ds.derive(ds.records, granularity="speaker")


def restrict_to_speakers(ds: ProfileDataset, ids: Iterable[str]) -> ProfileDataset:
    ids = set(ids)
    if not ids:
        raise ValueError("speaker id set is empty")
    present = {r.speaker_id for r in ds.records}
    missing = sorted(ids - present)
    if missing:
        raise UnknownSpeakerError(missing)
    return ds.derive(r for r in ds.records if r.speaker_id in ids)


# ----------------------------------------------------------------------
# loading


def _check_id(value: object, what: str, line: int, column: int | None) -> str:
    if not isinstance(value, str) or not value or _BAD_ID_CHARS & set(value):
        raise ParseError(line, column, f"invalid {what} {value!r}")
    return value


def _label_rows_csv(path: Path, schema: AttributeSchema) -> Iterator[tuple[int, dict[str, str]]]:
    expected = ["speaker_id", "utterance_id", *schema.names]
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh, quoting=csv.QUOTE_NONE, strict=True)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError(1, None, "empty file", str(path)) from None
        if header != expected:
            col = next(
                (i + 1 for i, (a, b) in enumerate(zip(header, expected)) if a != b),
                min(len(header), len(expected)) + 1,
            )
            raise ParseError(1, col, f"header must be {','.join(expected)}", str(path))
        for row in reader:
            line = reader.line_num
            if not row or row == [""]:
                continue
            if len(row) != len(expected):
                raise ParseError(
                    line, None, f"expected {len(expected)} fields, got {len(row)}", str(path)
                )
            yield line, dict(zip(expected, row))


def _label_rows_jsonl(path: Path, schema: AttributeSchema) -> Iterator[tuple[int, dict[str, str]]]:
    with open(path, encoding="utf-8") as fh:
        for line, text in enumerate(fh, 1):
            if not text.strip():
                continue
            try:
                obj = json.loads(text)
            except json.JSONDecodeError as exc:
                raise ParseError(line, exc.colno, f"invalid JSON: {exc.msg}", str(path)) from None
            if not isinstance(obj, dict):
                raise ParseError(line, None, "record is not a JSON object", str(path))
            row = {}
            for name in ("speaker_id", "utterance_id", *schema.names):
                value = obj.get(name)
                row[name] = "" if value is None else value
            yield line, row


def scan_labels(
    path: str | Path, schema: AttributeSchema
) -> tuple[list[ProfileRecord], list[ProfileRiskError]]:
    """Parse a label file, collecting record-level problems instead of stopping.

    File-level problems (bad header, malformed line) still raise ParseError.
    """
    path = Path(path)
    rows = _label_rows_jsonl if path.suffix.lower() in (".jsonl", ".ndjson") else _label_rows_csv
    records: list[ProfileRecord] = []
    issues: list[ProfileRiskError] = []
    seen: set[tuple[str, str]] = set()
    for line, row in rows(path, schema):
        spk = _check_id(row["speaker_id"], "speaker_id", line, 1)
        utt = _check_id(row["utterance_id"], "utterance_id", line, 2)
        key = (spk, utt)
        if key in seen:
            issues.append(ValidationError(key, "duplicate (speaker_id, utterance_id)", line))
            continue
        seen.add(key)
        profile = []
        problem = None
        for attr in schema.attributes:
            value = row[attr.name]
            if value == "":
                problem = ValidationError(key, f"missing value for {attr.name!r}", line)
                break
            try:
                profile.append(attr.index(value))
            except (KeyError, ValueError):
                problem = ValidationError(key, f"unknown level {value!r} for {attr.name!r}", line)
                break
        if problem is not None:
            issues.append(problem)
            continue
        records.append(ProfileRecord(spk, utt, tuple(profile)))
    return records, issues


def load_labels(
    path: str | Path,
    schema: AttributeSchema,
    *,
    source_label: str | None = None,
    granularity: Granularity = "utterance",
) -> ProfileDataset:
    records, issues = scan_labels(path, schema)
    if issues:
        raise issues[0]
    meta = DatasetMeta(source_label or Path(path).stem, granularity)
    return ProfileDataset(schema, tuple(records), meta)


def load_posteriors(
    path: str | Path,
    schema: AttributeSchema,
    *,
    source_label: str | None = None,
    granularity: Granularity = "utterance",
) -> ProfileDataset:
    path = Path(path)
    records: list[ProfileRecord] = []
    seen: set[tuple[str, str]] = set()
    with open(path, encoding="utf-8") as fh:
        for line, text in enumerate(fh, 1):
            if not text.strip():
                continue
            try:
                obj = json.loads(text)
            except json.JSONDecodeError as exc:
                raise ParseError(line, exc.colno, f"invalid JSON: {exc.msg}", str(path)) from None
            if not isinstance(obj, dict) or "posteriors" not in obj:
                raise ParseError(line, None, "expected object with 'posteriors'", str(path))
            key = (
                _check_id(obj.get("speaker_id"), "speaker_id", line, None),
                _check_id(obj.get("utterance_id"), "utterance_id", line, None),
            )
            if key in seen:
                raise ValidationError(key, "duplicate (speaker_id, utterance_id)", line)
            seen.add(key)
            vectors = obj["posteriors"]
            if not isinstance(vectors, list) or not all(isinstance(v, list) for v in vectors):
                raise ValidationError(key, "posteriors must be a list of lists", line)
            try:
                payload = make_posterior(vectors, schema)
            except DistributionError as exc:
                raise DistributionError(key, exc.reason, line) from None
            except DimensionMismatch as exc:
                raise ValidationError(key, exc.message, line) from None
            records.append(ProfileRecord(*key, payload))
    meta = DatasetMeta(source_label or path.stem, granularity)
    return ProfileDataset(schema, tuple(records), meta)


def detect_kind(path: str | Path) -> Literal["labels", "posteriors"]:
    """JSONL whose first record has a ``posteriors`` field -> posteriors; else labels."""
    path = Path(path)
    if path.suffix.lower() in (".jsonl", ".ndjson"):
        with open(path, encoding="utf-8") as fh:
            first = next((ln for ln in fh if ln.strip()), "")
        try:
            obj = json.loads(first)
        except json.JSONDecodeError:
            return "labels"
        if isinstance(obj, dict) and "posteriors" in obj:
            return "posteriors"
    return "labels"


def load_dataset(
    path: str | Path,
    schema: AttributeSchema,
    *,
    kind: Literal["labels", "posteriors"] | None = None,
    source_label: str | None = None,
    granularity: Granularity = "utterance",
) -> ProfileDataset:
    """Dispatch on ``kind``, detected from the file when omitted."""
    kind = kind or detect_kind(path)
    loader = load_posteriors if kind == "posteriors" else load_labels
    return loader(path, schema, source_label=source_label, granularity=granularity)


def load_truth_mapping(path: str | Path) -> dict[str, str]:
    """CSV ``target_speaker_id,reference_speaker_id`` -> dict."""
    mapping: dict[str, str] = {}
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh, quoting=csv.QUOTE_NONE, strict=True)
        header = next(reader, None)
        if header != ["target_speaker_id", "reference_speaker_id"]:
            raise ParseError(1, 1, "header must be target_speaker_id,reference_speaker_id", str(path))
        for row in reader:
            if not row:
                continue
            if len(row) != 2:
                raise ParseError(reader.line_num, None, "expected 2 fields", str(path))
            if row[0] in mapping:
                raise ValidationError(row[0], "duplicate target in truth mapping", reader.line_num)
            mapping[row[0]] = row[1]
    return mapping


# ----------------------------------------------------------------------
# writing


def _labels_csv_text(ds: ProfileDataset) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, quoting=csv.QUOTE_NONE, lineterminator="\n")
    writer.writerow(["speaker_id", "utterance_id", *ds.schema.names])
    for r in ds.records:
        writer.writerow([r.speaker_id, r.utterance_id, *ds.schema.decode(r.payload)])  # type: ignore[arg-type]
    return buf.getvalue()


def _posteriors_jsonl_text(ds: ProfileDataset) -> str:
    lines = []
    for r in ds.records:
        obj = {
            "speaker_id": r.speaker_id,
            "utterance_id": r.utterance_id,
            "posteriors": [list(d) for d in r.payload.distributions],  # type: ignore[union-attr]
        }
        lines.append(json.dumps(obj, separators=(",", ":")))
    return "\n".join(lines) + "\n"


def write_dataset(ds: ProfileDataset, path: str | Path) -> Path:
    """Canonical serialization: CSV for labels, JSONL for posteriors."""
    return atomic_write_text(path, ds.to_text())


write_labels = write_dataset
write_posteriors = write_dataset
