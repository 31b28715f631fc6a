from __future__ import annotations

import itertools
import random
import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from profilerisk.dataset import DatasetMeta, ProfileDataset, ProfileRecord  # noqa: E402
from profilerisk.schema import AttributeDef, AttributeSchema  # noqa: E402

ACCENTS = [f"accent_{i:02d}" for i in range(29)]
PROFESSIONS = ["actor", "musician", "athlete", "politician", "journalist", "other"]

# class-size spectrum reproducing the ground-truth uniqueness column:
# 28 singletons, 6 pairs, one class each of 3, 4, 5 and two of 10 -> 72 speakers
FIXTURE_SPECTRUM = [1] * 28 + [2] * 6 + [3, 4, 5] + [10, 10]


def paper_schema() -> AttributeSchema:
    return AttributeSchema(
        (
            AttributeDef("gender", ("male", "female")),
            AttributeDef("age", ("young", "middle", "old")),
            AttributeDef("accent", tuple(ACCENTS)),
            AttributeDef("profession", tuple(PROFESSIONS)),
        )
    )


def speaker_dataset(schema, profiles: dict[str, tuple], label="test") -> ProfileDataset:
    records = tuple(ProfileRecord(s, "speaker", tuple(p)) for s, p in profiles.items())
    return ProfileDataset(schema, records, DatasetMeta(label, "speaker"))


def spectrum_profiles(schema, spectrum, seed=0) -> dict[str, tuple]:
    """Speakers grouped into classes of the given sizes, each class a distinct profile."""
    rng = random.Random(seed)
    all_profiles = list(itertools.product(*(range(n) for n in schema.level_counts)))
    chosen = rng.sample(all_profiles, len(spectrum))
    profiles = {}
    i = 0
    for size, prof in zip(spectrum, chosen):
        for _ in range(size):
            profiles[f"spk{i:03d}"] = prof
            i += 1
    return profiles


def random_profiles(rng: random.Random, level_counts, n) -> dict[str, tuple]:
    return {
        f"s{i:03d}": tuple(rng.randrange(c) for c in level_counts) for i in range(n)
    }


@pytest.fixture
def schema():
    return paper_schema()


@pytest.fixture
def small_schema():
    return AttributeSchema.from_levels({"gender": ["m", "f"], "age": ["a", "b", "c"]})


@pytest.fixture
def fixture72_dataset(schema):
    return speaker_dataset(schema, spectrum_profiles(schema, FIXTURE_SPECTRUM), "ground_truth")


CSV_HEADER = "speaker_id,utterance_id,gender,age,accent,profession\n"


def write_label_csv(path, schema, rows):
    """rows: iterable of (speaker, utterance, profile tuple)."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("speaker_id,utterance_id," + ",".join(schema.names) + "\n")
        for spk, utt, prof in rows:
            fh.write(f"{spk},{utt},{','.join(schema.decode(prof))}\n")
    return path


@pytest.fixture
def workspace(tmp_path, schema):
    """schema.json, ground-truth labels (72 speakers) and noisy multi-utterance posteriors."""
    import json

    profiles = spectrum_profiles(schema, FIXTURE_SPECTRUM)
    (tmp_path / "schema.json").write_text(json.dumps(schema.to_dict()))
    write_label_csv(tmp_path / "gt.csv", schema, ((s, "gt", p) for s, p in sorted(profiles.items())))
    rng = random.Random(0)
    lines = []
    for spk, prof in sorted(profiles.items()):
        for u in range(4):
            post = []
            for v, n in zip(prof, schema.level_counts):
                w = [rng.random() * 0.3 for _ in range(n)]
                if rng.random() < 0.8:
                    w[v] += 0.6
                total = sum(w)
                post.append([x / total for x in w])
            lines.append(json.dumps({"speaker_id": spk, "utterance_id": f"u{u}", "posteriors": post}))
    (tmp_path / "orig.jsonl").write_text("\n".join(lines) + "\n")
    return tmp_path


# -- acceptance summary: one PASS/FAIL line per criterion ------------------
_ACCEPTANCE: dict[str, str] = {}


def pytest_runtest_logreport(report):
    if "test_acceptance.py::test_ac" not in report.nodeid:
        return
    name = report.nodeid.split("::")[-1]
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        _ACCEPTANCE[name] = report.outcome.upper()


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for name in sorted(_ACCEPTANCE):
        code, _, title = name[len("test_"):].partition("_")
        verdict = "PASS" if _ACCEPTANCE[name] == "PASSED" else "FAIL"
        terminalreporter.write_line(f"{code.upper():5s} {verdict:4s}  {title.replace('_', ' ')}")
