"""Speaker-level profiles from utterance data, and single-utterance resampling."""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ._seeding import derive_seeds
from .dataset import ProfileDataset, ProfileRecord, write_dataset
from .errors import EmptySpeaker, GranularityError
from .schema import PosteriorProfile, argmax_profile

SPEAKER_UTTERANCE_ID = "speaker"


def _speaker_groups(ds: ProfileDataset) -> dict[str, tuple[ProfileRecord, ...]]:
    groups = ds.by_speaker()
    empty = [s for s, rs in groups.items() if not rs]
    if empty:
        raise EmptySpeaker(f"speakers without utterances: {empty}")
    return groups


def aggregate_posterior_mean(ds: ProfileDataset) -> ProfileDataset:
    """Average each speaker's posteriors per attribute, then take the argmax."""
    if ds.payload_kind != "posteriors":
        raise GranularityError("aggregate_posterior_mean needs posterior payloads")
    records = []
    for spk, recs in _speaker_groups(ds).items():
        mean = []
        for a in range(len(ds.schema)):
            stack = np.array([r.payload.distributions[a] for r in recs])  # type: ignore[union-attr]
            # sort rows so the float sum does not depend on utterance order
            stack = stack[np.lexsort(stack.T[::-1])]
            m = stack.sum(axis=0) / len(recs)
            mean.append(tuple((m / m.sum()).tolist()))
        profile = argmax_profile(PosteriorProfile(tuple(mean)), ds.schema)
        records.append(ProfileRecord(spk, SPEAKER_UTTERANCE_ID, profile))
    return ds.derive(records, granularity="speaker")


def aggregate_majority(ds: ProfileDataset) -> ProfileDataset:
    """Most frequent level per attribute; ties go to the lowest level index."""
    if ds.payload_kind != "labels":
        raise GranularityError("aggregate_majority needs label payloads")
    records = []
    for spk, recs in _speaker_groups(ds).items():
        mat = np.array([r.payload for r in recs], dtype=np.int64)
        profile = tuple(
            int(np.argmax(np.bincount(mat[:, a], minlength=attr.n_levels)))
            for a, attr in enumerate(ds.schema.attributes)
        )
        records.append(ProfileRecord(spk, SPEAKER_UTTERANCE_ID, profile))
    return ds.derive(records, granularity="speaker")


def aggregate(ds: ProfileDataset) -> ProfileDataset:
    """Speaker-level view: identity for speaker data, else mean-posterior or majority."""
    if ds.granularity == "speaker":
        return ds
    if ds.payload_kind == "posteriors":
        return aggregate_posterior_mean(ds)
    return aggregate_majority(ds)


def to_labels(ds: ProfileDataset) -> ProfileDataset:
    """Per-record argmax of posterior payloads; label datasets pass through."""
    if ds.payload_kind == "labels":
        return ds
    return ds.derive(
        ProfileRecord(r.speaker_id, r.utterance_id, argmax_profile(r.payload, ds.schema))  # type: ignore[arg-type]
        for r in ds.records
    )


@dataclass(frozen=True)
class ResamplePlan:
    runs: int = 10
    master_seed: int = 0
    per_run_seeds: tuple[int, ...] = field(init=False)

    def __post_init__(self) -> None:
        if self.runs < 1:
            raise ValueError("runs must be >= 1")
        object.__setattr__(self, "per_run_seeds", tuple(derive_seeds(self.master_seed, self.runs)))


def resample_single(ds: ProfileDataset, plan: ResamplePlan) -> list[ProfileDataset]:
    """One uniformly drawn utterance per speaker, per run.

    Runs draw independently, so an utterance can appear in several runs.
    Reusing a plan across conditions keyed by the same utterance ids gives
    paired samples.
    """
    groups = _speaker_groups(ds)
    runs = []
    for i, run_seed in enumerate(plan.per_run_seeds):
        rng = np.random.default_rng(run_seed)
        picks = [recs[int(rng.integers(len(recs)))] for recs in groups.values()]
        runs.append(ds.derive(picks, source_label=f"{ds.source_label}_run{i}"))
    return runs


def write_runs(runs: list[ProfileDataset], out_dir: str | Path, source: str) -> list[Path]:
    """Materialize runs as ``<source>_run<i>.csv`` (``.jsonl`` for posteriors)."""
    paths = []
    for i, run in enumerate(runs):
        ext = "csv" if run.payload_kind == "labels" else "jsonl"
        paths.append(write_dataset(run, Path(out_dir) / f"{source}_run{i}.{ext}"))
    return paths
