"""Synthetic classifier error via per-attribute confusion matrices.

``C[true][pred]`` is the probability of predicting ``pred`` for a record
whose true level is ``true``. In ``speaker_consistent`` mode a speaker gets
one noisy draw per attribute, reused for all of their utterances.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Literal, Mapping

import numpy as np

from ._io import atomic_write_text
from .dataset import ProfileDataset, ProfileRecord
from .errors import AccuracyOutOfRange, DimensionMismatch, GranularityError, ProfileRiskError
from .schema import AttributeSchema

Mode = Literal["independent", "speaker_consistent"]
ROW_TOL = 1e-9


@dataclass(frozen=True)
class ConfusionChannel:
    matrices: Mapping[str, np.ndarray]
    mode: Mode = "independent"

    def __post_init__(self) -> None:
        if self.mode not in ("independent", "speaker_consistent"):
            raise ProfileRiskError(f"unknown channel mode {self.mode!r}")
        frozen = {}
        for name, mat in self.matrices.items():
            arr = np.array(mat, dtype=float)
            if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
                raise DimensionMismatch(f"matrix for {name!r} is not square: {arr.shape}")
            if np.any(arr < 0) or not np.all(np.isfinite(arr)):
                raise DimensionMismatch(f"matrix for {name!r} has negative or non-finite entries")
            if np.any(np.abs(arr.sum(axis=1) - 1.0) > ROW_TOL):
                raise DimensionMismatch(f"rows of {name!r} do not sum to 1")
            arr.setflags(write=False)
            frozen[name] = arr
        object.__setattr__(self, "matrices", frozen)

    def check(self, schema: AttributeSchema) -> None:
        if set(self.matrices) != set(schema.names):
            raise DimensionMismatch(
                f"channel attributes {sorted(self.matrices)} != schema {list(schema.names)}"
            )
        for attr in schema.attributes:
            side = self.matrices[attr.name].shape[0]
            if side != attr.n_levels:
                raise DimensionMismatch(
                    f"{attr.name!r}: {side}x{side} matrix for {attr.n_levels} levels"
                )

    def to_dict(self) -> dict:
        return {"mode": self.mode, "matrices": {k: v.tolist() for k, v in self.matrices.items()}}


def load_channel(path: str | Path) -> ConfusionChannel:
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    try:
        return ConfusionChannel(doc["matrices"], doc.get("mode", "independent"))
    except (KeyError, TypeError, ValueError) as exc:
        raise ProfileRiskError(f"malformed channel file {path}: {exc!r}") from None


def save_channel(ch: ConfusionChannel, path: str | Path) -> Path:
    return atomic_write_text(path, json.dumps(ch.to_dict(), indent=2, sort_keys=True) + "\n")


def channel_from_accuracy(
    schema: AttributeSchema, accuracy: Mapping[str, float], mode: Mode = "independent"
) -> ConfusionChannel:
    """Diagonal = accuracy, remaining mass spread evenly over the wrong levels."""
    mats = {}
    for attr in schema.attributes:
        if attr.name not in accuracy:
            raise AccuracyOutOfRange(f"no accuracy given for {attr.name!r}")
        acc = float(accuracy[attr.name])
        n = attr.n_levels
        if not (1.0 / n - 1e-12 <= acc <= 1.0):
            raise AccuracyOutOfRange(f"{attr.name!r}: accuracy {acc} outside [1/{n}, 1]")
        off = (1.0 - acc) / (n - 1)
        mat = np.full((n, n), off)
        np.fill_diagonal(mat, acc)
        mats[attr.name] = mat
    return ConfusionChannel(mats, mode)


def _sample_rows(cdf: np.ndarray, true_levels: np.ndarray, u: np.ndarray) -> np.ndarray:
    """Inverse-CDF draw: first level whose cumulative probability exceeds u."""
    rows = cdf[true_levels]
    return (rows <= u[:, None]).sum(axis=1).clip(max=cdf.shape[1] - 1)


def apply_channel(ds: ProfileDataset, ch: ConfusionChannel, seed: int) -> ProfileDataset:
    if ds.payload_kind != "labels":
        raise GranularityError("apply_channel needs label payloads")
    ch.check(ds.schema)
    rng = np.random.default_rng(seed)
    labels = ds.label_matrix()
    noisy = labels.copy()
    speakers = np.array([r.speaker_id for r in ds.records])
    uniq, spk_idx = np.unique(speakers, return_inverse=True)
    for a, attr in enumerate(ds.schema.attributes):
        cdf = np.cumsum(ch.matrices[attr.name], axis=1)
        # exact 1.0 at the end of each row so u < 1 always lands inside
        cdf[:, -1] = 1.0
        if ch.mode == "independent":
            u = rng.random(len(ds.records))
            noisy[:, a] = _sample_rows(cdf, labels[:, a], u)
        else:
            # one draw per speaker from the row of the speaker's modal true level
            modal = np.array(
                [
                    np.argmax(np.bincount(labels[spk_idx == s, a], minlength=attr.n_levels))
                    for s in range(len(uniq))
                ],
                dtype=np.int64,
            )
            u = rng.random(len(uniq))
            noisy[:, a] = _sample_rows(cdf, modal, u)[spk_idx]
    records = [
        ProfileRecord(r.speaker_id, r.utterance_id, tuple(int(v) for v in row))
        for r, row in zip(ds.records, noisy)
    ]
    return ds.derive(records)
