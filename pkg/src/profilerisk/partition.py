"""Equivalence classes of identical profiles, anonymity set sizes and
uniqueness summaries.

``k`` for a speaker counts the speaker itself: k = 1 means unique.
Percentages are kept as exact fractions; rounding happens only at display.
"""
from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Literal, Mapping

from .dataset import ProfileDataset, require_speaker_labels
from .errors import SpeakerSetMismatch
from .schema import Profile

DEFAULT_THRESHOLDS: tuple[int, ...] = (3, 5, 10)


@dataclass(frozen=True)
class AnonymityAssignment:
    k: Mapping[str, int]
    classes: tuple[tuple[Profile, tuple[str, ...]], ...]

    @property
    def n_speakers(self) -> int:
        return len(self.k)


def partition_profiles(profiles: Mapping[str, Profile]) -> AnonymityAssignment:
    groups: dict[Profile, list[str]] = defaultdict(list)
    for spk, prof in profiles.items():
        groups[tuple(prof)].append(spk)
    classes = tuple(sorted((p, tuple(sorted(m))) for p, m in groups.items()))
    k = {spk: len(members) for _, members in classes for spk in members}
    return AnonymityAssignment(dict(sorted(k.items())), classes)


def partition_speakers(ds: ProfileDataset) -> AnonymityAssignment:
    """Partition a speaker-level label dataset by exact profile equality."""
    require_speaker_labels(ds)
    return partition_profiles(ds.speaker_profiles())


def _median(values: list[int]) -> Fraction:
    s = sorted(values)
    n = len(s)
    mid = n // 2
    if n % 2:
        return Fraction(s[mid])
    return Fraction(s[mid - 1] + s[mid], 2)


@dataclass(frozen=True)
class UniquenessReport:
    n_speakers: int
    n_unique: int
    n_below: Mapping[int, int]
    median_k: Fraction
    per_speaker_k: Mapping[str, int]

    @property
    def pct_unique(self) -> Fraction:
        return Fraction(100 * self.n_unique, self.n_speakers)

    @property
    def pct_below(self) -> dict[int, Fraction]:
        return {t: Fraction(100 * c, self.n_speakers) for t, c in self.n_below.items()}

    @property
    def thresholds(self) -> tuple[int, ...]:
        return tuple(self.n_below)


def uniqueness_report(
    a: AnonymityAssignment, thresholds: Iterable[int] = DEFAULT_THRESHOLDS
) -> UniquenessReport:
    ts = sorted(set(int(t) for t in thresholds))
    if any(t < 2 for t in ts):
        raise ValueError("thresholds must be >= 2 (k = 1 is always reported)")
    ks = list(a.k.values())
    if not ks:
        raise ValueError("empty assignment")
    return UniquenessReport(
        n_speakers=len(ks),
        n_unique=sum(1 for k in ks if k == 1),
        n_below={t: sum(1 for k in ks if k < t) for t in ts},
        median_k=_median(ks),
        per_speaker_k=dict(a.k),
    )


@dataclass(frozen=True)
class DeltaRow:
    worse: Fraction
    unchanged: Fraction
    better: Fraction


@dataclass(frozen=True)
class KDelta:
    mode: Literal["threshold", "raw"]
    rows: Mapping[int | str, DeltaRow]
    pairs: Mapping[str, tuple[int, int]]


def k_delta(
    gt: AnonymityAssignment,
    inferred: AnonymityAssignment,
    thresholds: Iterable[int] = DEFAULT_THRESHOLDS,
    mode: Literal["threshold", "raw"] = "threshold",
) -> KDelta:
    """Per-speaker change in anonymity between ground truth and inferred profiles.

    ``threshold`` mode: at each t, a speaker is worse if k_gt >= t > k_inf,
    better if k_gt < t <= k_inf. ``raw`` mode compares k values directly and
    yields a single row keyed ``"all"``.
    """
    if set(gt.k) != set(inferred.k):
        only_gt = sorted(set(gt.k) - set(inferred.k))
        only_inf = sorted(set(inferred.k) - set(gt.k))
        raise SpeakerSetMismatch(
            "assignments cover different speakers", only_gt=only_gt, only_inferred=only_inf
        )
    pairs = {s: (gt.k[s], inferred.k[s]) for s in sorted(gt.k)}
    n = len(pairs)

    def row(worse: int, better: int) -> DeltaRow:
        return DeltaRow(
            Fraction(100 * worse, n), Fraction(100 * (n - worse - better), n), Fraction(100 * better, n)
        )

    rows: dict[int | str, DeltaRow] = {}
    if mode == "threshold":
        for t in sorted(set(int(t) for t in thresholds)):
            worse = sum(1 for g, i in pairs.values() if g >= t and i < t)
            better = sum(1 for g, i in pairs.values() if g < t and i >= t)
            rows[t] = row(worse, better)
    elif mode == "raw":
        worse = sum(1 for g, i in pairs.values() if i < g)
        better = sum(1 for g, i in pairs.values() if i > g)
        rows["all"] = row(worse, better)
    else:
        raise ValueError(f"unknown mode {mode!r}")
    return KDelta(mode, rows, pairs)
