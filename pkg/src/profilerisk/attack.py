"""Exact-match re-identification attack.

For each target the attacker collects the reference speakers whose profile
equals the target's and picks one uniformly at random. A target with no
match, or whose true reference is not among the matches, is never
identified. The closed form gives the expected error exactly; the Monte
Carlo path replays the random draws.
"""
from __future__ import annotations

import math
import statistics
from collections import defaultdict
from dataclasses import dataclass
from fractions import Fraction
from typing import Literal, Mapping, Sequence

import numpy as np

from . import _backend
from .dataset import ProfileDataset, require_speaker_labels
from .errors import EmptyDataset, SchemaMismatch, ValidationError
from .schema import Profile


@dataclass(frozen=True)
class AttackInstance:
    targets: ProfileDataset
    references: ProfileDataset
    truth: Mapping[str, str]

    def __post_init__(self) -> None:
        require_speaker_labels(self.targets)
        require_speaker_labels(self.references)
        if self.targets.schema != self.references.schema:
            raise SchemaMismatch("targets and references use different schemas")
        target_ids = set(self.targets.speakers())
        ref_ids = set(self.references.speakers())
        missing = sorted(target_ids - set(self.truth))
        if missing:
            raise ValidationError(missing[0], "target has no entry in the truth mapping")
        values = [self.truth[t] for t in target_ids]
        if len(set(values)) != len(values):
            raise ValidationError(None, "truth mapping is not injective over targets")
        unknown = sorted(v for v in values if v not in ref_ids)
        if unknown:
            raise ValidationError(unknown[0], "truth maps to an unknown reference speaker")
        object.__setattr__(self, "truth", {t: self.truth[t] for t in sorted(target_ids)})

    @classmethod
    def build(
        cls,
        targets: ProfileDataset,
        references: ProfileDataset,
        truth: Mapping[str, str] | None = None,
    ) -> "AttackInstance":
        """``truth`` defaults to the identity mapping over target ids."""
        if truth is None:
            truth = {s: s for s in targets.speakers()}
        return cls(targets, references, truth)

    def match_sets(self) -> dict[str, tuple[str, ...]]:
        """target id -> sorted reference ids sharing its exact profile."""
        index: dict[Profile, list[str]] = defaultdict(list)
        for spk, prof in self.references.speaker_profiles().items():
            index[prof].append(spk)
        return {
            t: tuple(sorted(index.get(prof, ())))
            for t, prof in sorted(self.targets.speaker_profiles().items())
        }


@dataclass(frozen=True)
class TargetOutcome:
    match_set_size: int
    success_prob: Fraction


@dataclass(frozen=True)
class AttackReport:
    error_rate: float
    per_target: Mapping[str, TargetOutcome]
    mode: Literal["closed_form", "monte_carlo"]
    exact_error: Fraction | None = None
    trials: int | None = None
    seed: int | None = None
    std_error: float | None = None


def _outcomes(inst: AttackInstance) -> dict[str, TargetOutcome]:
    out = {}
    for t, matches in inst.match_sets().items():
        hit = inst.truth[t] in matches
        out[t] = TargetOutcome(len(matches), Fraction(1, len(matches)) if hit else Fraction(0))
    if not out:
        raise EmptyDataset("attack instance has no targets")
    return out


def attack_closed_form(inst: AttackInstance) -> AttackReport:
    per_target = _outcomes(inst)
    err = 1 - sum(o.success_prob for o in per_target.values()) / len(per_target)
    return AttackReport(float(err), per_target, "closed_form", exact_error=err)


def attack_monte_carlo(
    inst: AttackInstance, trials: int, seed: int, backend: str | None = None
) -> AttackReport:
    """Replay the random tie-break ``trials`` times.

    Only targets whose match set holds the true reference and has size >= 2
    consume random draws, in sorted target order; the others succeed or fail
    deterministically. Trial ``t`` draws from its own stream derived from
    ``(seed, t)`` so results do not depend on scheduling.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    per_target = _outcomes(inst)
    matches = inst.match_sets()
    n = len(per_target)
    sizes, positions = [], []
    fixed_fail = 0
    for t, o in per_target.items():
        if o.success_prob == 0:
            fixed_fail += 1
        elif o.match_set_size >= 2:
            sizes.append(o.match_set_size)
            positions.append(matches[t].index(inst.truth[t]))
    kern = _backend.get_kernels(backend)
    fails = kern.mc_failures(
        np.asarray(sizes, dtype=np.int64), np.asarray(positions, dtype=np.int64), trials, seed
    )
    per_trial = (fails + fixed_fail) / n
    std = float(per_trial.std(ddof=1)) if trials > 1 else 0.0
    return AttackReport(
        error_rate=float(per_trial.mean()),
        per_target=per_target,
        mode="monte_carlo",
        trials=trials,
        seed=seed,
        std_error=std / math.sqrt(trials),
    )


@dataclass(frozen=True)
class RunSummary:
    mean: float
    std: float
    n_runs: int
    errors: tuple[float, ...]

    @property
    def single_run(self) -> bool:
        """std is reported as 0 when there is only one run."""
        return self.n_runs == 1

    def display(self, digits: int = 2) -> str:
        return f"{self.mean:.{digits}f} ± {self.std:.{digits}f}"


def summarize_runs(errors: Sequence[float]) -> RunSummary:
    errors = tuple(float(e) for e in errors)
    if not errors:
        raise ValueError("no runs to summarize")
    mean = statistics.fmean(errors)
    std = statistics.stdev(errors) if len(errors) > 1 else 0.0
    return RunSummary(mean, std, len(errors), errors)


def attack_over_runs(instances: Sequence[AttackInstance | AttackReport]) -> RunSummary:
    """Mean and sample std (n - 1) of closed-form error rates across runs."""
    errors = [
        x.error_rate if isinstance(x, AttackReport) else attack_closed_form(x).error_rate
        for x in instances
    ]
    return summarize_runs(errors)
