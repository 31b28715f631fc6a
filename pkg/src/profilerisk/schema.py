"""Attribute schemas and the two profile payload kinds.

A label profile is a plain tuple of level indices, one per attribute, so
equality, hashing and ordering are tuple semantics: two profiles match only
when every attribute matches.
"""
from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Iterable, Mapping, Sequence

import numpy as np

from .errors import DimensionMismatch, DistributionError, SchemaError

Profile = tuple[int, ...]

NAME_RE = re.compile(r"^[A-Za-z0-9_ -]+$")
RESERVED_NAMES = frozenset({"speaker_id", "utterance_id", "posteriors"})

# Stored posteriors must sum to 1 within this; loaders accept a looser
# tolerance and renormalize.
POSTERIOR_TOL = 1e-9
INPUT_POSTERIOR_TOL = 1e-6


@dataclass(frozen=True)
class AttributeDef:
    name: str
    levels: tuple[str, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "levels", tuple(self.levels))

    @property
    def n_levels(self) -> int:
        return len(self.levels)

    def index(self, level: str) -> int:
        try:
            return self.levels.index(level)
        except ValueError:
            raise KeyError(level) from None


@dataclass(frozen=True)
class AttributeSchema:
    """Ordered attributes, each with an ordered level set.

    Order matters: it fixes the profile tuple layout, the CSV column order
    and argmax tie-breaking.
    """

    attributes: tuple[AttributeDef, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "attributes", tuple(self.attributes))
        validate_schema(self)

    @classmethod
    def from_dict(cls, doc: Mapping[str, Any]) -> "AttributeSchema":
        try:
            attrs = doc["attributes"]
            defs = [AttributeDef(str(a["name"]), tuple(str(v) for v in a["levels"])) for a in attrs]
        except (KeyError, TypeError) as exc:
            raise SchemaError(f"malformed schema document: {exc!r}") from None
        return cls(tuple(defs))

    @classmethod
    def from_levels(cls, spec: Mapping[str, Sequence[str]]) -> "AttributeSchema":
        """Shorthand: ``{"gender": ["m", "f"], ...}`` in insertion order."""
        return cls(tuple(AttributeDef(name, tuple(levels)) for name, levels in spec.items()))

    def to_dict(self) -> dict[str, Any]:
        return {"attributes": [{"name": a.name, "levels": list(a.levels)} for a in self.attributes]}

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(a.name for a in self.attributes)

    @property
    def level_counts(self) -> tuple[int, ...]:
        return tuple(a.n_levels for a in self.attributes)

    def __len__(self) -> int:
        return len(self.attributes)

    def __getitem__(self, name: str) -> AttributeDef:
        for a in self.attributes:
            if a.name == name:
                return a
        raise KeyError(name)

    def check_profile(self, profile: Sequence[int]) -> Profile:
        if len(profile) != len(self.attributes):
            raise DimensionMismatch(
                f"profile has {len(profile)} values, schema has {len(self.attributes)} attributes"
            )
        out = []
        for value, attr in zip(profile, self.attributes):
            v = int(value)
            if not 0 <= v < attr.n_levels:
                raise DimensionMismatch(f"level index {v} out of range for {attr.name!r}")
            out.append(v)
        return tuple(out)

    def encode(self, levels: Sequence[str]) -> Profile:
        return tuple(attr.index(level) for attr, level in zip(self.attributes, levels))

    def decode(self, profile: Profile) -> tuple[str, ...]:
        return tuple(attr.levels[i] for attr, i in zip(self.attributes, profile))

    def extend(self, attr: AttributeDef) -> "AttributeSchema":
        return AttributeSchema(self.attributes + (attr,))


def validate_schema(schema: AttributeSchema) -> None:
    """Raise :class:`SchemaError` naming the first violated rule."""
    if not schema.attributes:
        raise SchemaError("schema has no attributes")
    seen: set[str] = set()
    for attr in schema.attributes:
        if not attr.name:
            raise SchemaError("empty attribute name")
        if not NAME_RE.match(attr.name) or attr.name in RESERVED_NAMES:
            raise SchemaError(f"invalid attribute name {attr.name!r}", attribute=attr.name)
        if attr.name in seen:
            raise SchemaError(f"duplicate attribute name {attr.name!r}", attribute=attr.name)
        seen.add(attr.name)
        if len(attr.levels) == 0:
            raise SchemaError(f"attribute {attr.name!r} has an empty level set", attribute=attr.name)
        if len(attr.levels) < 2:
            raise SchemaError(f"attribute {attr.name!r} has <2 levels", attribute=attr.name)
        if len(set(attr.levels)) != len(attr.levels):
            raise SchemaError(f"attribute {attr.name!r} has duplicate level names", attribute=attr.name)
        for level in attr.levels:
            if not level or not NAME_RE.match(level):
                raise SchemaError(
                    f"invalid level name {level!r} in {attr.name!r}", attribute=attr.name
                )


def load_schema(path: str | Path) -> AttributeSchema:
    with open(path, encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise SchemaError(f"schema file is not valid JSON: {exc}") from None
    return AttributeSchema.from_dict(doc)


@dataclass(frozen=True)
class PosteriorProfile:
    """One probability vector per attribute, each summing to 1."""

    distributions: tuple[tuple[float, ...], ...]

    def __post_init__(self) -> None:
        dists = tuple(tuple(float(x) for x in d) for d in self.distributions)
        object.__setattr__(self, "distributions", dists)
        for d in dists:
            if any(not (0.0 <= x <= 1.0) or math.isnan(x) for x in d):
                raise DistributionError(None, f"entries outside [0, 1]: {d}")
            if abs(math.fsum(d) - 1.0) > POSTERIOR_TOL:
                raise DistributionError(None, f"vector sums to {math.fsum(d)!r}")

    def check(self, schema: AttributeSchema) -> "PosteriorProfile":
        if len(self.distributions) != len(schema):
            raise DimensionMismatch(
                f"{len(self.distributions)} distributions for {len(schema)} attributes"
            )
        for d, attr in zip(self.distributions, schema.attributes):
            if len(d) != attr.n_levels:
                raise DimensionMismatch(
                    f"{attr.name!r} expects {attr.n_levels} probabilities, got {len(d)}"
                )
        return self


def make_posterior(
    vectors: Iterable[Sequence[float]],
    schema: AttributeSchema,
    tol: float = INPUT_POSTERIOR_TOL,
) -> PosteriorProfile:
    """Validate raw vectors against ``schema`` and renormalize them exactly.

    Raises DistributionError for negative entries or a sum off by more than
    ``tol``; DimensionMismatch for shape problems.
    """
    out = []
    vectors = list(vectors)
    if len(vectors) != len(schema):
        raise DimensionMismatch(f"{len(vectors)} distributions for {len(schema)} attributes")
    for v, attr in zip(vectors, schema.attributes):
        arr = np.asarray(v, dtype=float)
        if arr.ndim != 1 or arr.size != attr.n_levels:
            raise DimensionMismatch(
                f"{attr.name!r} expects {attr.n_levels} probabilities, got {arr.size}"
            )
        if not np.all(np.isfinite(arr)) or np.any(arr < 0):
            raise DistributionError(None, f"{attr.name!r}: negative or non-finite entry")
        total = math.fsum(arr.tolist())
        if abs(total - 1.0) > tol:
            raise DistributionError(None, f"{attr.name!r}: vector sums to {total!r}")
        out.append(tuple((arr / total).tolist()))
    return PosteriorProfile(tuple(out))


def argmax_profile(p: PosteriorProfile, schema: AttributeSchema) -> Profile:
    """Most probable level per attribute; ties go to the lowest level index."""
    p.check(schema)
    # np.argmax returns the first maximal index
    return tuple(int(np.argmax(d)) for d in p.distributions)
