import numpy as np
import pytest

from profilerisk.channel import (
    ConfusionChannel,
    apply_channel,
    channel_from_accuracy,
    load_channel,
    save_channel,
)
from profilerisk.dataset import ProfileDataset, ProfileRecord
from profilerisk.errors import AccuracyOutOfRange, DimensionMismatch
from profilerisk.schema import AttributeSchema

S = AttributeSchema.from_levels({"g": ["m", "f"], "a": ["x", "y", "z"]})


def ds_from(rows, schema=S):
    return ProfileDataset(schema, tuple(ProfileRecord(s, u, p) for s, u, p in rows))


def test_from_accuracy_identity():
    ch = channel_from_accuracy(S, {"g": 1.0, "a": 1.0})
    assert np.array_equal(ch.matrices["a"], np.eye(3))


def test_from_accuracy_chance():
    ch = channel_from_accuracy(S, {"g": 0.5, "a": 1 / 3})
    assert np.allclose(ch.matrices["g"], 0.5)


def test_from_accuracy_three_levels():
    m = channel_from_accuracy(S, {"g": 1.0, "a": 0.7}).matrices["a"]
    assert np.allclose(np.diag(m), 0.7)
    assert np.allclose(m[~np.eye(3, dtype=bool)], 0.15)


def test_accuracy_out_of_range():
    with pytest.raises(AccuracyOutOfRange):
        channel_from_accuracy(S, {"g": 0.4, "a": 0.9})
    with pytest.raises(AccuracyOutOfRange):
        channel_from_accuracy(S, {"g": 0.9})


def test_bad_matrices():
    with pytest.raises(DimensionMismatch):
        ConfusionChannel({"g": [[0.5, 0.6], [0.5, 0.5]]})
    with pytest.raises(DimensionMismatch):
        ConfusionChannel({"g": [[1.0, 0.0]]})
    ch = ConfusionChannel({"g": np.eye(2), "a": np.eye(2)})
    with pytest.raises(DimensionMismatch):
        apply_channel(ds_from([("A", "u", (0, 0))]), ch, 0)


def test_identity_is_noop():
    rows = [(f"s{i}", f"u{j}", (i % 2, (i + j) % 3)) for i in range(20) for j in range(3)]
    ds = ds_from(rows)
    ch = channel_from_accuracy(S, {"g": 1.0, "a": 1.0})
    for seed in (0, 1, 12345):
        assert apply_channel(ds, ch, seed) == ds


def test_diagonal_point_eight_agreement():
    n = 100_000
    schema = AttributeSchema.from_levels({"g": ["m", "f"]})
    ds = ds_from([(f"s{i:06d}", "u", (i % 2,)) for i in range(n)], schema)
    out = apply_channel(ds, channel_from_accuracy(schema, {"g": 0.8}), seed=3)
    agree = np.mean(out.label_matrix()[:, 0] == ds.label_matrix()[:, 0])
    assert abs(agree - 0.8) <= 0.01
    # law of large numbers at 3 sigma
    assert abs(agree - 0.8) <= 3 * np.sqrt(0.8 * 0.2 / n)


def test_speaker_consistent_mode():
    rows = [(f"s{i}", f"u{j}", (i % 2, i % 3)) for i in range(50) for j in range(6)]
    ds = ds_from(rows)
    ch = channel_from_accuracy(S, {"g": 0.5, "a": 0.4}, mode="speaker_consistent")
    out = apply_channel(ds, ch, 11)
    for spk, recs in out.by_speaker().items():
        assert len({r.payload for r in recs}) == 1
    assert out != ds


def test_preserves_shape_and_is_deterministic():
    rows = [(f"s{i}", f"u{j}", (i % 2, j % 3)) for i in range(10) for j in range(4)]
    ds = ds_from(rows)
    ch = channel_from_accuracy(S, {"g": 0.6, "a": 0.5})
    a, b = apply_channel(ds, ch, 5), apply_channel(ds, ch, 5)
    assert a == b
    assert [r.key for r in a.records] == [r.key for r in ds.records]
    assert a.schema == ds.schema


def test_channel_file_round_trip(tmp_path):
    ch = channel_from_accuracy(S, {"g": 0.8, "a": 0.5}, mode="speaker_consistent")
    again = load_channel(save_channel(ch, tmp_path / "ch.json"))
    assert again.mode == ch.mode
    assert all(np.array_equal(again.matrices[k], ch.matrices[k]) for k in ch.matrices)
