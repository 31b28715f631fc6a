"""numpy implementation of the hot kernels (fallback for ``_ckernels``).

Vectorized across trials: each trial owns a uint64 SplitMix64 state and the
targets are walked in order, so the draw sequence of every trial matches the
compiled kernel exactly. numpy uint64 array arithmetic wraps mod 2**64.
"""
from __future__ import annotations

import numpy as np

from ._seeding import GAMMA, MASK64, _M1, _M2

_GAMMA = np.uint64(GAMMA)
_M1_ = np.uint64(_M1)
_M2_ = np.uint64(_M2)
_S30, _S27, _S31, _S32 = (np.uint64(s) for s in (30, 27, 31, 32))
_LOW32 = np.uint64(0xFFFFFFFF)


def _mix(z: np.ndarray) -> np.ndarray:
    z = (z ^ (z >> _S30)) * _M1_
    z = (z ^ (z >> _S27)) * _M2_
    return z ^ (z >> _S31)


def trial_states(seed: int, trials: int) -> np.ndarray:
    idx = np.arange(1, trials + 1, dtype=np.uint64)
    return _mix(np.uint64(seed & MASK64) + idx * _GAMMA)


def _below(states: np.ndarray, m: int) -> np.ndarray:
    """Advance ``states`` in place and return one bounded draw per trial."""
    mm = np.uint64(m)
    states += _GAMMA
    x = _mix(states) >> _S32
    prod = x * mm
    low = prod & _LOW32
    thresh = np.uint64(((1 << 32) - m) % m)
    redo = np.flatnonzero(low < thresh)
    while redo.size:
        states[redo] += _GAMMA
        x = _mix(states[redo]) >> _S32
        prod[redo] = x * mm
        low = prod[redo] & _LOW32
        redo = redo[low < thresh]
    return (prod >> _S32).astype(np.int64)


def mc_failures(
    match_sizes: np.ndarray, truth_pos: np.ndarray, trials: int, seed: int
) -> np.ndarray:
    """Failures per trial among targets whose match set holds the true speaker.

    Target j succeeds in a trial when its uniform draw from ``range(match_sizes[j])``
    equals ``truth_pos[j]``.
    """
    match_sizes = np.asarray(match_sizes, dtype=np.int64)
    truth_pos = np.asarray(truth_pos, dtype=np.int64)
    failures = np.zeros(trials, dtype=np.int64)
    if trials <= 0:
        return failures
    states = trial_states(seed, trials)
    for m, pos in zip(match_sizes.tolist(), truth_pos.tolist()):
        draw = _below(states, m)
        failures += draw != pos
    return failures
