"""Saturating fixed-point word formats used throughout the decoder datapath.

Word widths: 5-bit channel LLRs, 6-bit extrinsic LLRs, 9-bit branch
metrics, 10-bit state metrics.  All formats are two's complement, so an
n-bit word covers [-2^(n-1), 2^(n-1) - 1].  Arithmetic is done in plain
ints / int32 arrays and saturated only when a value is stored back into
one of these formats.
"""

from __future__ import annotations

import numpy as np

CHANNEL_BITS = 5
EXTRINSIC_BITS = 6
BRANCH_BITS = 9
STATE_BITS = 10

CHANNEL_MIN, CHANNEL_MAX = -(1 << (CHANNEL_BITS - 1)), (1 << (CHANNEL_BITS - 1)) - 1
EXTRINSIC_MIN, EXTRINSIC_MAX = -(1 << (EXTRINSIC_BITS - 1)), (1 << (EXTRINSIC_BITS - 1)) - 1
BRANCH_MIN, BRANCH_MAX = -(1 << (BRANCH_BITS - 1)), (1 << (BRANCH_BITS - 1)) - 1
STATE_MIN, STATE_MAX = -(1 << (STATE_BITS - 1)), (1 << (STATE_BITS - 1)) - 1

# Default channel quantizer gain: quantizer steps per unit LLR.
DEFAULT_CHANNEL_SCALE = 4.0

# Extrinsic scaling applied before exchanging soft values between the
# two component decoders.
EXTRINSIC_SCALE_NUM = 3
EXTRINSIC_SCALE_DEN = 4


def saturate(value, lo, hi):
    """Clamp an int or array into [lo, hi]."""
    if isinstance(value, np.ndarray):
        return np.clip(value, lo, hi)
    return lo if value < lo else hi if value > hi else value


def sat_channel(value):
    return saturate(value, CHANNEL_MIN, CHANNEL_MAX)


def sat_extrinsic(value):
    return saturate(value, EXTRINSIC_MIN, EXTRINSIC_MAX)


def sat_branch(value):
    return saturate(value, BRANCH_MIN, BRANCH_MAX)


def sat_state(value):
    return saturate(value, STATE_MIN, STATE_MAX)


def quantize_channel(value, scale=DEFAULT_CHANNEL_SCALE):
    """Round a real LLR to the nearest 5-bit channel word after scaling.

    Saturation is silent: the 5-bit range is the design's dynamic range
    and clipping the tails of the LLR distribution is intended.
    """
    q = np.rint(np.asarray(value, dtype=np.float64) * scale)
    q = np.clip(q, CHANNEL_MIN, CHANNEL_MAX)
    if np.isscalar(value) or np.ndim(value) == 0:
        return int(q)
    return q.astype(np.int32)


def scale_extrinsic(value):
    """Apply the 3/4 exchange scaling with round-half-away-from-zero.

    Works on ints and int arrays; result is NOT yet saturated.
    """
    if isinstance(value, np.ndarray):
        mag = (EXTRINSIC_SCALE_NUM * np.abs(value) + EXTRINSIC_SCALE_DEN // 2) // EXTRINSIC_SCALE_DEN
        return np.sign(value) * mag
    mag = (EXTRINSIC_SCALE_NUM * abs(value) + EXTRINSIC_SCALE_DEN // 2) // EXTRINSIC_SCALE_DEN
    return mag if value >= 0 else -mag
