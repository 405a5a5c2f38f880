"""Turbo encoder, BPSK/AWGN channel and channel quantizer.

The encoder is the 3GPP parallel concatenation of two 8-state RSC
encoders (octal 13/15) around the internal interleaver; both encoders
are terminated with 3 tail bits each, giving 12 tail symbols for a
rate-1/3 mother code of 3K + 12 transmitted bits.

Sign convention: BPSK maps bit b to symbol 2b - 1, so a positive LLR
means "bit 1".  Channel LLRs are 2r / sigma^2.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import fixedpoint as fp
from .trellis import NEXT_STATE, PARITY, TAIL_INPUT

N_TAIL = 3


@dataclass
class CodeBlock:
    """K information bits."""

    bits: np.ndarray

    def __post_init__(self):
        self.bits = np.asarray(self.bits, dtype=np.int64)
        if self.bits.ndim != 1 or not np.all((self.bits == 0) | (self.bits == 1)):
            raise ValueError("bits must be a 1-D 0/1 vector")

    @property
    def k(self) -> int:
        return int(self.bits.shape[0])


@dataclass
class EncodedBlock:
    """Systematic and parity streams plus the 12 termination symbols.

    Tail layout: (tail_sys1, tail_par1) terminate encoder 1 and
    (tail_sys2, tail_par2) terminate encoder 2, 3 symbols each.
    """

    systematic: np.ndarray
    parity1: np.ndarray
    parity2: np.ndarray
    tail_sys1: np.ndarray
    tail_par1: np.ndarray
    tail_sys2: np.ndarray
    tail_par2: np.ndarray

    @property
    def k(self) -> int:
        return int(self.systematic.shape[0])

    def termination(self) -> np.ndarray:
        return np.concatenate([self.tail_sys1, self.tail_par1, self.tail_sys2, self.tail_par2])


@dataclass
class ChannelLlrBlock:
    """Channel LLRs for one received codeword.

    In fixed-point mode every value is a 5-bit channel word; in float
    mode the raw 2r/sigma^2 values are kept.  Tail LLRs are stored
    separately and bias the trellis boundaries in the SISO.
    """

    ls: np.ndarray
    lp1: np.ndarray
    lp2: np.ndarray
    tail_sys1: np.ndarray
    tail_par1: np.ndarray
    tail_sys2: np.ndarray
    tail_par2: np.ndarray
    noise_variance: float
    quantized: bool = True

    @property
    def k(self) -> int:
        return int(self.ls.shape[0])


def rsc_encode(bits: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Run one constituent encoder; returns (parity, tail_sys, tail_par).

    The encoder starts in state 0 and is driven back to state 0 by the
    3 tail bits.
    """
    state = 0
    parity = np.empty(len(bits), dtype=np.int64)
    for i, u in enumerate(bits):
        parity[i] = PARITY[state, u]
        state = NEXT_STATE[state, u]
    tail_sys = np.empty(N_TAIL, dtype=np.int64)
    tail_par = np.empty(N_TAIL, dtype=np.int64)
    for i in range(N_TAIL):
        u = TAIL_INPUT[state]
        tail_sys[i] = u
        tail_par[i] = PARITY[state, u]
        state = NEXT_STATE[state, u]
    assert state == 0
    return parity, tail_sys, tail_par


def encode(block: CodeBlock, ctx) -> EncodedBlock:
    """Turbo encode: parity1 from natural order, parity2 from the
    ctx-interleaved order.  ``ctx`` is an interleaver context whose
    ``interleave(x)`` maps an interleaved-domain position to the natural
    position it reads."""
    if ctx.k != block.k:
        raise ValueError(f"block length {block.k} does not match interleaver K={ctx.k}")
    bits = block.bits
    parity1, ts1, tp1 = rsc_encode(bits)
    interleaved = bits[ctx.permutation()]
    parity2, ts2, tp2 = rsc_encode(interleaved)
    return EncodedBlock(bits.copy(), parity1, parity2, ts1, tp1, ts2, tp2)


def _bpsk(bits: np.ndarray) -> np.ndarray:
    return 2.0 * bits - 1.0


def _gaussian_pairs(gen: np.random.Generator, n: int) -> np.ndarray:
    """Box-Muller on counter-based uniforms; returns n standard normals."""
    m = (n + 1) // 2
    u1 = gen.random(m)
    u2 = gen.random(m)
    u1 = np.maximum(u1, 1e-300)
    r = np.sqrt(-2.0 * np.log(u1))
    z = np.concatenate([r * np.cos(2 * np.pi * u2), r * np.sin(2 * np.pi * u2)])
    return z[:n]


def frame_generator(seed: int, frame: int) -> np.random.Generator:
    """Independent substream for one frame: Philox keyed by (seed, frame),
    so results do not depend on frame execution order."""
    return np.random.Generator(np.random.Philox(key=np.array([seed, frame], dtype=np.uint64)))


def awgn_modulate(
    enc: EncodedBlock,
    ebn0_db: float,
    rate: float,
    seed: int,
    frame: int = 0,
    quantized: bool = True,
    channel_scale: float = fp.DEFAULT_CHANNEL_SCALE,
) -> ChannelLlrBlock:
    """BPSK over AWGN at the given Eb/N0; returns channel LLRs.

    sigma^2 = 1 / (2 * rate * 10^(ebn0/10)); LLR = 2r / sigma^2.
    Deterministic for a fixed (seed, frame) pair.
    """
    if not np.isfinite(ebn0_db):
        raise ValueError("ebn0_db must be finite")
    ebn0 = 10.0 ** (ebn0_db / 10.0)
    sigma2 = 1.0 / (2.0 * rate * ebn0)
    sigma = np.sqrt(sigma2)

    tx = np.concatenate(
        [
            _bpsk(enc.systematic),
            _bpsk(enc.parity1),
            _bpsk(enc.parity2),
            _bpsk(enc.termination()),
        ]
    )
    gen = frame_generator(seed, frame)
    noise = _gaussian_pairs(gen, tx.shape[0])
    llr = 2.0 * (tx + sigma * noise) / sigma2

    if quantized:
        llr = fp.quantize_channel(llr, channel_scale)

    k = enc.k
    ls, lp1, lp2, tails = llr[:k], llr[k : 2 * k], llr[2 * k : 3 * k], llr[3 * k :]
    return ChannelLlrBlock(
        ls=ls,
        lp1=lp1,
        lp2=lp2,
        tail_sys1=tails[0:3],
        tail_par1=tails[3:6],
        tail_sys2=tails[6:9],
        tail_par2=tails[9:12],
        noise_variance=sigma2,
        quantized=quantized,
    )


def mother_code_rate(k: int) -> float:
    return k / (3.0 * k + 12.0)


quantize_channel = fp.quantize_channel
