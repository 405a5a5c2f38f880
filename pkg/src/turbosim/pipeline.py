"""Full parallel turbo decoding: iteration control, scheduling, memory
traffic accounting and the Monte-Carlo BER harness.

Balanced scheduling writes each half-iteration's extrinsics in permuted
order so the next half reads naturally (no read conflicts ever);
unbalanced scheduling keeps first-half traffic natural and pays for
permuted reads and writes in the second half, serialised n-way accesses
costing n - 1 penalty cycles each.

The BER harness decodes frames in batches with the same fixed-point
arithmetic as the per-frame path (verified bit-exact) to keep waterfall
runs tractable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import codec, fixedpoint as fp, siso
from .dbcf import DbcfConfig, DbcfStats, run_dbcf
from .iag import DEINTERLEAVE, INTERLEAVE, make_context
from .memsys import BLOCK_DIVISION, ConflictStats, MemoryMap, simulate_traffic, traffic_from_trace
from .trellis import NEXT_STATE, PARITY, PRED_INPUT, PRED_STATE, TAIL_INPUT

BALANCED = "balanced"
UNBALANCED = "unbalanced"

# Fixed pipeline fill/flush cost charged once per half-iteration.
PIPELINE_LATENCY = 2

HSPA = "hspa"
LTE = "lte"


@dataclass
class DecoderConfig:
    standard: str
    k: int
    p: int = 8
    m: int | None = None
    schedule: str = BALANCED
    max_half_iterations: int = 11
    policy: str = BLOCK_DIVISION
    dbcf: DbcfConfig | None = None
    fixed_point: bool = True
    nii: bool = True
    emission_order: str | None = None
    channel_scale: float = fp.DEFAULT_CHANNEL_SCALE

    def __post_init__(self):
        if self.standard not in (HSPA, LTE):
            raise ValueError(f"unknown standard {self.standard!r}")
        if self.schedule not in (BALANCED, UNBALANCED):
            raise ValueError(f"unknown schedule {self.schedule!r}")
        if self.p < 1:
            raise ValueError("need at least one SISO decoder")
        if self.emission_order is None:
            self.emission_order = siso.default_emission_order(self.standard)
        if self.m is None:
            self.m = self.p_llr

    @property
    def p_llr(self) -> int:
        return 4 * self.p


@dataclass
class HalfReport:
    half: int
    constituent: int
    write_stats: ConflictStats | None
    read_stats: ConflictStats | None
    dbcf_stats: DbcfStats | None
    cycles: int


@dataclass
class DecodeReport:
    decoded: np.ndarray
    bit_errors: int | None
    halves: list
    total_cycles: int

    @property
    def iterations(self) -> float:
        return len(self.halves) / 2.0


def _constituent_inputs(block: codec.ChannelLlrBlock, perm: np.ndarray):
    """(ls, lp) sequences for both constituents in their own trellis order."""
    ls1, lp1 = block.ls, block.lp1
    ls2, lp2 = block.ls[perm], block.lp2
    return (ls1, lp1), (ls2, lp2)


def decode(block: codec.ChannelLlrBlock, cfg: DecoderConfig, truth: np.ndarray | None = None) -> DecodeReport:
    """Cycle-accounted decode of one codeword (fixed-point path)."""
    if not block.quantized:
        raise ValueError("cycle-accurate decode expects a quantized block; use ber_curve for float runs")
    if cfg.k != block.k:
        raise ValueError(f"config K={cfg.k} does not match block K={block.k}")
    k = block.k
    ctx = make_context(cfg.standard, k)
    perm = ctx.permutation()
    if cfg.p > 1:
        siso.sub_block_length(k, cfg.p)  # validates the partition

    (ls1, lp1), (ls2, lp2) = _constituent_inputs(block, perm)
    inv = np.zeros(k, dtype=np.int64)
    inv[perm] = np.arange(k, dtype=np.int64)

    beta_term1 = siso.termination_beta(block.tail_sys1, block.tail_par1)
    beta_term2 = siso.termination_beta(block.tail_sys2, block.tail_par2)
    stakes1 = siso.initial_stakes(cfg.p, beta_term1)
    stakes2 = siso.initial_stakes(cfg.p, beta_term2)

    mmap = MemoryMap(k, cfg.m, cfg.policy)
    la1 = np.zeros(k, dtype=np.int64)
    la2 = np.zeros(k, dtype=np.int64)
    halves = []
    app1 = None

    for half in range(1, cfg.max_half_iterations + 1):
        first = half % 2 == 1  # odd halves run constituent 1
        if first:
            res = siso.run_half_iteration(
                ls1, lp1, la1, stakes1,
                schedule=siso.RADIX2, emission_order=cfg.emission_order,
                nii=cfg.nii, beta_term=beta_term1,
            )
            stakes1 = res.stakes
            app1 = res.app_llrs
            la2 = res.extrinsics[perm]
            write_dir = DEINTERLEAVE
        else:
            res = siso.run_half_iteration(
                ls2, lp2, la2, stakes2,
                schedule=siso.RADIX2, emission_order=cfg.emission_order,
                nii=cfg.nii, beta_term=beta_term2,
            )
            stakes2 = res.stakes
            la1 = res.extrinsics[inv]
            write_dir = INTERLEAVE

        halves.append(_account_half(half, first, res.emission, ctx, mmap, cfg, write_dir))

    decoded = (app1 > 0).astype(np.int64)
    errors = int(np.sum(decoded != truth)) if truth is not None else None
    total = sum(h.cycles for h in halves)
    return DecodeReport(decoded=decoded, bit_errors=errors, halves=halves, total_cycles=total)


def _account_half(half, first, trace, ctx, mmap, cfg, write_dir) -> HalfReport:
    """Conflict statistics and cycle cost of one half-iteration."""
    c0 = len(trace)
    if cfg.schedule == BALANCED:
        read_stats = simulate_traffic(traffic_from_trace(trace, ctx, None), mmap)
        write_stats = simulate_traffic(traffic_from_trace(trace, ctx, write_dir), mmap)
        dbcf_stats = None
        delta = 0
        if write_stats.n_conflicts:
            dcfg = cfg.dbcf or DbcfConfig(
                p_llr=cfg.p_llr, m=cfg.m, s=3, d_fifo=8, d_buf=16, prn_seed=1
            )
            dbcf_stats = run_dbcf(trace, lambda pos: ctx.address(pos, write_dir), mmap, dcfg)
            delta = dbcf_stats.delta_c
        cycles = c0 + delta + PIPELINE_LATENCY
        return HalfReport(half, 1 if first else 2, write_stats, read_stats, dbcf_stats, cycles)

    # Unbalanced: first half fully natural, second half permuted reads and
    # writes, both serialised.
    if first:
        read_stats = simulate_traffic(traffic_from_trace(trace, ctx, None), mmap)
        write_stats = simulate_traffic(traffic_from_trace(trace, ctx, None), mmap, check_unique=False)
        cycles = c0 + PIPELINE_LATENCY
    else:
        read_stats = simulate_traffic(traffic_from_trace(trace, ctx, INTERLEAVE), mmap)
        write_stats = simulate_traffic(traffic_from_trace(trace, ctx, INTERLEAVE), mmap, check_unique=False)
        cycles = c0 + read_stats.penalty_cycles + write_stats.penalty_cycles + PIPELINE_LATENCY
    return HalfReport(half, 1 if first else 2, write_stats, read_stats, None, cycles)


def compare_schedules(block: codec.ChannelLlrBlock, cfg: DecoderConfig, truth=None):
    """Run both schedules on identical inputs and compare costs.

    Returns (balanced report, unbalanced report, summary dict).
    """
    import dataclasses

    bal = decode(block, dataclasses.replace(cfg, schedule=BALANCED), truth)
    unb = decode(block, dataclasses.replace(cfg, schedule=UNBALANCED), truth)
    assert np.array_equal(bal.decoded, unb.decoded), "scheduling must not change the math"

    bal_first = [h.cycles for h in bal.halves if h.constituent == 1]
    bal_second = [h.cycles for h in bal.halves if h.constituent == 2]
    unb_first = [h.cycles for h in unb.halves if h.constituent == 1]
    unb_second = [h.cycles for h in unb.halves if h.constituent == 2]
    summary = {
        "balanced_total": bal.total_cycles,
        "unbalanced_total": unb.total_cycles,
        "balanced_imbalance": abs(np.mean(bal_first) - np.mean(bal_second)),
        "unbalanced_imbalance": abs(np.mean(unb_first) - np.mean(unb_second)),
        "balanced_read_conflicts": sum(h.read_stats.n_conflicts for h in bal.halves),
        "unbalanced_second_half_read_penalty": sum(
            h.read_stats.penalty_cycles for h in unb.halves if h.constituent == 2
        ),
    }
    return bal, unb, summary


def schedule_csv_rows(balanced: DecodeReport, unbalanced: DecodeReport):
    """Rows of (half_index, schedule, cycles, read_conflicts, write_conflicts)."""
    rows = []
    for name, rep in ((BALANCED, balanced), (UNBALANCED, unbalanced)):
        for h in rep.halves:
            rows.append(
                (h.half, name, h.cycles, h.read_stats.n_conflicts, h.write_stats.n_conflicts)
            )
    return rows


# -- batched decoder (BER fast path) -----------------------------------


def _batch_rsc(bits: np.ndarray):
    """Vectorised constituent encoder over a (F, K) bit matrix."""
    f, k = bits.shape
    state = np.zeros(f, dtype=np.int64)
    parity = np.empty((f, k), dtype=np.int64)
    for i in range(k):
        u = bits[:, i]
        parity[:, i] = PARITY[state, u]
        state = NEXT_STATE[state, u]
    tail_sys = np.empty((f, 3), dtype=np.int64)
    tail_par = np.empty((f, 3), dtype=np.int64)
    for i in range(3):
        u = TAIL_INPUT[state]
        tail_sys[:, i] = u
        tail_par[:, i] = PARITY[state, u]
        state = NEXT_STATE[state, u]
    assert not state.any()
    return parity, tail_sys, tail_par


def _batch_channel(tx: np.ndarray, sigma: float, sigma2: float, seed: int, frame0: int):
    """Per-frame Philox noise for a (F, N) symbol matrix."""
    f, n = tx.shape
    noise = np.empty((f, n))
    for i in range(f):
        gen = codec.frame_generator(seed, frame0 + i)
        noise[i] = codec._gaussian_pairs(gen, n)
    return 2.0 * (tx + sigma * noise) / sigma2


def _normalize_batch(v, fixed):
    v = v - v.min(axis=-1, keepdims=True)
    if fixed:
        v = np.minimum(v, fp.STATE_MAX)
    return v


def _batch_half(ls, lp, la, alpha_left, beta_right, sub_lens, fixed):
    """One SISO pass over (F, K) inputs split into P sub-blocks.

    alpha_left/beta_right: (F, P, 8) boundary metrics.  Returns
    (extrinsics, app_llrs, alpha_right, beta_left), all frame-major.
    """
    f, k = ls.shape
    p = len(sub_lens)
    ell = sub_lens[0] if p == 1 else max(sub_lens)
    pad = p * ell - k
    dtype = ls.dtype

    def split(x):
        if pad:
            x = np.concatenate([x, np.zeros((f, pad), dtype=dtype)], axis=1)
        return x.reshape(f, p, ell)

    ls3, lp3, la3 = split(ls), split(lp), split(la)
    active = np.array([[i < sub_lens[b] for b in range(p)] for i in range(ell)])

    def gammas_at(i):
        base = ls3[:, :, i] + la3[:, :, i]
        g = np.zeros((f, p, 8, 2), dtype=dtype)
        g[:, :, :, 1] = base[:, :, np.newaxis]
        g += PARITY[np.newaxis, np.newaxis, :, :] * lp3[:, :, i, np.newaxis, np.newaxis]
        if fixed:
            g = np.clip(g, fp.BRANCH_MIN, fp.BRANCH_MAX)
        return g

    alphas = np.empty((ell + 1, f, p, 8), dtype=dtype)
    alphas[0] = alpha_left
    a = alpha_left
    for i in range(ell):
        g = gammas_at(i)
        cand = a[:, :, PRED_STATE] + g[:, :, PRED_STATE, PRED_INPUT]
        new = _normalize_batch(cand.max(axis=-1), fixed)
        mask = active[i][np.newaxis, :, np.newaxis]
        a = np.where(mask, new, a)
        alphas[i + 1] = a
    alpha_right = np.stack([alphas[sub_lens[b]][:, b, :] for b in range(p)], axis=1)

    ext = np.zeros((f, p, ell), dtype=dtype)
    app = np.zeros((f, p, ell), dtype=dtype)
    beta = beta_right
    for i in reversed(range(ell)):
        g = gammas_at(i)
        path = alphas[i][:, :, :, np.newaxis] + g + beta[:, :, NEXT_STATE]
        llr = path[:, :, :, 1].max(axis=-1) - path[:, :, :, 0].max(axis=-1)
        raw = llr - ls3[:, :, i] - la3[:, :, i]
        if fixed:
            e = np.clip(fp.scale_extrinsic(raw), fp.EXTRINSIC_MIN, fp.EXTRINSIC_MAX)
        else:
            e = 0.75 * raw
        mask = active[i][np.newaxis, :]
        ext[:, :, i] = np.where(mask, e, 0)
        app[:, :, i] = np.where(mask, llr, 0)
        cand = beta[:, :, NEXT_STATE] + g
        new = _normalize_batch(cand.max(axis=-1), fixed)
        beta = np.where(mask[:, :, np.newaxis], new, beta)
    beta_left = beta

    ext = ext.reshape(f, p * ell)[:, :k]
    app = app.reshape(f, p * ell)[:, :k]
    return ext, app, alpha_right, beta_left


def _batch_termination_beta(tail_sys, tail_par, fixed):
    f = tail_sys.shape[0]
    dtype = tail_sys.dtype
    beta = np.zeros((f, 8), dtype=dtype)
    beta[:, 0] = siso.BOUNDARY_BIAS
    for i in reversed(range(tail_sys.shape[1])):
        g = np.zeros((f, 8, 2), dtype=dtype)
        g[:, :, 1] = tail_sys[:, i, np.newaxis]
        g = g + PARITY[np.newaxis] * tail_par[:, i, np.newaxis, np.newaxis]
        if fixed:
            g = np.clip(g, fp.BRANCH_MIN, fp.BRANCH_MAX)
        cand = beta[:, NEXT_STATE] + g
        beta = _normalize_batch(cand.max(axis=-1), fixed)
    return beta


def batch_decode(ls, lp1, lp2, tails, perm, inv, p, n_halves, fixed, nii=True):
    """Decode a batch of frames; returns hard decisions (F, K).

    ``tails`` is (tail_sys1, tail_par1, tail_sys2, tail_par2), each (F, 3).
    """
    f, k = ls.shape
    dtype = ls.dtype
    edges = siso._sub_block_edges(k, p)
    sub_lens = [edges[b + 1] - edges[b] for b in range(p)]

    ts1, tp1, ts2, tp2 = tails
    beta_term1 = _batch_termination_beta(ts1, tp1, fixed)
    beta_term2 = _batch_termination_beta(ts2, tp2, fixed)

    def fresh_stakes(beta_term):
        al = np.zeros((f, p, 8), dtype=dtype)
        al[:, 0, 0] = siso.BOUNDARY_BIAS
        br = np.zeros((f, p, 8), dtype=dtype)
        br[:, p - 1] = beta_term
        return al, br

    a1, b1 = fresh_stakes(beta_term1)
    a2, b2 = fresh_stakes(beta_term2)
    ls2 = ls[:, perm]
    la1 = np.zeros((f, k), dtype=dtype)
    app1 = None

    for half in range(1, n_halves + 1):
        if half % 2 == 1:
            ext, app1, ar, bl = _batch_half(ls, lp1, la1, a1, b1, sub_lens, fixed)
            if nii:
                a1 = np.concatenate([a1[:, :1], ar[:, :-1]], axis=1)
                b1 = np.concatenate([bl[:, 1:], b1[:, -1:]], axis=1)
                a1[:, 0] = 0
                a1[:, 0, 0] = siso.BOUNDARY_BIAS
                b1[:, -1] = beta_term1
            la2 = ext[:, perm]
        else:
            ext, _, ar, bl = _batch_half(ls2, lp2, la2, a2, b2, sub_lens, fixed)
            if nii:
                a2 = np.concatenate([a2[:, :1], ar[:, :-1]], axis=1)
                b2 = np.concatenate([bl[:, 1:], b2[:, -1:]], axis=1)
                a2[:, 0] = 0
                a2[:, 0, 0] = siso.BOUNDARY_BIAS
                b2[:, -1] = beta_term2
            la1 = ext[:, inv]

    return (app1 > 0).astype(np.int64)


def ber_curve(cfg: DecoderConfig, ebn0_list, frames: int, seed: int, batch: int = 256):
    """Monte-Carlo BER/FER over an Eb/N0 grid, deterministic per seed.

    Returns rows of (ebn0_db, frames, bit_errors, ber, fer).
    """
    k = cfg.k
    ctx = make_context(cfg.standard, k)
    perm = ctx.permutation()
    inv = np.zeros(k, dtype=np.int64)
    inv[perm] = np.arange(k, dtype=np.int64)
    rate = codec.mother_code_rate(k)
    fixed = cfg.fixed_point
    dtype = np.int64 if fixed else np.float64

    rows = []
    for ebn0 in ebn0_list:
        ebn0_lin = 10.0 ** (ebn0 / 10.0)
        sigma2 = 1.0 / (2.0 * rate * ebn0_lin)
        sigma = math.sqrt(sigma2)
        bit_errors = 0
        frame_errors = 0
        done = 0
        while done < frames:
            n = min(batch, frames - done)
            bits = np.empty((n, k), dtype=np.int64)
            for i in range(n):
                gen = codec.frame_generator(seed, done + i)
                bits[i] = (gen.random(k) < 0.5).astype(np.int64)
            par1, ts1, tp1 = _batch_rsc(bits)
            par2, ts2, tp2 = _batch_rsc(bits[:, perm])
            tx = np.concatenate(
                [2.0 * s - 1.0 for s in (bits, par1, par2, ts1, tp1, ts2, tp2)], axis=1
            )
            llr = _batch_channel(tx, sigma, sigma2, seed + 0x5EED, done)
            if fixed:
                llr = fp.quantize_channel(llr, cfg.channel_scale)
            llr = llr.astype(dtype)
            ls, lp1v, lp2v = llr[:, :k], llr[:, k : 2 * k], llr[:, 2 * k : 3 * k]
            t0 = 3 * k
            tails = (
                llr[:, t0 : t0 + 3],
                llr[:, t0 + 3 : t0 + 6],
                llr[:, t0 + 6 : t0 + 9],
                llr[:, t0 + 9 : t0 + 12],
            )
            decoded = batch_decode(
                ls, lp1v, lp2v, tails, perm, inv, cfg.p,
                cfg.max_half_iterations, fixed, nii=cfg.nii,
            )
            errs = (decoded != bits).sum(axis=1)
            bit_errors += int(errs.sum())
            frame_errors += int((errs > 0).sum())
            done += n
        rows.append((ebn0, frames, bit_errors, bit_errors / (frames * k), frame_errors / frames))
    return rows


def ebn0_at_ber(rows, target: float):
    """Log-linear interpolation of the Eb/N0 reaching a target BER."""
    pts = [(e, b) for e, _, _, b, _ in rows]
    pts.sort()
    for (e0, b0), (e1, b1) in zip(pts, pts[1:]):
        if b0 >= target >= b1 and b1 > 0:
            if b0 == b1:
                return e0
            frac = (math.log10(b0) - math.log10(target)) / (math.log10(b0) - math.log10(b1))
            return e0 + frac * (e1 - e0)
    raise ValueError(f"target BER {target} not bracketed by the measured curve")
