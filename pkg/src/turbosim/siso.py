"""Fixed-point max-log-MAP soft-input soft-output decoder.

The 8-state trellis is traversed forward and backward with max-selected
state metrics; metrics are renormalised every stored step by
subtracting the minimum element, so a stored vector always has minimum
0 and fits the 10-bit state format.  Branch metrics use the integer
affine form gamma(s, u) = u*(ls + la) + parity(s, u)*lp; any constant
offset to a whole step cancels in the output LLR difference.

A half-iteration runs P sub-blocks.  Sub-block boundary metrics are
carried between iterations of the same constituent decoder (next
iteration initialisation) instead of acquisition runs; the true block
start and the termination tail pin the outermost boundaries.

Two schedules are provided: a plain radix-2 reference and a radix-4
fused recursion (two trellis steps per clock) that must produce
bit-identical extrinsics.  The emission trace records which four
positions per decoder hit the extrinsic memory on each emitting cycle;
the lane-to-position pattern is configurable because it determines the
memory conflict behaviour downstream.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import fixedpoint as fp
from .trellis import N_STATES, NEXT_STATE, PARITY, PRED_INPUT, PRED_STATE

# Bias given to the known state at a true trellis boundary.  Large
# enough to dominate any metric spread a few steps in, small enough
# that intermediate sums never clip the 10-bit stored format (which
# would break radix-4 / radix-2 equivalence).
BOUNDARY_BIAS = 256

RADIX2 = "radix2"
RADIX4_XMAP = "radix4_xmap"

# Per-decoder stream patterns over the four sub-block quarters:
# (quarter, direction) per stream; 'a' sweeps offsets 0..Q-1, 'd'
# sweeps Q-1..0.  "aligned" keeps all streams at a common offset, which
# is what makes the QPP mapping contention-free; "xmap2win" models two
# crossed half-windows per decoder emitting after their cross points.
EMISSION_ORDERS = {
    "aligned": ((0, "a"), (1, "a"), (2, "a"), (3, "a")),
    "xmap2win": ((1, "a"), (3, "a"), (0, "d"), (2, "d")),
}
XMAP_CROSS = "xmap_cross"


def known_state_boundary(state: int = 0) -> np.ndarray:
    vec = np.zeros(N_STATES, dtype=np.int64)
    vec[state] = BOUNDARY_BIAS
    return vec


def uniform_boundary() -> np.ndarray:
    return np.zeros(N_STATES, dtype=np.int64)


def branch_metrics(ls: int, lp: int, la: int) -> np.ndarray:
    """gamma[s, u] for one trellis step, saturated to the 9-bit format."""
    u = np.array([0, 1], dtype=np.int64)
    gam = u[np.newaxis, :] * (int(ls) + int(la)) + PARITY * int(lp)
    return fp.sat_branch(gam)


def _normalize(vec: np.ndarray) -> np.ndarray:
    return fp.sat_state(vec - vec.min())


def forward_step(prev: np.ndarray, gammas: np.ndarray) -> np.ndarray:
    """One forward recursion step, renormalised so min = 0."""
    cand = prev[PRED_STATE] + gammas[PRED_STATE, PRED_INPUT]
    return _normalize(cand.max(axis=1))


def backward_step(nxt: np.ndarray, gammas: np.ndarray) -> np.ndarray:
    """One backward recursion step, renormalised so min = 0."""
    cand = nxt[NEXT_STATE] + gammas
    return _normalize(cand.max(axis=1))


def _forward_raw(prev: np.ndarray, gammas: np.ndarray) -> np.ndarray:
    cand = prev[PRED_STATE] + gammas[PRED_STATE, PRED_INPUT]
    return cand.max(axis=1)


def _backward_raw(nxt: np.ndarray, gammas: np.ndarray) -> np.ndarray:
    cand = nxt[NEXT_STATE] + gammas
    return cand.max(axis=1)


def llr_and_extrinsic(alpha, beta_next, gammas, ls, la):
    """APP LLR at one step plus the scaled, saturated extrinsic.

    alpha is the metric vector entering the step, beta_next the one
    leaving it.  Positive LLR decides bit 1.
    """
    path = alpha[:, np.newaxis] + gammas + beta_next[NEXT_STATE]
    llr = int(path[:, 1].max() - path[:, 0].max())
    ext = fp.sat_extrinsic(fp.scale_extrinsic(llr - int(ls) - int(la)))
    return llr, int(ext)


@dataclass
class NiiStakes:
    """Boundary metrics carried to the same constituent's next pass.

    alpha_left[b] seeds sub-block b's forward recursion, beta_right[b]
    its backward recursion.  alpha_left[0] and beta_right[P-1] are
    always the fixed start / termination boundaries.
    """

    alpha_left: list
    beta_right: list


def initial_stakes(n_subblocks: int, beta_term: np.ndarray) -> NiiStakes:
    alpha = [uniform_boundary() for _ in range(n_subblocks)]
    beta = [uniform_boundary() for _ in range(n_subblocks)]
    alpha[0] = known_state_boundary(0)
    beta[-1] = beta_term.copy()
    return NiiStakes(alpha_left=alpha, beta_right=beta)


def termination_beta(tail_sys: np.ndarray, tail_par: np.ndarray) -> np.ndarray:
    """Backward recursion over the three tail steps from the known end state."""
    beta = known_state_boundary(0)
    for i in reversed(range(len(tail_sys))):
        gam = branch_metrics(int(tail_sys[i]), int(tail_par[i]), 0)
        beta = backward_step(beta, gam)
    return beta


def sub_block_length(k: int, p: int) -> int:
    """Padded sub-block length: a multiple of 4 covering K across P decoders."""
    ell = 4 * math.ceil(k / (4 * p))
    if p > 1 and (p - 1) * ell >= k:
        raise ValueError(f"K={k} too small for P={p} sub-blocks of length {ell}")
    return ell


def _sub_block_edges(k: int, p: int) -> list[int]:
    ell = sub_block_length(k, p)
    return [min(b * ell, k) for b in range(p)] + [k]


@dataclass
class HalfIterationResult:
    extrinsics: np.ndarray   # scaled 6-bit extrinsic per position, length K
    app_llrs: np.ndarray     # unscaled APP LLR per position, length K
    stakes: NiiStakes        # boundaries for the next pass of this constituent
    emission: list           # EmissionTrace rows: (cycle, [(lane, pos), ...])


def run_half_iteration(
    ls: np.ndarray,
    lp: np.ndarray,
    la: np.ndarray,
    stakes: NiiStakes,
    *,
    schedule: str = RADIX2,
    emission_order: str = "xmap2win",
    nii: bool = True,
    beta_term: np.ndarray | None = None,
) -> HalfIterationResult:
    """One SISO pass over the whole block, split into P sub-blocks.

    ``ls``/``lp``/``la`` are this constituent's systematic, parity and
    a-priori sequences in its own trellis order, length K.  ``stakes``
    supplies the sub-block boundary metrics from the previous pass.
    """
    k = len(ls)
    p = len(stakes.alpha_left)
    edges = _sub_block_edges(k, p)

    ext = np.zeros(k, dtype=np.int64)
    app = np.zeros(k, dtype=np.int64)
    alpha_right = [None] * p
    beta_left = [None] * p

    for b in range(p):
        lo, hi = edges[b], edges[b + 1]
        gammas = [branch_metrics(ls[i], lp[i], la[i]) for i in range(lo, hi)]
        a0 = stakes.alpha_left[b]
        b1 = stakes.beta_right[b]
        if schedule == RADIX2:
            a_end, b_start = _subblock_radix2(gammas, a0, b1, ls, la, lo, ext, app)
        elif schedule == RADIX4_XMAP:
            a_end, b_start = _subblock_radix4(gammas, a0, b1, ls, la, lo, ext, app)
        else:
            raise ValueError(f"unknown schedule {schedule!r}")
        alpha_right[b] = a_end
        beta_left[b] = b_start

    if beta_term is None:
        beta_term = stakes.beta_right[-1]
    new_alpha = [known_state_boundary(0)] + (
        alpha_right[:-1] if nii else [uniform_boundary() for _ in range(p - 1)]
    )
    new_beta = (
        beta_left[1:] if nii else [uniform_boundary() for _ in range(p - 1)]
    ) + [beta_term.copy()]
    new_stakes = NiiStakes(alpha_left=new_alpha, beta_right=new_beta)

    emission = emission_trace(k, p, emission_order)
    return HalfIterationResult(extrinsics=ext, app_llrs=app, stakes=new_stakes, emission=emission)


def _subblock_radix2(gammas, alpha0, beta_end, ls, la, base, ext, app):
    n = len(gammas)
    alphas = [alpha0]
    a = alpha0
    for g in gammas:
        a = forward_step(a, g)
        alphas.append(a)
    beta = beta_end
    for i in reversed(range(n)):
        llr, e = llr_and_extrinsic(alphas[i], beta, gammas[i], ls[base + i], la[base + i])
        app[base + i] = llr
        ext[base + i] = e
        beta = backward_step(beta, gammas[i])
    return alphas[-1], beta


def _subblock_radix4(gammas, alpha0, beta_end, ls, la, base, ext, app):
    """Fused two-step recursions; metrics stored only at even indices.

    Odd-index metrics are reconstructed with a single unnormalised step
    inside the processing element; the LLR difference cancels the
    missing normalisation offset, so outputs match radix-2 exactly.
    """
    n = len(gammas)
    n_even = n - (n % 2)

    alphas_even = [alpha0]
    a = alpha0
    for i in range(0, n_even, 2):
        mid = _forward_raw(a, gammas[i])
        a = _normalize(_forward_raw(mid, gammas[i + 1]))
        alphas_even.append(a)
    a_end = a
    if n % 2:
        a_end = forward_step(a, gammas[n - 1])

    beta = beta_end
    if n % 2:
        i = n - 1
        llr, e = llr_and_extrinsic(alphas_even[-1], beta, gammas[i], ls[base + i], la[base + i])
        app[base + i] = llr
        ext[base + i] = e
        beta = backward_step(beta, gammas[i])
    for i in reversed(range(0, n_even, 2)):
        a_even = alphas_even[i // 2]
        a_odd = _forward_raw(a_even, gammas[i])
        llr, e = llr_and_extrinsic(a_odd, beta, gammas[i + 1], ls[base + i + 1], la[base + i + 1])
        app[base + i + 1] = llr
        ext[base + i + 1] = e
        b_odd = _backward_raw(beta, gammas[i + 1])
        llr, e = llr_and_extrinsic(a_even, b_odd, gammas[i], ls[base + i], la[base + i])
        app[base + i] = llr
        ext[base + i] = e
        beta = _normalize(_backward_raw(b_odd, gammas[i]))
    return a_end, beta


# -- emission model ----------------------------------------------------


def n_emission_cycles(k: int, p: int) -> int:
    return sub_block_length(k, p) // 4


def emission_trace(k: int, p: int, order: str = "xmap2win") -> list:
    """Lane-tagged write schedule for one half-iteration.

    Each decoder drives 4 lanes (one per sub-block quarter); lane ids
    are 4*decoder + stream.  Padding positions beyond K never appear.
    Every position in [0, K) appears exactly once across the trace.
    """
    ell = sub_block_length(k, p)
    q = ell // 4
    rows = []
    if order == XMAP_CROSS:
        for t in range(q):
            pairs = []
            for b in range(p):
                base = b * ell
                offs = (2 * q + 2 * t, 2 * q + 2 * t + 1, 2 * q - 2 * t - 2, 2 * q - 2 * t - 1)
                for lane, o in enumerate(offs):
                    pos = base + o
                    if pos < k:
                        pairs.append((4 * b + lane, pos))
            rows.append((t, pairs))
        return rows
    try:
        pattern = EMISSION_ORDERS[order]
    except KeyError:
        raise ValueError(f"unknown emission order {order!r}") from None
    for t in range(q):
        pairs = []
        for b in range(p):
            base = b * ell
            for lane, (quarter, mode) in enumerate(pattern):
                o = quarter * q + (t if mode == "a" else q - 1 - t)
                pos = base + o
                if pos < k:
                    pairs.append((4 * b + lane, pos))
        rows.append((t, pairs))
    return rows


def lane_trace(k: int, p_llr: int, order: str = "aligned") -> list:
    """Emission trace for a raw lane count.

    Multiples of 4 use the decoder-structured patterns; smaller lane
    counts fall back to one aligned window per lane, which is the
    natural model for radix-2 style decoders.
    """
    if p_llr >= 4 and p_llr % 4 == 0:
        return emission_trace(k, p_llr // 4, order)
    w = math.ceil(k / p_llr)
    rows = []
    for t in range(w):
        pairs = [(lane, lane * w + t) for lane in range(p_llr) if lane * w + t < k]
        rows.append((t, pairs))
    return rows


def default_emission_order(standard: str) -> str:
    """Standard-specific default write scheduling.

    LTE mode realigns the four per-decoder streams to a common window
    offset, which is what lets the downstream buffering be bypassed;
    HSPA+ mode lets the crossed half-window units write as they emit.
    """
    return "aligned" if standard == "lte" else "xmap2win"
