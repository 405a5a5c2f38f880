"""Double-buffer write-conflict resolver model.

Per memory module a register-based circular buffer absorbs concurrent
writes; per producing lane a FIFO holds writes the selection router
rejected.  Each cycle, candidates for a module are the fresh lane
writes targeting it plus the retrying FIFO heads; a pseudo-random
priority selector admits up to S of them (bounded by buffer space),
rejected fresh writes push into their producer's FIFO, and every
non-empty buffer commits one entry per cycle through the module's
single write port.  A lone candidate finding an empty buffer bypasses
straight to memory.

A rejected write whose FIFO is full has nowhere to go: in strict mode
that aborts the run (the configuration is under-provisioned); in stall
mode the producing lane holds its stream and retries, which is how the
classic single-buffer baseline without FIFOs behaves.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

from .memsys import MemoryMap

FRESH_FIRST = "fresh_first"
MIXED = "mixed"


class BufferOverflowError(RuntimeError):
    """Raised in strict mode when a rejected write cannot be parked."""

    def __init__(self, cycle: int, lane: int):
        super().__init__(f"lane {lane} FIFO overflow at cycle {cycle}: config under-provisioned")
        self.cycle = cycle
        self.lane = lane


@dataclass
class DbcfConfig:
    p_llr: int
    m: int
    s: int
    d_fifo: int
    d_buf: int
    prn_seed: int = 1
    retry_policy: str = MIXED
    allow_stall: bool = False

    def validate(self):
        if not 1 <= self.s <= self.p_llr:
            raise ValueError(f"S must be in [1, P_LLR], got {self.s}")
        if self.d_fifo < 0 or self.d_buf < 1:
            raise ValueError("buffer depths out of range")
        if self.m < self.p_llr:
            raise ValueError("need at least P_LLR memory modules")


@dataclass
class DbcfStats:
    c0: int
    c1: int
    max_fifo: int
    max_cbuf: int
    bypass: int
    stall_cycles: int
    committed: int
    seed: int
    lane_rejections: dict = field(default_factory=dict)

    @property
    def delta_c(self) -> int:
        return self.c1 - self.c0


class Xorshift32:
    """Deterministic PRN source for the priority selector (shifts 13/17/5)."""

    def __init__(self, seed: int):
        self.state = seed & 0xFFFFFFFF or 1

    def next(self) -> int:
        x = self.state
        x ^= (x << 13) & 0xFFFFFFFF
        x ^= x >> 17
        x ^= (x << 5) & 0xFFFFFFFF
        self.state = x
        return x


def lane_streams_from_trace(trace, translate) -> dict[int, list]:
    """Per-lane, cycle-aligned address sequences from emission trace rows.

    ``translate`` maps a trace position to its memory address.  A lane
    absent from a row (a padding slot) gets None for that cycle: the
    lane idles, it does not pull later data forward.
    """
    lanes = {lane for _, pairs in trace for lane, _ in pairs}
    streams: dict[int, list] = {l: [None] * len(trace) for l in lanes}
    for row_idx, (_, pairs) in enumerate(trace):
        for lane, pos in pairs:
            streams[lane][row_idx] = translate(pos)
    return streams


def run_dbcf(trace, translate, mmap: MemoryMap, cfg: DbcfConfig) -> DbcfStats:
    """Drive one half-iteration of write traffic through the buffer model.

    Returns stats with C1 = cycle at which the last buffered entry
    drained; exactly-once delivery of every traffic address is checked.
    """
    cfg.validate()
    streams = lane_streams_from_trace(trace, translate)
    lanes = sorted(streams)
    c0 = len(trace)
    total = sum(1 for s in streams.values() for a in s if a is not None)

    fifos = {l: deque() for l in lanes}
    bufs = [deque() for _ in range(cfg.m)]
    prn = Xorshift32(cfg.prn_seed)
    idx = {l: 0 for l in lanes}
    written = set()
    committed = bypass = stalls = 0
    max_fifo = max_cbuf = 0
    rejections = {l: 0 for l in lanes}
    t = 0

    while True:
        candidates: dict[int, list] = {}
        idle = set()
        for l in lanes:
            if idx[l] < len(streams[l]):
                a = streams[l][idx[l]]
                if a is None:
                    idle.add(l)
                else:
                    candidates.setdefault(mmap.module(a), []).append(("fresh", l, a))
        for l in lanes:
            if fifos[l]:
                a = fifos[l][0]
                candidates.setdefault(mmap.module(a), []).append(("fifo", l, a))
        if not candidates and not idle and not any(bufs):
            break

        empty_at_start = [not b for b in bufs]
        for b in bufs:
            if b:
                written.add(b.popleft())
                committed += 1

        advance = set()
        for mod, cands in candidates.items():
            if empty_at_start[mod] and len(cands) == 1:
                kind, l, a = cands[0]
                written.add(a)
                committed += 1
                bypass += 1
                if kind == "fresh":
                    advance.add(l)
                else:
                    fifos[l].popleft()
                continue
            room = cfg.d_buf - len(bufs[mod])
            quota = min(cfg.s, room)
            pool = list(cands)
            if cfg.retry_policy == FRESH_FIRST:
                pool.sort(key=lambda c: c[0] != "fresh")
                selected, rest = pool[:quota], pool[quota:]
            else:
                selected = []
                rest = pool
                while rest and len(selected) < quota:
                    selected.append(rest.pop(prn.next() % len(rest)))
            for kind, l, a in selected:
                bufs[mod].append(a)
                if kind == "fresh":
                    advance.add(l)
                else:
                    fifos[l].popleft()
            for kind, l, a in rest:
                if kind == "fifo":
                    continue  # head retries next cycle
                rejections[l] += 1
                if len(fifos[l]) < cfg.d_fifo:
                    fifos[l].append(a)
                    advance.add(l)
                elif cfg.allow_stall:
                    stalls += 1  # lane holds this datum and retries
                else:
                    raise BufferOverflowError(t, l)

        for l in lanes:
            if l in advance or l in idle:
                idx[l] += 1
        max_fifo = max(max_fifo, max((len(f) for f in fifos.values()), default=0))
        max_cbuf = max(max_cbuf, max((len(b) for b in bufs), default=0))
        t += 1
        if t > 1_000_000:
            raise RuntimeError("buffer simulation did not drain")

    if committed != total or len(written) != total:
        raise AssertionError("lost or duplicated writes in buffer model")
    return DbcfStats(
        c0=c0,
        c1=t,
        max_fifo=max_fifo,
        max_cbuf=max_cbuf,
        bypass=bypass,
        stall_cycles=stalls,
        committed=committed,
        seed=cfg.prn_seed,
        lane_rejections=rejections,
    )


def dbcf_sweep(grid, trace, translate, k: int, policy="block_division"):
    """Evaluate (S, D_FIFO, D_buf, M) combinations on fixed traffic.

    Yields one row per config: stall-free completions are feasible;
    configs that would overflow are reported with their stall count
    rather than aborting.  Rows: (p_llr, m, s, d_fifo, d_buf, c0, c1,
    dc, max_fifo, max_cbuf, bypass, seed, stalls, feasible).
    """
    for p_llr, m, s, d_fifo, d_buf, seed in grid:
        cfg = DbcfConfig(p_llr, m, s, d_fifo, d_buf, prn_seed=seed, allow_stall=True)
        mmap = MemoryMap(k, m, policy)
        st = run_dbcf(trace, translate, mmap, cfg)
        yield (
            p_llr, m, s, d_fifo, d_buf,
            st.c0, st.c1, st.delta_c,
            st.max_fifo, st.max_cbuf, st.bypass, seed,
            st.stall_cycles, st.stall_cycles == 0,
        )
