"""Cycle-accurate extrinsic-memory model: address mapping and conflict
statistics over parallel LLR traffic."""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field

BLOCK_DIVISION = "block_division"
MODULO = "modulo"


@dataclass(frozen=True)
class MemoryMap:
    """Partition of [0, K) addresses into M memory modules."""

    k: int
    m: int
    policy: str = BLOCK_DIVISION

    @property
    def depth(self) -> int:
        return math.ceil(self.k / self.m)

    def locate(self, a: int) -> tuple[int, int]:
        if not 0 <= a < self.k:
            raise ValueError(f"address {a} out of range for K={self.k}")
        if self.policy == BLOCK_DIVISION:
            return a // self.depth, a % self.depth
        if self.policy == MODULO:
            return a % self.m, a // self.m
        raise ValueError(f"unknown policy {self.policy!r}")

    def module(self, a: int) -> int:
        return self.locate(a)[0]


@dataclass
class ConflictStats:
    """Aggregated per-half-iteration conflict measurements."""

    total_cycles: int = 0
    conflict_cycles: int = 0
    nway_counts: Counter = field(default_factory=Counter)
    module_accesses: Counter = field(default_factory=Counter)
    total_accesses: int = 0
    penalty_cycles: int = 0  # serialized extra cycles: sum of (n - 1)

    @property
    def mcr(self) -> float:
        return self.conflict_cycles / self.total_cycles if self.total_cycles else 0.0

    @property
    def n_conflicts(self) -> int:
        return sum(self.nway_counts.values())

    def nway_percent(self, n: int) -> float:
        total = self.n_conflicts
        return 100.0 * self.nway_counts.get(n, 0) / total if total else 0.0

    def share_2_to_4(self) -> float:
        total = self.n_conflicts
        if not total:
            return 0.0
        return 100.0 * sum(self.nway_counts[n] for n in (2, 3, 4)) / total

    def mean_accesses_per_module_cycle(self, m: int) -> float:
        if not self.total_cycles:
            return 0.0
        return self.total_accesses / (self.total_cycles * m)


def simulate_traffic(address_cycles, mmap: MemoryMap, check_unique: bool = True) -> ConflictStats:
    """Group each cycle's addresses by module and accumulate conflicts.

    ``address_cycles`` yields one iterable of addresses per cycle.  A
    module hit n >= 2 times in a cycle records one n-way conflict; a
    cycle with at least one such module is a conflict cycle.  Raises if
    any address repeats within the half-iteration (a broken permutation
    or trace would do that).
    """
    stats = ConflictStats()
    seen = set() if check_unique else None
    for addrs in address_cycles:
        stats.total_cycles += 1
        per_module = Counter()
        for a in addrs:
            if seen is not None:
                if a in seen:
                    raise ValueError(f"duplicate address {a} within one half-iteration")
                seen.add(a)
            per_module[mmap.module(a)] += 1
            stats.total_accesses += 1
        conflicted = False
        for mod, n in per_module.items():
            stats.module_accesses[mod] += n
            if n >= 2:
                conflicted = True
                stats.nway_counts[n] += 1
                stats.penalty_cycles += n - 1
        if conflicted:
            stats.conflict_cycles += 1
    return stats


def traffic_from_trace(trace, ctx, direction):
    """Translate an emission trace through a permutation direction,
    yielding one address list per cycle.  ``direction`` None passes the
    natural positions through."""
    for _, pairs in trace:
        if direction is None:
            yield [pos for _, pos in pairs]
        else:
            yield [ctx.address(pos, direction) for _, pos in pairs]


def mcr_sweep(standard: str, k_list, pllr_list, policy=BLOCK_DIVISION, emission_order=None):
    """MCR matrix over (K, P_LLR) for one standard's interleaved writes.

    Returns rows of (standard, K, P_LLR, M, policy, mcr).
    """
    from .iag import INTERLEAVE, make_context
    from .siso import default_emission_order, lane_trace

    order = emission_order or default_emission_order(standard)
    rows = []
    for k in k_list:
        ctx = make_context(standard, k)
        for pllr in pllr_list:
            trace = lane_trace(k, pllr, order)
            mmap = MemoryMap(k, pllr, policy)
            stats = simulate_traffic(traffic_from_trace(trace, ctx, INTERLEAVE), mmap)
            rows.append((standard, k, pllr, pllr, policy, stats.mcr))
    return rows
