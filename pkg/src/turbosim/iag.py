"""On-the-fly interleaving address generation for both standards.

HSPA+ uses the column-row pseudo-random permutation: a one-shot
preprocessing step derives the matrix geometry (R rows, C columns,
prime p with primitive root v), the intra-row base sequence s and its
inverse, the per-row multipliers r_i with modular inverses m_i, and the
inter-row pattern T.  After that, every interleaved or deinterleaved
address costs a single (a*b) mod c kernel evaluation plus table
lookups; pruning of matrix cells >= K is resolved with small per-column
bookkeeping built during preprocessing.

LTE uses the quadratic permutation polynomial f(x) = (f1*x + f2*x^2)
mod K, generated either by direct evaluation or by the incremental
recursion f(x+1) = f(x) + g(x), g(x+1) = g(x) + 2*f2 (mod K).  The
inverse permutation is materialised as a lookup during preprocessing.
"""

from __future__ import annotations

import bisect
from dataclasses import dataclass, field

import numpy as np

from .qpp_params import QPP_PARAMS

HSPA_MIN_K = 40
HSPA_MAX_K = 5114

INTERLEAVE = "interleave"
DEINTERLEAVE = "deinterleave"

# Minimum primes with a primitive root, as used by the column-row law.
PRIME_ROOT = (
    (7, 3), (11, 2), (13, 2), (17, 3), (19, 2), (23, 5), (29, 2), (31, 3),
    (37, 2), (41, 6), (43, 3), (47, 5), (53, 2), (59, 2), (61, 2), (67, 2),
    (71, 7), (73, 5), (79, 3), (83, 2), (89, 3), (97, 5), (101, 2), (103, 5),
    (107, 2), (109, 6), (113, 3), (127, 3), (131, 2), (137, 3), (139, 2),
    (149, 2), (151, 6), (157, 5), (163, 2), (167, 5), (173, 2), (179, 2),
    (181, 2), (191, 19), (193, 5), (197, 2), (199, 3), (211, 2), (223, 3),
    (227, 2), (229, 6), (233, 3), (239, 7), (241, 7), (251, 6), (257, 3),
)

T_R5 = (4, 3, 2, 1, 0)
T_R10 = (9, 8, 7, 6, 5, 4, 3, 2, 1, 0)
T_R20_A = (19, 9, 14, 4, 0, 2, 5, 7, 12, 18, 16, 13, 17, 15, 3, 1, 6, 11, 8, 10)
T_R20_B = (19, 9, 14, 4, 0, 2, 5, 7, 12, 18, 10, 8, 13, 17, 3, 1, 16, 6, 15, 11)

# Storage budgets of the runtime parameter memories.
MAX_T_ENTRIES = 128
MAX_R_ENTRIES = 1440
MAX_M_ENTRIES = 1200
MAX_S_ENTRIES = 256


def _is_prime(n: int) -> bool:
    if n < 2:
        return False
    if n % 2 == 0:
        return n == 2
    d = 3
    while d * d <= n:
        if n % d == 0:
            return False
        d += 2
    return True


def _gcd(a: int, b: int) -> int:
    while b:
        a, b = b, a % b
    return a


@dataclass
class HspaContext:
    """Preprocessed parameters of the column-row permutation for one K."""

    k: int
    rows: int
    cols: int
    prime: int
    root: int
    s: np.ndarray          # base sequence, length p-1, values in [1, p-1]
    s_inv: np.ndarray      # value -> index into s, length p (entry 0 unused)
    r: np.ndarray          # per-row multipliers, length R
    m: np.ndarray          # modular inverses of r mod (p-1), length R
    t: np.ndarray          # inter-row pattern: display row i holds original row t[i]
    t_inv: np.ndarray
    swap_last_row: bool    # C == p+1 and K == R*C: exchange U(0) and U(p) in the last row
    # pruning bookkeeping (display coordinates)
    valid_before_col: np.ndarray            # cumulative valid cells in columns < j, length C+1
    pruned_rows_in_col: dict[int, list[int]] = field(default_factory=dict)
    kernel_calls: int = 0

    def permutation(self) -> np.ndarray:
        """Full interleave table built from the runtime parameter arrays."""
        u = self._u_matrix()
        values = self.t[:, np.newaxis] * self.cols + u[self.t, :]  # display matrix
        flat = values.T.ravel()  # column-major read-out
        return flat[flat < self.k]

    def inverse_permutation(self) -> np.ndarray:
        perm = self.permutation()
        inv = np.zeros(self.k, dtype=np.int64)
        inv[perm] = np.arange(self.k, dtype=np.int64)
        return inv

    def _u_matrix(self) -> np.ndarray:
        """All intra-row permutations as an (R, C) matrix (no kernel counting)."""
        p, c, rows = self.prime, self.cols, self.rows
        j = np.arange(p - 1, dtype=np.int64)
        body = self.s[(j[np.newaxis, :] * self.r[:, np.newaxis]) % (p - 1)]
        u = np.zeros((rows, c), dtype=np.int64)
        if c == p - 1:
            u[:, :] = body[:, :c] - 1
        else:
            u[:, : p - 1] = body
            u[:, p - 1] = 0
            if c == p + 1:
                u[:, p] = p
                if self.swap_last_row:
                    u[rows - 1, 0], u[rows - 1, p] = u[rows - 1, p], u[rows - 1, 0]
        return u

    # -- runtime address generation ------------------------------------

    def _kernel(self, a: int, b: int) -> int:
        self.kernel_calls += 1
        return (a * b) % (self.prime - 1)

    def _u(self, row: int, j: int) -> int:
        """Intra-row column map U_row(j); one kernel call on the generic path."""
        p, c = self.prime, self.cols
        if self.swap_last_row and row == self.rows - 1:
            if j == 0:
                return p
            if j == p:
                return int(self.s[0])
        if c == p - 1:
            return int(self.s[self._kernel(j, int(self.r[row]))]) - 1
        if j == p - 1:
            return 0
        if j == p:  # only reachable when c == p + 1
            return p
        return int(self.s[self._kernel(j, int(self.r[row]))])

    def _u_inv(self, row: int, col: int) -> int:
        """Inverse intra-row map; one kernel call on the generic path."""
        p, c = self.prime, self.cols
        if self.swap_last_row and row == self.rows - 1:
            if col == p:
                return 0
            if col == int(self.s[0]):
                return p
        if c == p - 1:
            return self._kernel(int(self.s_inv[col + 1]), int(self.m[row]))
        if col == 0:
            return p - 1
        if col == p:  # only reachable when c == p + 1
            return p
        return self._kernel(int(self.s_inv[col]), int(self.m[row]))

    def interleave(self, x: int) -> int:
        """Natural position read by interleaved-domain position x."""
        if not 0 <= x < self.k:
            raise ValueError(f"position {x} out of range for K={self.k}")
        j = bisect.bisect_right(self.valid_before_col, x) - 1
        i = x - int(self.valid_before_col[j])
        for pruned in self.pruned_rows_in_col.get(j, ()):
            if i >= pruned:
                i += 1
        orig_row = int(self.t[i])
        return orig_row * self.cols + self._u(orig_row, j)

    def deinterleave(self, y: int) -> int:
        """Interleaved-domain position that reads natural position y."""
        if not 0 <= y < self.k:
            raise ValueError(f"position {y} out of range for K={self.k}")
        orig_row, col = divmod(y, self.cols)
        j = self._u_inv(orig_row, col)
        i = int(self.t_inv[orig_row])
        skipped = sum(1 for pruned in self.pruned_rows_in_col.get(j, ()) if pruned < i)
        return int(self.valid_before_col[j]) + i - skipped

    def address(self, x: int, direction: str) -> int:
        if direction == INTERLEAVE:
            return self.interleave(x)
        if direction == DEINTERLEAVE:
            return self.deinterleave(x)
        raise ValueError(f"unknown direction {direction!r}")


def _hspa_geometry(k: int) -> tuple[int, int, int, int]:
    if 40 <= k <= 159:
        rows = 5
    elif 160 <= k <= 200 or 481 <= k <= 530:
        rows = 10
    else:
        rows = 20
    if 481 <= k <= 530:
        prime, root = 53, 2
        cols = prime
    else:
        for prime, root in PRIME_ROOT:
            if k <= rows * (prime + 1):
                break
        else:
            raise AssertionError("prime table exhausted")
        if k <= rows * (prime - 1):
            cols = prime - 1
        elif k <= rows * prime:
            cols = prime
        else:
            cols = prime + 1
    return rows, cols, prime, root


def _inter_row_pattern(k: int, rows: int) -> tuple[int, ...]:
    if rows == 5:
        return T_R5
    if rows == 10:
        return T_R10
    if 2281 <= k <= 2480 or 3161 <= k <= 3210:
        return T_R20_A
    return T_R20_B


def hspa_preprocess(k: int) -> HspaContext:
    """Build the runtime context for one HSPA+ block size."""
    if not HSPA_MIN_K <= k <= HSPA_MAX_K:
        raise ValueError(f"HSPA+ block size must be in [{HSPA_MIN_K}, {HSPA_MAX_K}], got {k}")
    rows, cols, p, v = _hspa_geometry(k)
    t = _inter_row_pattern(k, rows)

    s = np.zeros(p - 1, dtype=np.int64)
    s[0] = 1
    for j in range(1, p - 1):
        s[j] = (v * s[j - 1]) % p
    s_inv = np.zeros(p, dtype=np.int64)
    for j in range(p - 1):
        s_inv[s[j]] = j

    q = [1]
    cand = 7
    while len(q) < rows:
        if _is_prime(cand) and _gcd(cand, p - 1) == 1 and cand > q[-1]:
            q.append(cand)
        cand += 1
    r = np.zeros(rows, dtype=np.int64)
    for i in range(rows):
        r[t[i]] = q[i]
    m = np.array([pow(int(ri), -1, p - 1) for ri in r], dtype=np.int64)

    t_arr = np.array(t, dtype=np.int64)
    t_inv = np.zeros(rows, dtype=np.int64)
    for i in range(rows):
        t_inv[t_arr[i]] = i

    ctx = HspaContext(
        k=k, rows=rows, cols=cols, prime=p, root=v,
        s=s, s_inv=s_inv, r=r, m=m, t=t_arr, t_inv=t_inv,
        swap_last_row=(cols == p + 1 and k == rows * cols),
        valid_before_col=np.zeros(cols + 1, dtype=np.int64),
    )

    # Pruning bookkeeping: display cell (i, j) holds original index
    # t[i]*C + U_{t[i]}(j); cells >= K are skipped during read-out.
    valid_before = np.zeros(cols + 1, dtype=np.int64)
    pruned: dict[int, list[int]] = {}
    lowest_full_row = (k - 1) // cols  # original rows below this never prune
    count = 0
    for j in range(cols):
        valid_before[j] = count
        for i in range(rows):
            orig = int(ctx.t[i])
            if orig < lowest_full_row:
                count += 1
                continue
            val = orig * cols + ctx._u(orig, j)
            if val < k:
                count += 1
            else:
                pruned.setdefault(j, []).append(i)
    valid_before[cols] = count
    assert count == k, (k, count)
    ctx.valid_before_col = valid_before
    ctx.pruned_rows_in_col = pruned
    ctx.kernel_calls = 0

    # runtime-table budgets; s_inv slot 0 is padding for direct indexing
    assert rows <= MAX_T_ENTRIES
    assert len(s) <= MAX_S_ENTRIES and len(s_inv) - 1 <= MAX_S_ENTRIES
    return ctx


@dataclass
class QppContext:
    """Quadratic permutation polynomial context for one LTE block size."""

    k: int
    f1: int
    f2: int
    _inverse: np.ndarray

    def permutation(self) -> np.ndarray:
        x = np.arange(self.k, dtype=np.int64)
        return (self.f1 * x + self.f2 * x * x) % self.k

    def interleave(self, x: int) -> int:
        if not 0 <= x < self.k:
            raise ValueError(f"position {x} out of range for K={self.k}")
        return (self.f1 * x + self.f2 * x * x) % self.k

    def deinterleave(self, y: int) -> int:
        if not 0 <= y < self.k:
            raise ValueError(f"position {y} out of range for K={self.k}")
        return int(self._inverse[y])

    def address(self, x: int, direction: str) -> int:
        if direction == INTERLEAVE:
            return self.interleave(x)
        if direction == DEINTERLEAVE:
            return self.deinterleave(x)
        raise ValueError(f"unknown direction {direction!r}")

    def step_state(self) -> tuple[int, int]:
        """Initial (f, g) pair for the incremental generator."""
        return 0, (self.f1 + self.f2) % self.k

    def step(self, state: tuple[int, int]) -> tuple[int, int]:
        f, g = state
        return (f + g) % self.k, (g + 2 * self.f2) % self.k

    def sequence(self) -> np.ndarray:
        """Full permutation via the incremental recursion (no multiplies)."""
        out = np.empty(self.k, dtype=np.int64)
        state = self.step_state()
        for x in range(self.k):
            out[x] = state[0]
            state = self.step(state)
        return out


def qpp_params(k: int) -> QppContext:
    if k not in QPP_PARAMS:
        raise ValueError(f"{k} is not a legal LTE block size")
    f1, f2 = QPP_PARAMS[k]
    x = np.arange(k, dtype=np.int64)
    fwd = (f1 * x + f2 * x * x) % k
    inv = np.zeros(k, dtype=np.int64)
    inv[fwd] = x
    return QppContext(k=k, f1=f1, f2=f2, _inverse=inv)


def make_context(standard: str, k: int):
    if standard == "hspa":
        return hspa_preprocess(k)
    if standard == "lte":
        return qpp_params(k)
    raise ValueError(f"unknown standard {standard!r}")


@dataclass
class AddressLanes:
    """Translated addresses for one emission cycle, tagged by lane."""

    cycle: int
    lanes: np.ndarray      # lane ids
    addresses: np.ndarray  # addresses in [0, K)


def lanes_for_cycle(ctx, emission_row, direction: str | None) -> AddressLanes:
    """Map one EmissionTrace row through the selected direction.

    ``direction`` None is the natural-order pass-through used for
    in-order reads.
    """
    cycle, pairs = emission_row
    lanes = np.array([lane for lane, _ in pairs], dtype=np.int64)
    if direction is None:
        addrs = np.array([pos for _, pos in pairs], dtype=np.int64)
    else:
        addrs = np.array([ctx.address(pos, direction) for _, pos in pairs], dtype=np.int64)
    return AddressLanes(cycle=cycle, lanes=lanes, addresses=addrs)


def dump_rows(ctx, direction: str = INTERLEAVE):
    """Yield (x, mapped) pairs for the full table; used by the CSV dump."""
    for x in range(ctx.k):
        yield x, ctx.address(x, direction)
