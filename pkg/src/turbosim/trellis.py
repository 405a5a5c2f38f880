"""8-state trellis of the 3GPP rate-1/2 recursive systematic code.

Generator polynomials (octal): feedback 13 = 1 + D^2 + D^3, feedforward
15 = 1 + D + D^3.  A state packs the three delay registers as
s = d1 + 2*d2 + 4*d3 with d1 the most recent register.  For input bit u
the register input is w = u ^ d2 ^ d3 and the parity output is
w ^ d1 ^ d3.
"""

from __future__ import annotations

import numpy as np

N_STATES = 8


def _step(state: int, u: int) -> tuple[int, int]:
    d1, d2, d3 = state & 1, (state >> 1) & 1, (state >> 2) & 1
    w = u ^ d2 ^ d3
    parity = w ^ d1 ^ d3
    nxt = w | (d1 << 1) | (d2 << 2)
    return nxt, parity


# NEXT_STATE[s, u], PARITY[s, u]
NEXT_STATE = np.zeros((N_STATES, 2), dtype=np.int64)
PARITY = np.zeros((N_STATES, 2), dtype=np.int64)
for _s in range(N_STATES):
    for _u in (0, 1):
        NEXT_STATE[_s, _u], PARITY[_s, _u] = _step(_s, _u)

# PREV[t] lists the two (source state, input bit) pairs reaching t.
PREV = [[] for _ in range(N_STATES)]
for _s in range(N_STATES):
    for _u in (0, 1):
        PREV[NEXT_STATE[_s, _u]].append((_s, _u))
for _t in range(N_STATES):
    assert len(PREV[_t]) == 2

# Input that drives the feedback to zero, used for trellis termination.
TAIL_INPUT = np.array([((s >> 1) & 1) ^ ((s >> 2) & 1) for s in range(N_STATES)], dtype=np.int64)

# Flat predecessor tables for vectorised recursions:
# alpha[t] = max(alpha_prev[PRED_STATE[t, i]] + gamma[PRED_STATE[t, i], PRED_INPUT[t, i]])
PRED_STATE = np.array([[PREV[t][0][0], PREV[t][1][0]] for t in range(N_STATES)], dtype=np.int64)
PRED_INPUT = np.array([[PREV[t][0][1], PREV[t][1][1]] for t in range(N_STATES)], dtype=np.int64)
