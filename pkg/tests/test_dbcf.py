import numpy as np
import pytest

from turbosim import iag, siso
from turbosim.dbcf import BufferOverflowError, DbcfConfig, Xorshift32, dbcf_sweep, run_dbcf
from turbosim.memsys import BLOCK_DIVISION, MemoryMap

K = 5114

# (p_llr, m, s, d_fifo, d_buf, reference dC): first and fourth rows are
# the classic single-buffer baselines, the rest the tuned buffer configs.
TABLE_ROWS = (
    (16, 16, 1, 0, 128, 175),
    (16, 16, 3, 4, 12, 12),
    (16, 32, 3, 3, 4, 3),
    (32, 32, 1, 0, 128, 108),
    (32, 32, 3, 8, 12, 10),
    (32, 64, 3, 4, 7, 4),
)

DBCF_SEED = 2


@pytest.fixture(scope="module")
def hspa_ctx():
    return iag.hspa_preprocess(K)


def _translate(ctx):
    return lambda pos: ctx.address(pos, iag.INTERLEAVE)


def test_conflict_free_stream_all_bypass(hspa_ctx):
    k = 512
    ctx = iag.qpp_params(k)
    trace = siso.lane_trace(k, 16, "aligned")
    cfg = DbcfConfig(p_llr=16, m=16, s=1, d_fifo=0, d_buf=4, prn_seed=1)
    st = run_dbcf(trace, lambda pos: ctx.address(pos, iag.INTERLEAVE), MemoryMap(k, 16), cfg)
    assert st.delta_c == 0
    assert st.max_fifo == 0 and st.max_cbuf == 0
    assert st.bypass == k
    assert st.stall_cycles == 0


def test_single_lane_stream_all_bypass(hspa_ctx):
    trace = siso.lane_trace(K, 1)
    cfg = DbcfConfig(p_llr=1, m=1, s=1, d_fifo=0, d_buf=2, prn_seed=1)
    st = run_dbcf(trace, _translate(hspa_ctx), MemoryMap(K, 1), cfg)
    assert st.delta_c == 0 and st.bypass == K


@pytest.mark.parametrize("p_llr,m,s,d_fifo,d_buf,ref", TABLE_ROWS)
def test_table_rows_within_band(hspa_ctx, p_llr, m, s, d_fifo, d_buf, ref):
    trace = siso.emission_trace(K, p_llr // 4, "xmap2win")
    cfg = DbcfConfig(p_llr, m, s, d_fifo, d_buf, prn_seed=DBCF_SEED, allow_stall=True)
    st = run_dbcf(trace, _translate(hspa_ctx), MemoryMap(K, m, BLOCK_DIVISION), cfg)
    assert st.c0 == {16: 320, 32: 160}[p_llr]
    assert st.committed == K
    assert 0.5 * ref <= st.delta_c <= 3.0 * ref, (st.delta_c, ref)
    assert st.max_cbuf <= d_buf and st.max_fifo <= d_fifo
    if d_fifo > 0:  # buffer-provisioned rows never stall producers
        assert st.stall_cycles == 0


def test_tuned_configs_dominate_baseline(hspa_ctx):
    results = {}
    for p_llr, m, s, d_fifo, d_buf, ref in TABLE_ROWS:
        trace = siso.emission_trace(K, p_llr // 4, "xmap2win")
        cfg = DbcfConfig(p_llr, m, s, d_fifo, d_buf, prn_seed=DBCF_SEED, allow_stall=True)
        st = run_dbcf(trace, _translate(hspa_ctx), MemoryMap(K, m, BLOCK_DIVISION), cfg)
        results[(p_llr, m, s, d_fifo, d_buf)] = st.delta_c
    assert results[(16, 16, 3, 4, 12)] < results[(16, 16, 1, 0, 128)]
    assert results[(16, 32, 3, 3, 4)] < results[(16, 16, 1, 0, 128)]
    assert results[(32, 32, 3, 8, 12)] < results[(32, 32, 1, 0, 128)]
    assert results[(32, 64, 3, 4, 7)] < results[(32, 32, 1, 0, 128)]


def test_feasibility_frontier_exact_depths(hspa_ctx):
    # the published depths complete without overflow in strict mode
    for p_llr, m, s, d_fifo, d_buf, _ in TABLE_ROWS:
        if d_fifo == 0:
            continue
        trace = siso.emission_trace(K, p_llr // 4, "xmap2win")
        cfg = DbcfConfig(p_llr, m, s, d_fifo, d_buf, prn_seed=DBCF_SEED, allow_stall=False)
        st = run_dbcf(trace, _translate(hspa_ctx), MemoryMap(K, m, BLOCK_DIVISION), cfg)
        assert st.stall_cycles == 0


def test_overflow_aborts_in_strict_mode(hspa_ctx):
    trace = siso.emission_trace(K, 8, "xmap2win")
    cfg = DbcfConfig(32, 32, 1, 0, 4, prn_seed=1, allow_stall=False)
    with pytest.raises(BufferOverflowError) as info:
        run_dbcf(trace, _translate(hspa_ctx), MemoryMap(K, 32, BLOCK_DIVISION), cfg)
    assert info.value.cycle >= 0


def test_determinism(hspa_ctx):
    trace = siso.emission_trace(K, 4, "xmap2win")
    cfg = DbcfConfig(16, 16, 3, 4, 12, prn_seed=11, allow_stall=True)
    mm = MemoryMap(K, 16, BLOCK_DIVISION)
    a = run_dbcf(trace, _translate(hspa_ctx), mm, cfg)
    b = run_dbcf(trace, _translate(hspa_ctx), mm, cfg)
    assert (a.c1, a.max_fifo, a.max_cbuf, a.bypass) == (b.c1, b.max_fifo, b.max_cbuf, b.bypass)


def test_full_selection_never_pushes_fifo(hspa_ctx):
    # S = P_LLR with a buffer at least that deep admits every candidate
    trace = siso.emission_trace(K, 4, "xmap2win")
    cfg = DbcfConfig(16, 16, 16, 0, 32, prn_seed=3, allow_stall=False)
    st = run_dbcf(trace, _translate(hspa_ctx), MemoryMap(K, 16, BLOCK_DIVISION), cfg)
    assert st.max_fifo == 0
    assert st.stall_cycles == 0


def test_added_buffer_capacity_never_hurts(hspa_ctx):
    trace = siso.emission_trace(K, 8, "xmap2win")
    mm = MemoryMap(K, 32, BLOCK_DIVISION)
    last = None
    for d_buf in (6, 8, 12, 16, 32, 128):
        cfg = DbcfConfig(32, 32, 3, 8, d_buf, prn_seed=DBCF_SEED, allow_stall=True)
        st = run_dbcf(trace, _translate(hspa_ctx), mm, cfg)
        if last is not None:
            assert st.delta_c <= last + 1  # PRN reshuffling may wiggle by one
        last = st.delta_c


def test_fairness_of_rejections():
    # symmetric synthetic conflict: every cycle both lanes target the
    # same module (alternating modules so the load stays sustainable);
    # rejections must split evenly within binomial noise
    k = 4096
    m = 2
    depth = k // m
    cycles = k // 2
    rows = []
    for t in range(cycles):
        mod = t % 2
        rows.append((t, [(0, mod * depth + t // 2), (1, mod * depth + depth // 2 + t // 2)]))

    mm = MemoryMap(k, m, BLOCK_DIVISION)
    cfg = DbcfConfig(2, 2, 1, 8, 8, prn_seed=5, allow_stall=False)
    st = run_dbcf(rows, lambda pos: pos, mm, cfg)
    assert st.committed == k
    total_rej = sum(st.lane_rejections.values())
    assert total_rej > 100  # the scenario really does conflict
    sigma = (total_rej * 0.25) ** 0.5
    assert abs(st.lane_rejections[0] - total_rej / 2) < 3 * sigma + 1

    # direct fairness of the PRN priority selector itself
    n_lanes = 8
    prn = Xorshift32(9)
    wins = np.zeros(n_lanes)
    trials = 4000
    for _ in range(trials):
        pool = list(range(n_lanes))
        wins[pool[prn.next() % len(pool)]] += 1
    expect = trials / n_lanes
    sigma = (trials * (1 / n_lanes) * (1 - 1 / n_lanes)) ** 0.5
    assert np.all(np.abs(wins - expect) < 3 * sigma + 1)


def test_sweep_reports_infeasible_rows(hspa_ctx):
    trace = siso.emission_trace(K, 4, "xmap2win")
    grid = [
        (16, 16, 3, 4, 12, DBCF_SEED),   # feasible tuned row
        (16, 16, 1, 0, 4, DBCF_SEED),    # hopeless: stalls
    ]
    rows = list(dbcf_sweep(grid, trace, _translate(hspa_ctx), K))
    assert rows[0][13] is True
    assert rows[1][13] is False
    assert rows[1][12] > 0  # stall count reported, not aborted


def test_config_validation():
    with pytest.raises(ValueError):
        DbcfConfig(16, 16, 0, 4, 12).validate()
    with pytest.raises(ValueError):
        DbcfConfig(16, 8, 3, 4, 12).validate()
