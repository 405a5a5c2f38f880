import numpy as np
import pytest
from hypothesis import given, strategies as st

from turbosim import codec, iag
from turbosim import fixedpoint as fp


def lfsr_parity_oracle(bits):
    """Independent shift-register model of the 13/15-octal RSC.

    Registers r1, r2, r3 hold the last three feedback values; written
    straight from the generator polynomials, no shared tables.
    """
    r1 = r2 = r3 = 0
    out = []
    for x in bits:
        w = x ^ r2 ^ r3          # feedback 1 + D^2 + D^3
        out.append(w ^ r1 ^ r3)  # feedforward 1 + D + D^3
        r1, r2, r3 = w, r1, r2
    return out


@pytest.fixture(scope="module")
def ctx40():
    return iag.qpp_params(40)


def test_all_zero_block_encodes_to_zero(ctx40):
    enc = codec.encode(codec.CodeBlock(np.zeros(40, dtype=int)), ctx40)
    assert not enc.systematic.any()
    assert not enc.parity1.any()
    assert not enc.parity2.any()
    assert not enc.termination().any()


def test_impulse_response_matches_lfsr_oracle(ctx40):
    bits = np.zeros(40, dtype=int)
    bits[0] = 1
    enc = codec.encode(codec.CodeBlock(bits), ctx40)
    assert enc.parity1.tolist() == lfsr_parity_oracle(bits)


def test_random_parity_matches_lfsr_oracle(ctx40):
    rng = np.random.default_rng(3)
    bits = rng.integers(0, 2, 40)
    enc = codec.encode(codec.CodeBlock(bits), ctx40)
    assert enc.parity1.tolist() == lfsr_parity_oracle(bits)
    assert enc.parity2.tolist() == lfsr_parity_oracle(bits[ctx40.permutation()])


def test_noiseless_round_trip(ctx40):
    rng = np.random.default_rng(11)
    bits = rng.integers(0, 2, 40)
    enc = codec.encode(codec.CodeBlock(bits), ctx40)
    ch = codec.awgn_modulate(enc, 40.0, codec.mother_code_rate(40), seed=1)
    assert np.array_equal((ch.ls > 0).astype(int), bits)
    assert np.array_equal((ch.lp1 > 0).astype(int), enc.parity1)
    assert np.array_equal((ch.lp2 > 0).astype(int), enc.parity2)


def test_encoder_linearity_gf2(ctx40):
    rng = np.random.default_rng(7)
    for _ in range(25):
        a = rng.integers(0, 2, 40)
        b = rng.integers(0, 2, 40)
        ea = codec.encode(codec.CodeBlock(a), ctx40)
        eb = codec.encode(codec.CodeBlock(b), ctx40)
        eab = codec.encode(codec.CodeBlock(a ^ b), ctx40)
        assert np.array_equal(eab.parity1, ea.parity1 ^ eb.parity1)
        assert np.array_equal(eab.parity2, ea.parity2 ^ eb.parity2)
        assert np.array_equal(eab.termination(), ea.termination() ^ eb.termination())


@pytest.mark.parametrize("standard,k", [("hspa", 40), ("hspa", 2048), ("lte", 40), ("lte", 2048)])
def test_termination_reaches_zero_state_bulk(standard, k):
    # rsc encoding of 1000 random blocks; _batch_rsc asserts the final
    # state is zero for every frame.
    from turbosim.pipeline import _batch_rsc

    rng = np.random.default_rng(k)
    bits = rng.integers(0, 2, (250, k))
    for _ in range(4):
        _batch_rsc(bits)
        bits = rng.integers(0, 2, (250, k))


def test_size_mismatch_rejected(ctx40):
    with pytest.raises(ValueError):
        codec.encode(codec.CodeBlock(np.zeros(48, dtype=int)), ctx40)


def test_awgn_deterministic(ctx40):
    enc = codec.encode(codec.CodeBlock(np.ones(40, dtype=int)), ctx40)
    a = codec.awgn_modulate(enc, 1.0, codec.mother_code_rate(40), seed=123, frame=5)
    b = codec.awgn_modulate(enc, 1.0, codec.mother_code_rate(40), seed=123, frame=5)
    assert np.array_equal(a.ls, b.ls) and np.array_equal(a.lp1, b.lp1)
    c = codec.awgn_modulate(enc, 1.0, codec.mother_code_rate(40), seed=123, frame=6)
    assert not np.array_equal(a.ls, c.ls)


def test_noiseless_limit_saturates(ctx40):
    rng = np.random.default_rng(2)
    bits = rng.integers(0, 2, 40)
    enc = codec.encode(codec.CodeBlock(bits), ctx40)
    ch = codec.awgn_modulate(enc, 60.0, codec.mother_code_rate(40), seed=9)
    expect = np.where(bits == 1, fp.CHANNEL_MAX, fp.CHANNEL_MIN)
    assert np.array_equal(ch.ls, expect)


def test_llr_statistics_match_float_oracle():
    # Quantized LLR mean magnitude tracks the unquantized 2r/sigma^2
    # within the quantizer's scale and clipping.
    ctx = iag.qpp_params(6144)
    rng = np.random.default_rng(4)
    bits = rng.integers(0, 2, 6144)
    enc = codec.encode(codec.CodeBlock(bits), ctx)
    rate = codec.mother_code_rate(6144)
    raw = codec.awgn_modulate(enc, 0.0, rate, seed=77, quantized=False)
    quant = codec.awgn_modulate(enc, 0.0, rate, seed=77, quantized=True)
    scale = fp.DEFAULT_CHANNEL_SCALE
    clipped = np.clip(np.rint(raw.ls * scale), fp.CHANNEL_MIN, fp.CHANNEL_MAX)
    assert np.array_equal(quant.ls, clipped.astype(np.int64))
    assert abs(np.mean(np.abs(quant.ls)) - np.mean(np.abs(clipped))) < 1e-12
    # mean magnitudes agree within one quantizer step
    assert abs(np.mean(np.abs(quant.ls / scale)) - np.mean(np.abs(raw.ls))) < 1.0 / scale


def test_quantizer_fixed_points():
    assert fp.quantize_channel(0.0) == 0
    assert fp.quantize_channel(1e9) == fp.CHANNEL_MAX
    assert fp.quantize_channel(-1e9) == fp.CHANNEL_MIN


@given(st.floats(min_value=-100, max_value=100), st.floats(min_value=-100, max_value=100))
def test_quantizer_monotone(a, b):
    lo, hi = sorted((a, b))
    assert fp.quantize_channel(lo) <= fp.quantize_channel(hi)


@given(st.integers(min_value=fp.CHANNEL_MIN, max_value=fp.CHANNEL_MAX))
def test_quantizer_idempotent_on_representable(word):
    assert fp.quantize_channel(word / fp.DEFAULT_CHANNEL_SCALE) == word
