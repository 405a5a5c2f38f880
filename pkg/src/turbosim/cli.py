"""Experiment runner: every study exposed as a subcommand with CSV output.

Configuration precedence: command-line flags > TURBOSIM_* environment
variables > key=value config file > defaults.  All runs are
deterministic for a fixed seed; repeated runs produce byte-identical
CSV files.

Exit codes: 0 success, 1 configuration error, 2 invariant violation,
3 infeasible buffer configuration.
"""

from __future__ import annotations

import argparse
import csv
import os
import sys

import numpy as np

from . import siso
from .dbcf import BufferOverflowError, DbcfConfig, dbcf_sweep, run_dbcf
from .iag import DEINTERLEAVE, INTERLEAVE, dump_rows, make_context
from .memsys import BLOCK_DIVISION, MODULO, MemoryMap, simulate_traffic, traffic_from_trace
from .pipeline import DecoderConfig, ber_curve

ENV_PREFIX = "TURBOSIM_"

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_INVARIANT = 2
EXIT_INFEASIBLE = 3

# Published reference rows: (p_llr, m, s, d_fifo, d_buf, reference dC)
TABLE_ROWS = (
    (16, 16, 1, 0, 128, 175),
    (16, 16, 3, 4, 12, 12),
    (16, 32, 3, 3, 4, 3),
    (32, 32, 1, 0, 128, 108),
    (32, 32, 3, 8, 12, 10),
    (32, 64, 3, 4, 7, 4),
)

NWAY_REFERENCE = {16: 93.35, 32: 82.97}


class ConfigError(Exception):
    pass


def parse_config_file(path: str) -> dict:
    """key=value lines; '#' starts a comment; blank lines ignored."""
    out = {}
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            stripped = line.strip()
            if not stripped or stripped.startswith("#"):
                continue
            if "=" not in stripped:
                raise ConfigError(f"{path}:{lineno}: expected key=value, got {stripped!r}")
            key, value = stripped.split("=", 1)
            out[key.strip()] = value.strip()
    return out


def serialize_config(cfg: dict) -> str:
    return "".join(f"{k}={v}\n" for k, v in cfg.items())


def _int_list(text: str) -> list[int]:
    return [int(x) for x in str(text).split(",") if x != ""]


def _float_list(text: str) -> list[float]:
    return [float(x) for x in str(text).split(",") if x != ""]


def _layered_value(args, name: str, default=None):
    """flag > env > config file > default."""
    flag = getattr(args, name.replace("-", "_"), None)
    if flag is not None:
        return flag
    env = os.environ.get(ENV_PREFIX + name.replace("-", "_").upper())
    if env is not None:
        return env
    if args.config_values and name in args.config_values:
        return args.config_values[name]
    return default


def _write_csv(path: str, header, rows):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow(row)


def _standard_context(standard: str, k: int):
    if standard not in ("hspa", "lte"):
        raise ConfigError(f"standard must be hspa or lte, got {standard!r}")
    try:
        return make_context(standard, k)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def _emission(args, standard: str) -> str:
    order = _layered_value(args, "emission", siso.default_emission_order(standard))
    if order not in ("aligned", "xmap2win", "xmap_cross"):
        raise ConfigError(f"unknown emission order {order!r}")
    return order


def cmd_tables(args) -> int:
    """Re-run the buffer parameter-determination rows next to the
    published reference values."""
    k = int(_layered_value(args, "k", 5114))
    seed = int(_layered_value(args, "seed", 1))
    out = _layered_value(args, "out", "tables.csv")
    ctx = _standard_context("hspa", k)
    order = _emission(args, "hspa")
    rows = []
    worst_exit = EXIT_OK
    for p_llr, m, s, d_fifo, d_buf, ref in TABLE_ROWS:
        trace = siso.emission_trace(k, p_llr // 4, order)
        direction = INTERLEAVE
        mmap = MemoryMap(k, m, BLOCK_DIVISION)
        cfg = DbcfConfig(p_llr, m, s, d_fifo, d_buf, prn_seed=seed, allow_stall=True)
        st = run_dbcf(trace, lambda pos: ctx.address(pos, direction), mmap, cfg)
        rows.append(
            (p_llr, m, s, d_fifo, d_buf, st.c0, st.c1, st.delta_c, ref,
             st.max_fifo, st.max_cbuf, st.bypass, st.stall_cycles, seed)
        )
    _write_csv(
        out,
        ["p_llr", "m", "s", "d_fifo", "d_buf", "c0", "c1", "dc", "ref_dc",
         "max_fifo", "max_cbuf", "bypass", "stalls", "seed"],
        rows,
    )
    for row in rows:
        print(f"P_LLR={row[0]} M={row[1]} S={row[2]} D_FIFO={row[3]} D_buf={row[4]}: "
              f"C0={row[5]} C1={row[6]} dC={row[7]} (reference {row[8]})")
    return worst_exit


def cmd_mcr(args) -> int:
    standard = _layered_value(args, "standard", "hspa")
    k_list = _int_list(_layered_value(args, "k", "512,1024,2048,5114"))
    pllr_list = _int_list(_layered_value(args, "p-llr", "1,2,4,8,16,32,64"))
    policy = {"div": BLOCK_DIVISION, "mod": MODULO}[_layered_value(args, "policy", "div")]
    out = _layered_value(args, "out", "mcr.csv")
    order = _emission(args, standard)
    rows = []
    for std, k, pllr, m, pol, mcr in _generic_mcr(standard, k_list, pllr_list, policy, order):
        rows.append((std, k, pllr, m, pol, f"{mcr:.6f}"))
    _write_csv(out, ["standard", "k", "p_llr", "m", "policy", "mcr"], rows)
    print(f"wrote {out} ({len(rows)} rows)")
    return EXIT_OK


def _generic_mcr(standard, k_list, pllr_list, policy, order):
    for k in k_list:
        ctx = _standard_context(standard, k)
        for pllr in pllr_list:
            trace = siso.lane_trace(k, pllr, order)
            mmap = MemoryMap(k, pllr, policy)
            stats = simulate_traffic(traffic_from_trace(trace, ctx, INTERLEAVE), mmap)
            yield standard, k, pllr, pllr, policy, stats.mcr


def cmd_nway(args) -> int:
    standard = _layered_value(args, "standard", "hspa")
    k = int(_layered_value(args, "k", 5114))
    pllr_list = _int_list(_layered_value(args, "p-llr", "16,32"))
    out = _layered_value(args, "out", "nway.csv")
    order = _emission(args, standard)
    ctx = _standard_context(standard, k)
    rows = []
    for pllr in pllr_list:
        trace = siso.lane_trace(k, pllr, order)
        mmap = MemoryMap(k, pllr, BLOCK_DIVISION)
        stats = simulate_traffic(traffic_from_trace(trace, ctx, INTERLEAVE), mmap)
        total = stats.n_conflicts
        for n in sorted(stats.nway_counts):
            rows.append((pllr, n, stats.nway_counts[n], f"{stats.nway_percent(n):.4f}"))
        share = stats.share_2_to_4()
        ref = NWAY_REFERENCE.get(pllr)
        ref_text = f" (reference {ref})" if ref is not None else ""
        print(f"P_LLR={pllr}: {total} conflicts, 2-4-way share {share:.2f}%{ref_text}")
    _write_csv(out, ["p_llr", "n", "count", "percent"], rows)
    return EXIT_OK


def cmd_dbcf_sweep(args) -> int:
    standard = _layered_value(args, "standard", "hspa")
    k = int(_layered_value(args, "k", 5114))
    p_llr = int(_layered_value(args, "p-llr", 32))
    m_list = _int_list(_layered_value(args, "m", str(p_llr)))
    s_list = _int_list(_layered_value(args, "s", "1,2,3,4"))
    fifo_list = _int_list(_layered_value(args, "d-fifo", "0,2,4,8"))
    buf_list = _int_list(_layered_value(args, "d-buf", "4,8,12,16"))
    seed = int(_layered_value(args, "seed", 1))
    out = _layered_value(args, "out", "dbcf_sweep.csv")
    order = _emission(args, standard)

    ctx = _standard_context(standard, k)
    trace = siso.lane_trace(k, p_llr, order)
    grid = [
        (p_llr, m, s, df, db, seed)
        for m in m_list for s in s_list for df in fifo_list for db in buf_list
    ]
    rows = list(dbcf_sweep(grid, trace, lambda pos: ctx.address(pos, INTERLEAVE), k))
    _write_csv(
        out,
        ["p_llr", "m", "s", "d_fifo", "d_buf", "c0", "c1", "dc",
         "max_fifo", "max_cbuf", "bypass", "seed", "stalls", "feasible"],
        rows,
    )
    infeasible = sum(1 for r in rows if not r[13])
    print(f"wrote {out} ({len(rows)} configs, {infeasible} infeasible)")
    return EXIT_OK


def cmd_ber(args) -> int:
    standard = _layered_value(args, "standard", "hspa")
    k = int(_layered_value(args, "k", 5114))
    p = int(_layered_value(args, "p", 8))
    ebn0 = _float_list(_layered_value(args, "ebn0", "0.0,0.5,1.0"))
    frames = int(_layered_value(args, "frames", 100))
    seed = int(_layered_value(args, "seed", 1))
    fixed = str(_layered_value(args, "fixed-point", "on")) not in ("off", "0", "false")
    out = _layered_value(args, "out", "ber.csv")
    if frames < 1:
        raise ConfigError("frames must be >= 1")
    cfg = DecoderConfig(standard=standard, k=k, p=p, fixed_point=fixed)
    rows = ber_curve(cfg, ebn0, frames, seed)
    _write_csv(
        out,
        ["ebn0_db", "frames", "bit_errors", "ber", "fer"],
        [(e, f, b, f"{ber:.8e}", f"{fer:.6f}") for e, f, b, ber, fer in rows],
    )
    for e, f, b, ber, fer in rows:
        print(f"Eb/N0={e:+.2f} dB: BER={ber:.3e} FER={fer:.3f} ({b} bit errors / {f} frames)")
    return EXIT_OK


def cmd_schedule(args) -> int:
    """Decode one random codeword under both schedules and emit sched.csv."""
    from . import codec
    from .pipeline import DecoderConfig, compare_schedules, schedule_csv_rows

    standard = _layered_value(args, "standard", "hspa")
    k = int(_layered_value(args, "k", 1024))
    p = int(_layered_value(args, "p", 4))
    ebn0 = float(_float_list(_layered_value(args, "ebn0", "1.0"))[0])
    seed = int(_layered_value(args, "seed", 1))
    out = _layered_value(args, "out", "sched.csv")
    ctx = _standard_context(standard, k)

    dbcf_cfg = None
    s = _layered_value(args, "s")
    if s is not None:
        dbcf_cfg = DbcfConfig(
            p_llr=4 * p,
            m=int(_layered_value(args, "m", 4 * p)),
            s=int(s),
            d_fifo=int(_layered_value(args, "d-fifo", 0)),
            d_buf=int(_layered_value(args, "d-buf", 1)),
            prn_seed=seed,
        )

    gen = codec.frame_generator(seed, 0)
    bits = (gen.random(k) < 0.5).astype(np.int64)
    enc = codec.encode(codec.CodeBlock(bits), ctx)
    block = codec.awgn_modulate(enc, ebn0, codec.mother_code_rate(k), seed=seed, frame=0)
    cfg = DecoderConfig(standard=standard, k=k, p=p, dbcf=dbcf_cfg)
    try:
        bal, unb, summary = compare_schedules(block, cfg, truth=bits)
    except BufferOverflowError as exc:
        print(f"infeasible buffer config: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    _write_csv(
        out,
        ["half_index", "schedule", "cycles", "read_conflicts", "write_conflicts"],
        schedule_csv_rows(bal, unb),
    )
    for key, value in summary.items():
        print(f"{key}={value}")
    return EXIT_OK


def cmd_dump_interleaver(args) -> int:
    standard = _layered_value(args, "standard", "lte")
    k = int(_layered_value(args, "k", 40))
    direction = _layered_value(args, "direction", "interleave")
    if direction not in (INTERLEAVE, DEINTERLEAVE):
        raise ConfigError(f"direction must be interleave or deinterleave, got {direction!r}")
    out = _layered_value(args, "out", "interleaver.csv")
    ctx = _standard_context(standard, k)
    rows = list(dump_rows(ctx, direction))
    mapped = sorted(addr for _, addr in rows)
    if mapped != list(range(k)):
        print("interleaver dump is not a bijection", file=sys.stderr)
        return EXIT_INVARIANT
    _write_csv(out, ["x", "pi_x"], rows)
    print(f"wrote {out} ({k} rows)")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="turbosim",
        description="Parallel turbo decoder interleaver and memory-conflict studies",
    )
    parser.add_argument("--config", help="key=value config file")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, func, doc):
        p = sub.add_parser(name, help=doc)
        p.set_defaults(func=func)
        p.add_argument("--standard", choices=["hspa", "lte"])
        p.add_argument("--k")
        p.add_argument("--p", type=int)
        p.add_argument("--p-llr", dest="p_llr")
        p.add_argument("--m")
        p.add_argument("--s")
        p.add_argument("--d-fifo", dest="d_fifo")
        p.add_argument("--d-buf", dest="d_buf")
        p.add_argument("--policy", choices=["div", "mod"])
        p.add_argument("--schedule", choices=["balanced", "unbalanced"])
        p.add_argument("--emission", choices=["aligned", "xmap2win", "xmap_cross"])
        p.add_argument("--direction", choices=["interleave", "deinterleave"])
        p.add_argument("--ebn0")
        p.add_argument("--frames", type=int)
        p.add_argument("--fixed-point", dest="fixed_point")
        p.add_argument("--seed", type=int)
        p.add_argument("--out")
        return p

    add("tables", cmd_tables, "re-run the buffer parameter determination rows")
    add("mcr", cmd_mcr, "memory conflict ratio over block sizes and parallelism")
    add("nway", cmd_nway, "n-way conflict histogram")
    add("dbcf-sweep", cmd_dbcf_sweep, "buffer design-space sweep")
    add("ber", cmd_ber, "Monte-Carlo bit error rate")
    add("schedule", cmd_schedule, "balanced vs unbalanced scheduling comparison")
    add("dump-interleaver", cmd_dump_interleaver, "dump a full permutation table as CSV")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        args.config_values = parse_config_file(args.config) if args.config else {}
    except (OSError, ConfigError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ValueError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except BufferOverflowError as exc:
        print(f"infeasible buffer config: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except AssertionError as exc:
        print(f"invariant violation: {exc}", file=sys.stderr)
        return EXIT_INVARIANT


if __name__ == "__main__":
    sys.exit(main())
