import csv
import os

import pytest

from turbosim import cli


def run_cli(args, tmp_path, monkeypatch=None):
    cwd = os.getcwd()
    os.chdir(tmp_path)
    try:
        return cli.main(args)
    finally:
        os.chdir(cwd)


def read_csv(path):
    with open(path) as fh:
        return list(csv.reader(fh))


def test_dump_interleaver_qpp_40(tmp_path):
    out = tmp_path / "dump.csv"
    rc = cli.main(["dump-interleaver", "--standard", "lte", "--k", "40", "--out", str(out)])
    assert rc == 0
    rows = read_csv(out)
    assert rows[0] == ["x", "pi_x"]
    assert rows[1] == ["0", "0"]
    assert rows[2] == ["1", "13"]
    assert rows[3] == ["2", "6"]
    assert len(rows) == 41


def test_dump_interleaver_hspa_roundtrip(tmp_path):
    out_i = tmp_path / "int.csv"
    out_d = tmp_path / "deint.csv"
    assert cli.main(["dump-interleaver", "--standard", "hspa", "--k", "160", "--out", str(out_i)]) == 0
    assert cli.main([
        "dump-interleaver", "--standard", "hspa", "--k", "160",
        "--direction", "deinterleave", "--out", str(out_d),
    ]) == 0
    fwd = {int(x): int(y) for x, y in read_csv(out_i)[1:]}
    bwd = {int(x): int(y) for x, y in read_csv(out_d)[1:]}
    assert all(bwd[fwd[x]] == x for x in fwd)


def test_illegal_k_gives_config_error(tmp_path):
    rc = cli.main(["dump-interleaver", "--standard", "lte", "--k", "41", "--out", str(tmp_path / "x.csv")])
    assert rc == cli.EXIT_CONFIG


def test_seeded_outputs_byte_identical(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    args = ["tables", "--k", "5114", "--seed", "7"]
    assert cli.main(args + ["--out", str(a)]) == 0
    assert cli.main(args + ["--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()


def test_tables_c0_exact(tmp_path):
    out = tmp_path / "tables.csv"
    assert cli.main(["tables", "--out", str(out), "--seed", "2"]) == 0
    rows = read_csv(out)
    assert len(rows) == 7  # header + six rows
    header = rows[0]
    c0_idx = header.index("c0")
    p_idx = header.index("p_llr")
    for row in rows[1:]:
        expect = {16: 320, 32: 160}[int(row[p_idx])]
        assert int(row[c0_idx]) == expect


def test_mcr_single_lane_all_zero(tmp_path):
    out = tmp_path / "mcr.csv"
    assert cli.main([
        "mcr", "--standard", "hspa", "--k", "512,1024", "--p-llr", "1", "--out", str(out)
    ]) == 0
    rows = read_csv(out)
    assert all(float(r[-1]) == 0.0 for r in rows[1:])


def test_nway_csv(tmp_path):
    out = tmp_path / "nway.csv"
    assert cli.main(["nway", "--k", "5114", "--p-llr", "16,32", "--out", str(out)]) == 0
    rows = read_csv(out)
    assert rows[0] == ["p_llr", "n", "count", "percent"]
    by_p = {}
    for p_llr, n, count, pct in rows[1:]:
        by_p.setdefault(int(p_llr), 0.0)
        by_p[int(p_llr)] += float(pct)
    for total in by_p.values():
        assert abs(total - 100.0) < 0.01  # histogram covers all conflicts


def test_dbcf_sweep_csv(tmp_path):
    out = tmp_path / "sweep.csv"
    assert cli.main([
        "dbcf-sweep", "--k", "2048", "--p-llr", "16", "--m", "16",
        "--s", "2,3", "--d-fifo", "4", "--d-buf", "8,12", "--out", str(out),
    ]) == 0
    rows = read_csv(out)
    assert rows[0][:5] == ["p_llr", "m", "s", "d_fifo", "d_buf"]
    assert len(rows) == 1 + 4


def test_ber_csv(tmp_path):
    out = tmp_path / "ber.csv"
    assert cli.main([
        "ber", "--standard", "lte", "--k", "320", "--p", "2",
        "--ebn0", "8.0", "--frames", "10", "--seed", "3", "--out", str(out),
    ]) == 0
    rows = read_csv(out)
    assert rows[0] == ["ebn0_db", "frames", "bit_errors", "ber", "fer"]
    assert float(rows[1][3]) == 0.0


def test_schedule_csv(tmp_path):
    out = tmp_path / "sched.csv"
    rc = cli.main([
        "schedule", "--standard", "hspa", "--k", "640", "--p", "2",
        "--ebn0", "1.5", "--seed", "4", "--out", str(out),
    ])
    assert rc == 0
    rows = read_csv(out)
    assert rows[0] == ["half_index", "schedule", "cycles", "read_conflicts", "write_conflicts"]
    assert len(rows) == 1 + 22  # 11 halves per schedule
    balanced = [r for r in rows[1:] if r[1] == "balanced"]
    assert all(int(r[3]) == 0 for r in balanced)


def test_schedule_infeasible_buffer_exit_code(tmp_path):
    rc = cli.main([
        "schedule", "--standard", "hspa", "--k", "640", "--p", "2",
        "--s", "1", "--d-fifo", "0", "--d-buf", "1",
        "--out", str(tmp_path / "s.csv"),
    ])
    assert rc == cli.EXIT_INFEASIBLE


def test_config_file_layering(tmp_path):
    conf = tmp_path / "run.conf"
    conf.write_text("# comment line\nstandard=lte\nk=40\nout=%s\n" % (tmp_path / "c.csv"))
    assert cli.main(["--config", str(conf), "dump-interleaver"]) == 0
    rows = read_csv(tmp_path / "c.csv")
    assert rows[1] == ["0", "0"]


def test_flag_overrides_config(tmp_path):
    conf = tmp_path / "run.conf"
    conf.write_text("standard=lte\nk=40\n")
    out = tmp_path / "d.csv"
    assert cli.main(["--config", str(conf), "dump-interleaver", "--k", "48", "--out", str(out)]) == 0
    assert len(read_csv(out)) == 49


def test_env_override(tmp_path, monkeypatch):
    out = tmp_path / "e.csv"
    monkeypatch.setenv("TURBOSIM_K", "56")
    assert cli.main(["dump-interleaver", "--standard", "lte", "--out", str(out)]) == 0
    assert len(read_csv(out)) == 57


def test_config_round_trip(tmp_path):
    text = "standard=hspa\nk=5114\nseed=9\n"
    conf = tmp_path / "r.conf"
    conf.write_text("# header comment\n" + text)
    parsed = cli.parse_config_file(str(conf))
    assert cli.serialize_config(parsed) == text


def test_malformed_config_rejected(tmp_path):
    conf = tmp_path / "bad.conf"
    conf.write_text("this is not a key value pair\n")
    assert cli.main(["--config", str(conf), "mcr"]) == cli.EXIT_CONFIG
