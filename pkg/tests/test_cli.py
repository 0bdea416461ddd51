import io
import json

import numpy as np
import pytest

from pqrng import cli
from pqrng.bitstream import BitStream
from pqrng.config import load_config

SMALL = ["--corr-bits", "100000", "--max-lag", "10", "--sts-block-len", "10000", "--sts-blocks", "20"]


@pytest.fixture(scope="module")
def run_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("run")
    assert cli.main(["run", "--out", str(out), "--samples", "20000"]) == 0
    return out


def test_plan_table():
    buf = io.StringIO()
    assert cli.cmd_plan(load_config(), out=buf) == 0
    text = buf.getvalue()
    lines = text.splitlines()
    rows = [line.split() for line in lines[2:5]]
    assert [r[6] for r in rows] == ["581", "548", "519"]
    assert [r[8] for r in rows] == ["2.91", "2.74", "2.60"]
    assert rows[0][7] == "75.7%"
    assert lines[-1].startswith("cumulative: 8.25 Gbps")


def test_plan_json_single_channel():
    buf = io.StringIO()
    assert cli.cmd_plan(load_config().select([2]), as_json=True, out=buf) == 0
    doc = json.loads(buf.getvalue())
    assert len(doc["channels"]) == 1
    assert doc["cumulative_gbps_reported"] == doc["channels"][0]["rate_gbps_rounded"] == "2.74"


def test_plan_main(capsys):
    assert cli.main(["plan", "--channels", "1,3"]) == 0
    out = capsys.readouterr().out
    assert "581" in out and "519" in out and "548" not in out
    assert "cumulative: 5.51 Gbps" in out


def test_overlapping_bands_exit_code(tmp_path, capsys):
    text = (
        "[run]\nseed = \"1\"\n"
        "[[channel]]\nid = 1\ncenter_freq = 600e6\nsigma_q = 1.0\nsigma_e = 0.1\n"
        "[[channel]]\nid = 2\ncenter_freq = 650e6\nsigma_q = 1.0\nsigma_e = 0.1\n"
    )
    cfg = tmp_path / "c.toml"
    cfg.write_text(text)
    assert cli.main(["plan", "--config", str(cfg)]) == cli.EXIT_CONFIG
    err = capsys.readouterr().err
    assert "center_freq" in err and "overlap" in err


def test_budget_error_exit_code(tmp_path, capsys):
    cfg = tmp_path / "c.toml"
    cfg.write_text(
        "[run]\nseed = \"1\"\n[[channel]]\nid = 1\ncenter_freq = 200e6\nsigma_q = 1.0\nsigma_e = 0.1\nh_min = 15.9\n"
    )
    assert cli.main(["plan", "--config", str(cfg)]) == cli.EXIT_CONFIG
    assert "model" in capsys.readouterr().err


def test_unknown_channel(capsys):
    assert cli.main(["plan", "--channels", "9"]) == cli.EXIT_CONFIG


def test_bad_seed_flag():
    with pytest.raises(SystemExit) as info:
        cli.main(["plan", "--seed", "nothex"])
    assert info.value.code == 2


def test_run_outputs(run_dir):
    man = json.loads((run_dir / "manifest.json").read_text())
    assert man["channels"]["1"]["bits_out"] == 20_000 * 16 // 768 * 581
    assert (run_dir / "cumulative.bin").exists()


def test_run_seed_flag_changes_output(tmp_path, run_dir):
    assert cli.main(["run", "--out", str(tmp_path), "--samples", "20000", "--seed", "abc", "--no-raw"]) == 0
    assert (tmp_path / "ch1.bin").read_bytes() != (run_dir / "ch1.bin").read_bytes()
    assert not (tmp_path / "ch1.qraw").exists()
    assert json.loads((tmp_path / "manifest.json").read_text())["seed"] == f"{0xabc:016x}"


def test_analyze_run_dir(run_dir, tmp_path, capsys):
    code = cli.main(["analyze", str(run_dir), "--out", str(tmp_path)] + SMALL)
    doc = json.loads((tmp_path / "analysis.json").read_text())
    assert code == (cli.EXIT_OK if doc["passed"] else cli.EXIT_STAT)
    assert [tuple(c["pair"]) for c in doc["correlations"]] == [("ch1", "ch2"), ("ch1", "ch3"), ("ch2", "ch3")]
    for name in ("corr_ch1_ch2.json", "sts_ch3.json", "bitmap_ch1.pbm", "xor_ch1_ch3.pbm", "hist_codes_ch2.csv"):
        assert (tmp_path / name).exists()
    assert set(doc["raw"]) == {"ch1", "ch2", "ch3"}
    assert doc["raw"]["ch1"]["empirical_min_entropy"] is None  # under 10^5 samples
    assert "max rho" in capsys.readouterr().out


def test_analyze_self_pair_flagged(run_dir, tmp_path):
    f = str(run_dir / "ch1.bin")
    cli.main(["analyze", f, "--self", "--out", str(tmp_path)] + SMALL)
    doc = json.loads((tmp_path / "analysis.json").read_text())
    (self_pair,) = [c for c in doc["correlations"] if c["pair"] == ["ch1", "ch1"]]
    assert self_pair["expected_dependent"]
    assert self_pair["rho"]["0"] == pytest.approx(1.0)
    assert not any("ch1/ch1" in f for f in doc["failures"])


def test_analyze_biased_input_is_statistical_failure(tmp_path):
    rng = np.random.default_rng(0)
    for name in ("a", "b"):
        BitStream.from_bits(rng.random(300_000) < 0.6).write(tmp_path / f"{name}.bin")
    code = cli.main(["analyze", str(tmp_path / "a.bin"), str(tmp_path / "b.bin"), "--out", str(tmp_path / "o")] + SMALL)
    assert code == cli.EXIT_STAT


def test_analyze_malformed_raw_header(run_dir, tmp_path, capsys):
    bad = tmp_path / "bad.qraw"
    data = bytearray((run_dir / "ch1.qraw").read_bytes())
    data[0:4] = b"NOPE"
    bad.write_bytes(bytes(data))
    assert cli.main(["analyze", str(bad), "--out", str(tmp_path / "o")]) == cli.EXIT_IO
    assert "offset 0" in capsys.readouterr().err


def test_analyze_missing_file(tmp_path):
    assert cli.main(["analyze", str(tmp_path / "nope.bin"), "--out", str(tmp_path)]) == cli.EXIT_IO


def test_analyze_insufficient_data(tmp_path, capsys):
    BitStream.from_bits(np.random.default_rng(1).integers(0, 2, 5000)).write(tmp_path / "a.bin")
    assert cli.main(["analyze", str(tmp_path / "a.bin"), "--out", str(tmp_path / "o"), "--max-lag", "10"]) == cli.EXIT_IO
    assert "STS needs" in capsys.readouterr().err


def test_bench_small(tmp_path, capsys):
    args = ["bench", "--channels", "1", "--input-bits", "2000000", "--naive-bits", "200000", "--runs", "2",
            "--e2e-samples", "0", "--no-scaling", "--out", str(tmp_path)]
    code = cli.main(args)
    doc = json.loads((tmp_path / "bench.json").read_text())
    assert code in (cli.EXIT_OK, cli.EXIT_STAT)
    assert "kernel" in doc and doc["kernel"]["1"]["bits_per_s"] > 0
