import json
import math
from pathlib import Path

import numpy as np
import pytest
from scipy.stats import kstest

from pqrng.analysis import sts
from pqrng.analysis.sts import (
    LONGEST_RUN_TABLES,
    STSParams,
    TEST_NAMES,
    approximate_entropy,
    block_frequency,
    cumulative_sums,
    dft,
    frequency,
    longest_run,
    nist_subset,
    proportion_interval,
    run_block,
    runs,
    serial,
)
from pqrng.bitstream import BitStream

from oracles import dft_statistic, longest_run_categories

PI_100 = (
    "1100100100001111110110101010001000100001011010001100001000110100"
    "110001001100011001100010100010111000"
)
LONGEST_128 = (
    "11001100000101010110110001001100111000000000001001001101010100010001001111010110"
    "100000001101011111001100111001101101100010110010"
)


def b(text: str) -> np.ndarray:
    return np.frombuffer(text.encode(), np.uint8) - ord("0")


# worked examples from the SP 800-22 documentation


def test_frequency_examples():
    assert frequency(b("1011010101")) == pytest.approx(0.527089, abs=1e-6)
    assert frequency(b(PI_100)) == pytest.approx(0.109599, abs=1e-6)


def test_block_frequency_examples():
    assert block_frequency(b("0110011010"), 3) == pytest.approx(0.801252, abs=1e-6)
    assert block_frequency(b(PI_100), 10) == pytest.approx(0.706438, abs=1e-6)


def test_runs_examples():
    assert runs(b("1001101011")) == pytest.approx(0.147232, abs=1e-6)
    assert runs(b(PI_100)) == pytest.approx(0.500798, abs=1e-6)


def test_longest_run_example():
    assert longest_run(b(LONGEST_128)) == pytest.approx(0.180609, abs=1e-6)


def test_cusum_examples():
    fwd, _ = cumulative_sums(b("1011010111"))
    assert fwd == pytest.approx(0.4116588, abs=1e-6)
    fwd, bwd = cumulative_sums(b(PI_100))
    assert fwd == pytest.approx(0.219194, abs=1e-6)
    assert bwd == pytest.approx(0.114866, abs=1e-6)


def test_serial_example():
    p1, p2 = serial(b("0011011101"), 3)
    assert p1 == pytest.approx(0.808792, abs=1e-6)
    assert p2 == pytest.approx(0.670320, abs=1e-6)


def test_apen_examples():
    assert approximate_entropy(b("0100110101"), 3) == pytest.approx(0.261961, abs=1e-6)
    assert approximate_entropy(b(PI_100), 2) == pytest.approx(0.235301, abs=1e-6)


# degenerate inputs


def test_all_ones_fails_monobit():
    assert frequency(np.ones(1000, np.uint8)) < 1e-100


def test_alternating():
    x = np.tile(np.array([0, 1], np.uint8), 500)
    assert frequency(x) == 1.0
    assert runs(x) < 1e-10


# independent oracles


def test_dft_matches_direct_transform():
    rng = np.random.default_rng(4)
    for n in (100, 256, 1001, 2048):
        x = rng.integers(0, 2, n, dtype=np.uint8)
        _, p = dft_statistic(x)
        assert dft(x) == pytest.approx(p, abs=1e-12)


@pytest.mark.parametrize("m, lo, hi", [(8, 1, 4), (128, 4, 9)])
def test_longest_run_tables_exact(m, lo, hi):
    cats, probs = LONGEST_RUN_TABLES[m]
    assert (cats[0], cats[-1]) == (lo, hi)
    assert np.allclose(probs, longest_run_categories(m, lo, hi), atol=1e-9)


def test_longest_run_table_10000_close_to_exact():
    # the suite's published M = 10^4 probabilities are rounded approximations
    cats, probs = LONGEST_RUN_TABLES[10000]
    exact = longest_run_categories(10000, cats[0], cats[-1])
    assert np.allclose(probs, exact, atol=2e-3)
    assert sum(probs) == pytest.approx(1.0, abs=1e-9)


REFERENCE = json.loads((Path(__file__).parent / "data" / "sts_reference.json").read_text())

# the reference implementation carries the M = 128 table to four decimals
ROUNDED_128 = ((4, 5, 6, 7, 8, 9), (0.1174, 0.2430, 0.2493, 0.1752, 0.1027, 0.1124))


@pytest.mark.parametrize("idx", range(len(REFERENCE["blocks"])))
def test_against_reference_implementation(idx, monkeypatch):
    blk = REFERENCE["blocks"][idx]
    bits = np.unpackbits(np.frombuffer(bytes.fromhex(blk["hex"]), np.uint8))[: REFERENCE["block_len"]]
    params = STSParams(**REFERENCE["params"])
    monkeypatch.setitem(sts.LONGEST_RUN_TABLES, 128, ROUNDED_128)
    got = run_block(bits, params)
    for name in TEST_NAMES:
        assert got[name] == pytest.approx(blk["p"][name], abs=1e-4), name


# distribution under the null


@pytest.mark.slow
def test_p_values_uniform_on_random_input():
    rng = np.random.default_rng(20240901)
    n_blocks, n = 500, 20000
    data = rng.integers(0, 2, n_blocks * n, dtype=np.uint8).reshape(n_blocks, n)
    rows = [run_block(x) for x in data]
    for name in TEST_NAMES:
        ps = np.array([r[name] for r in rows])
        assert np.all((ps >= 0) & (ps <= 1))
        assert kstest(ps, "uniform").pvalue >= 0.001, name


# pass proportion


def test_interval_values():
    lo, hi = proportion_interval(0.01, 1000)
    assert round((hi - lo) / 2, 5) == 0.00944
    assert (lo + hi) / 2 == pytest.approx(0.99)
    lo, hi = proportion_interval(0.01, 100)
    assert round((hi - lo) / 2, 5) == 0.02985


def test_interval_shrinks():
    widths = [np.subtract(*proportion_interval(0.01, n)[::-1]) for n in (10, 1000, 10**8)]
    assert widths[0] > widths[1] > widths[2]
    assert widths[2] < 1e-4


@pytest.mark.parametrize("alpha, n", [(0.0, 10), (1.0, 10), (0.01, 0)])
def test_interval_preconditions(alpha, n):
    with pytest.raises(ValueError):
        proportion_interval(alpha, n)


def test_nist_subset_report():
    rng = np.random.default_rng(77)
    bits = BitStream.from_bits(rng.integers(0, 2, 20 * 2000))
    rep = nist_subset(bits, 2000, 20)
    assert [r.name for r in rep.results] == list(TEST_NAMES)
    for r in rep.results:
        assert len(r.p_values) == 20
        assert 0 <= r.proportion <= 1
        assert r.pass_count == sum(p >= 0.01 for p in r.p_values)
    doc = json.loads(rep.to_json())
    assert doc["n_blocks"] == 20 and len(doc["interval"]) == 2
    assert "PASS" in rep.table() or "FAIL" in rep.table()


def test_nist_subset_insufficient_data():
    with pytest.raises(ValueError, match="need 1000 bits"):
        nist_subset(np.zeros(999, np.uint8), 100, 10)
    with pytest.raises(ValueError):
        nist_subset(np.zeros(10**4, np.uint8), 99, 10)


def test_biased_input_fails():
    rng = np.random.default_rng(3)
    bits = (rng.random(50 * 1000) < 0.6).astype(np.uint8)
    rep = nist_subset(bits, 1000, 50)
    assert not rep.result("frequency").passed
    assert not rep.all_passed


def test_parameter_choice():
    n = 10**5
    assert int(math.floor(math.log2(n))) - 3 == 13
    x = np.random.default_rng(0).integers(0, 2, n, dtype=np.uint8)
    assert serial(x) == serial(x, 13)
    assert approximate_entropy(x) == approximate_entropy(x, 10)
