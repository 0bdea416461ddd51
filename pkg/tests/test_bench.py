import json

import pytest

from pqrng.bench import BenchReport, Timing, _time_runs, bench_kernel, bench_naive, run_bench, scaling
from pqrng.config import load_config


def test_timing_properties():
    t = Timing("x", 1000, [2.0, 1.0, 1.5])
    assert t.best == 1.0
    assert t.bits_per_s == 1000.0
    assert t.spread == pytest.approx(1.0)
    d = t.to_dict()
    assert d["bits_per_s"] == 1000.0 and d["seconds"] == [2.0, 1.0, 1.5]


def test_time_runs_counts_calls():
    calls = []
    secs = _time_runs(lambda: calls.append(1), runs=3, best_of=4)
    assert len(secs) == 3 and len(calls) == 12
    assert all(s >= 0 for s in secs)


def test_small_kernel_and_naive():
    k = bench_kernel(64, 128, input_bits=128 * 200, runs=2, best_of=2)
    n = bench_naive(64, 128, input_bits=128 * 20, runs=2)
    assert k.input_bits == 128 * 200 and n.input_bits == 128 * 20
    assert len(k.seconds) == 2 and k.bits_per_s > 0 and n.bits_per_s > 0


def test_report_json_and_table():
    rep = BenchReport({1: Timing("chunked k=8 581x768", 100, [1.0])}, {1: Timing("naive 581x768", 10, [1.0])})
    assert rep.speedup(1) == 10.0
    doc = json.loads(rep.to_json())
    assert doc["speedup"]["1"] == 10.0
    assert "581x768" in rep.table()


def test_run_bench_small():
    cfg = load_config().select([2])
    rep = run_bench(cfg, input_bits=768 * 100, naive_bits=768 * 5, runs=2, end_to_end_samples=4800, with_scaling=False)
    assert set(rep.kernel) == {2} and set(rep.end_to_end) == {2}
    assert rep.kernel[2].label.endswith("548x768")
    assert rep.end_to_end[2].input_bits == 4800 * 16


@pytest.mark.slow
def test_kernel_rate_stable_across_runs():
    t = bench_kernel(input_bits=10**8, runs=3)
    assert t.bits_per_s > 0
    assert t.spread <= 0.20


@pytest.mark.slow
def test_kernel_time_scales_linearly():
    sc = scaling(input_bits=5 * 10**7)
    assert sc["large_bits"] == 2 * sc["small_bits"]
    assert sc["time_ratio"] == pytest.approx(2.0, rel=0.25)


@pytest.mark.slow
def test_chunked_beats_naive():
    k = bench_kernel(input_bits=2 * 10**7, runs=1, best_of=5)
    n = bench_naive(input_bits=2 * 10**6, runs=1)
    assert k.bits_per_s >= 5 * n.bits_per_s
