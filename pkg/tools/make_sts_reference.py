"""Freeze p-values from an independent SP 800-22 implementation (nistrng).

Run once, offline, with nistrng importable (it is not a package dependency):

    PYTHONPATH=/path/to/nistrng python tools/make_sts_reference.py

Writes tests/data/sts_reference.json with the input blocks (hex) and the
reference p-values. nistrng fixes some parameters itself, so the frozen
parameters are: block frequency M=128, serial m=4, approximate entropy m=2,
block length 6272 bits (longest-run M=128 with exactly 49 blocks).
"""

import json
import pathlib

import numpy as np
from nistrng.sp800_22r1a.test_approximate_entropy import ApproximateEntropyTest
from nistrng.sp800_22r1a.test_cumulative_sums import CumulativeSumsTest
from nistrng.sp800_22r1a.test_discrete_fourier_transform import DiscreteFourierTransformTest
from nistrng.sp800_22r1a.test_frequency_within_block import FrequencyWithinBlockTest
from nistrng.sp800_22r1a.test_longest_run_ones_in_a_block import LongestRunOnesInABlockTest
from nistrng.sp800_22r1a.test_monobit import MonobitTest
from nistrng.sp800_22r1a.test_runs import RunsTest
from nistrng.sp800_22r1a.test_serial import SerialTest

BLOCK_LEN = 6272
N_BLOCKS = 10


def score(test, bits):
    return np.atleast_1d(test._execute(bits.astype(int))._score_list).astype(float).tolist()


def main():
    rng = np.random.Generator(np.random.Philox(20240607))
    blocks = []
    for _ in range(N_BLOCKS):
        bits = rng.integers(0, 2, BLOCK_LEN, dtype=np.uint8)
        bf = FrequencyWithinBlockTest()
        bf._default_block_size = 128
        bf._blocks_number_max = 10**9
        ser = SerialTest()
        ser._pattern_length = 4
        fwd, bwd = score(CumulativeSumsTest(), bits)
        s1, s2 = score(ser, bits)
        blocks.append(
            {
                "hex": np.packbits(bits).tobytes().hex(),
                "p": {
                    "frequency": score(MonobitTest(), bits)[0],
                    "block_frequency": score(bf, bits)[0],
                    "runs": score(RunsTest(), bits)[0],
                    "longest_run": score(LongestRunOnesInABlockTest(), bits)[0],
                    "cumulative_sums_forward": fwd,
                    "cumulative_sums_backward": bwd,
                    "serial_1": s1,
                    "serial_2": s2,
                    "approximate_entropy": score(ApproximateEntropyTest(), bits)[0],
                    "dft": score(DiscreteFourierTransformTest(), bits)[0],
                },
            }
        )
    out = {
        "source": "nistrng 1.2.2",
        "block_len": BLOCK_LEN,
        "params": {"block_frequency_m": 128, "serial_m": 4, "apen_m": 2},
        "blocks": blocks,
    }
    path = pathlib.Path(__file__).resolve().parents[1] / "tests" / "data" / "sts_reference.json"
    path.write_text(json.dumps(out, indent=1))


if __name__ == "__main__":
    main()
