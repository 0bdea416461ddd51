"""Run-level analysis: loads channel outputs and writes every report and figure artifact."""

from __future__ import annotations

import itertools
import json
import os
from dataclasses import dataclass, field
from pathlib import Path

from .analysis import (
    TestReport,
    bitmap,
    byte_histogram,
    code_histogram,
    correlation_report,
    empirical_min_entropy,
    nist_subset,
    xor_bitmap,
)
from .analysis.independence import CorrelationReport
from .bitstream import BitStream
from .source_sim import read_raw

__all__ = ["Input", "AnalysisSettings", "AnalysisResult", "load_inputs", "analyze"]


@dataclass
class Input:
    name: str
    path: Path
    stream: BitStream


@dataclass(frozen=True)
class AnalysisSettings:
    max_lag: int = 100
    corr_bits: int = 10_000_000
    sts_block_len: int = 100_000
    sts_n_blocks: int = 100
    alpha: float = 0.01
    bitmap_size: int = 64
    include_self: bool = False


@dataclass
class AnalysisResult:
    correlations: list[CorrelationReport] = field(default_factory=list)
    sts: dict[str, TestReport] = field(default_factory=dict)
    byte_histograms: dict[str, dict] = field(default_factory=dict)
    raw: dict[str, dict] = field(default_factory=dict)
    notes: list[str] = field(default_factory=list)

    @property
    def failures(self) -> list[str]:
        out = []
        for c in self.correlations:
            if not c.expected_dependent and not c.independent:
                out.append(f"correlation {c.pair[0]}/{c.pair[1]}")
        for name, rep in self.sts.items():
            out.extend(f"sts {name}: {r.name}" for r in rep.results if not r.passed)
        return out

    @property
    def passed(self) -> bool:
        return not self.failures

    def to_dict(self) -> dict:
        return {
            "passed": self.passed,
            "failures": self.failures,
            "correlations": [c.to_dict() for c in self.correlations],
            "sts": {k: v.to_dict() for k, v in self.sts.items()},
            "byte_histograms": self.byte_histograms,
            "raw": self.raw,
            "notes": self.notes,
        }


def _stream_from_file(path: Path, n_bits: int | None) -> BitStream:
    fmt = "ascii" if path.suffix == ".txt" else "bin"
    return BitStream.read(path, fmt, n_bits)


def load_inputs(paths: list[str | os.PathLike]) -> tuple[list[Input], list[Path]]:
    """Resolve bit files and run directories into named streams, plus any raw sample files.

    A run directory contributes each channel listed in its manifest, with the
    exact bit counts recorded there. Loose ``.bin`` files are read whole.
    """
    inputs, raws = [], []
    for p in map(Path, paths):
        if p.is_dir():
            manifest = p / "manifest.json"
            if not manifest.exists():
                raise FileNotFoundError(f"{p}: no manifest.json in run directory")
            with open(manifest) as fh:
                m = json.load(fh)
            ext = "bin" if m["output_format"] == "bin" else "txt"
            for cid, counters in sorted(m["channels"].items(), key=lambda kv: int(kv[0])):
                f = p / f"ch{cid}.{ext}"
                inputs.append(Input(f"ch{cid}", f, _stream_from_file(f, counters["bits_out"])))
                raw = p / f"ch{cid}.qraw"
                if raw.exists():
                    raws.append(raw)
        elif p.suffix == ".qraw":
            raws.append(p)
        else:
            inputs.append(Input(p.stem, p, _stream_from_file(p, None)))
    return inputs, raws


def analyze(inputs: list[Input], raws: list[Path], out_dir: str | os.PathLike, settings: AnalysisSettings) -> AnalysisResult:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    res = AnalysisResult()
    s = settings
    side = s.bitmap_size

    # independence over every pair, plus self pairs on request
    if inputs:
        n = min(min(i.stream.n_bits for i in inputs), s.corr_bits)
        if n < s.corr_bits:
            res.notes.append(f"correlation used {n} bits per stream (requested {s.corr_bits})")
        pairs = list(itertools.combinations(inputs, 2))
        if s.include_self:
            pairs += [(i, i) for i in inputs]
        for a, b in pairs:
            same = a.path.resolve() == b.path.resolve()
            rep = correlation_report(
                a.stream.slice(0, n), b.stream.slice(0, n), s.max_lag, (a.name, b.name), expected_dependent=same
            )
            if same:
                rep.notes.append("stream compared with itself; dependence is expected")
            res.correlations.append(rep)
            (out / f"corr_{a.name}_{b.name}.json").write_text(rep.to_json() + "\n")

    for i in inputs:
        need = s.sts_block_len * s.sts_n_blocks
        if i.stream.n_bits < need:
            raise ValueError(f"{i.path}: STS needs {need} bits ({s.sts_n_blocks} x {s.sts_block_len}), file holds {i.stream.n_bits}")
        rep = nist_subset(i.stream, s.sts_block_len, s.sts_n_blocks, s.alpha)
        res.sts[i.name] = rep
        (out / f"sts_{i.name}.json").write_text(rep.to_json() + "\n")

        h = byte_histogram(i.stream)
        h.write_csv(out / f"hist_bytes_{i.name}.csv")
        res.byte_histograms[i.name] = {"chi2": h.chi2, "p_value": h.p_value, "bytes": h.total}
        bitmap(i.stream, side, side).write(out / f"bitmap_{i.name}.pbm")

    for a, b in itertools.combinations(inputs, 2):
        x = xor_bitmap(bitmap(a.stream, side, side), bitmap(b.stream, side, side))
        x.write(out / f"xor_{a.name}_{b.name}.pbm")

    for path in raws:
        blk = read_raw(path)
        h = code_histogram(blk)
        name = path.stem
        h.write_csv(out / f"hist_codes_{name}.csv")
        res.raw[name] = {
            "samples": len(blk),
            "off_scale": blk.off_scale_count,
            "empirical_min_entropy": empirical_min_entropy(blk) if len(blk) >= 100_000 else None,
        }

    (out / "analysis.json").write_text(json.dumps(res.to_dict(), indent=2) + "\n")
    return res
