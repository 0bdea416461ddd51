"""Command-line entry point: ``pqrng plan|run|analyze|bench``.

Exit codes: 0 success, 2 configuration error, 3 statistical or
performance acceptance failure, 4 I/O error.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from fractions import Fraction
from pathlib import Path

from . import prng
from .config import ConfigError, RunConfig, load_config
from .entropy_model import EntropyBudgetError, cumulative_reported_gbps, format_gbps
from .source_sim import RawFormatError

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_STAT = 3
EXIT_IO = 4

# performance floor checked by ``bench``
MIN_KERNEL_BITS_PER_S = 100e6
MIN_SPEEDUP = 5.0


def _channel_list(text: str) -> list[int]:
    try:
        return [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated channel ids, got {text!r}") from None


def _seed(text: str) -> int:
    try:
        return prng.parse_seed(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", metavar="PATH", help="TOML run config (default: bundled sample)")
    p.add_argument("--channels", type=_channel_list, metavar="LIST", help="comma-separated channel ids")
    scale = p.add_mutually_exclusive_group()
    scale.add_argument("--desk-scale", dest="scale", action="store_const", const="desk", help="desk-scale sizes (default)")
    scale.add_argument("--paper-scale", dest="scale", action="store_const", const="paper", help="full-scale sizes")
    p.set_defaults(scale="desk")
    p.add_argument("--seed", type=_seed, metavar="HEX", help="override the run seed")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pqrng", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("plan", help="print extractor sizes and rates")
    _common(p)
    p.add_argument("--json", action="store_true", help="emit JSON instead of a table")

    p = sub.add_parser("run", help="simulate, extract and write outputs")
    _common(p)
    p.add_argument("--out", required=True, metavar="DIR")
    p.add_argument("--format", choices=("bin", "ascii"), default="bin")
    p.add_argument("--samples", type=int, metavar="N", help="override samples per channel")
    p.add_argument("--no-raw", action="store_true", help="skip writing raw sample files")
    p.add_argument("--sequential", action="store_true", help="run channels one after another")

    p = sub.add_parser("analyze", help="statistical reports for run outputs or bit files")
    _common(p)
    p.add_argument("inputs", nargs="+", metavar="PATH", help="run directory, bit files (.bin/.txt) or .qraw files")
    p.add_argument("--out", required=True, metavar="DIR")
    p.add_argument("--self", dest="include_self", action="store_true", help="also compare each stream with itself")
    p.add_argument("--max-lag", type=int)
    p.add_argument("--corr-bits", type=int)
    p.add_argument("--sts-block-len", type=int)
    p.add_argument("--sts-blocks", type=int)

    p = sub.add_parser("bench", help="extractor throughput")
    _common(p)
    p.add_argument("--out", metavar="DIR", help="also write bench.json here")
    p.add_argument("--input-bits", type=int, default=10**8)
    p.add_argument("--naive-bits", type=int, default=2 * 10**6)
    p.add_argument("--runs", type=int, default=3)
    p.add_argument("--e2e-samples", type=int, default=10**6, help="samples per channel for the end-to-end timing (0 skips)")
    p.add_argument("--no-scaling", action="store_true")
    return parser


def _load(args) -> RunConfig:
    cfg = load_config(args.config, args.scale, args.seed)
    if args.channels:
        cfg = cfg.select(args.channels)
    return cfg


# commands


def cmd_plan(cfg: RunConfig, as_json: bool = False, out=None) -> int:
    out = out or sys.stdout
    from .pipeline import plan_run

    plans = plan_run(cfg)
    rates = [cp.rate for cp in plans]
    exact_total = sum(rates, Fraction(0))
    if as_json:
        doc = {
            "epsilon_log2": cfg.resolved()["epsilon_log2"],
            "k_sigma": cfg.k_sigma,
            "channels": [cp.row() for cp in plans],
            "cumulative_gbps_reported": cumulative_reported_gbps(rates),
            "cumulative_gbps_exact": float(exact_total) / 1e9,
        }
        print(json.dumps(doc, indent=2), file=out)
        return EXIT_OK
    print(
        f"epsilon = 2^{cfg.resolved()['epsilon_log2']:g}, k_sigma = {cfg.k_sigma:g}, block = {cfg.block_bits} bits",
        file=out,
    )
    head = f"{'ch':>3} {'f_c MHz':>8} {'R':>7} {'h_min':>7} {'model':>8} {'n_in':>5} {'n_out':>6} {'ratio':>7} {'Gbps':>6} {'exact':>8}"
    print(head, file=out)
    for cp in plans:
        r = cp.row()
        print(
            f"{r['channel']:>3} {r['center_freq_mhz']:>8g} {r['range_r']:>7.3f} {r['h_min']:>7.3f} "
            f"{r['model_h_min']:>8.4f} {r['n_in']:>5} {r['n_out']:>6} {r['ratio']:>7.1%} "
            f"{r['rate_gbps_rounded']:>6} {r['rate_gbps']:>8.4f}",
            file=out,
        )
    print(
        f"cumulative: {cumulative_reported_gbps(rates)} Gbps (sum of rounded rates; exact {float(exact_total) / 1e9:.3f})",
        file=out,
    )
    return EXIT_OK


def cmd_run(cfg: RunConfig, out_dir: str, fmt: str = "bin", keep_raw: bool = True, concurrent: bool = True, out=None) -> int:
    out = out or sys.stdout
    from .pipeline import run_pipeline

    res = run_pipeline(cfg, out_dir, fmt, concurrent=concurrent, keep_raw=keep_raw)
    for r in res.channels:
        print(
            f"ch{r.channel_id}: {r.samples} samples, {r.off_scale} off-scale, {r.blocks} blocks -> "
            f"{r.output.n_bits} bits ({r.samples * r.plan.n_bits / r.seconds / 1e6:.1f} Mbit/s in)",
            file=out,
        )
    print(f"cumulative: {res.cumulative.n_bits} bits; outputs in {res.out_dir}", file=out)
    return EXIT_OK


def cmd_analyze(cfg: RunConfig, paths: list[str], out_dir: str, include_self: bool = False, overrides=None, out=None) -> int:
    out = out or sys.stdout
    from .reporting import AnalysisSettings, analyze, load_inputs

    settings = AnalysisSettings(
        max_lag=cfg.max_lag,
        corr_bits=cfg.corr_bits,
        sts_block_len=cfg.sts_block_len,
        sts_n_blocks=cfg.sts_n_blocks,
        alpha=cfg.alpha,
        include_self=include_self,
    )
    if overrides:
        settings = replace(settings, **{k: v for k, v in overrides.items() if v is not None})
    inputs, raws = load_inputs(paths)
    res = analyze(inputs, raws, out_dir, settings)
    for c in res.correlations:
        print(c.summary(), file=out)
    for name, rep in res.sts.items():
        print(f"\n{name}:\n{rep.table()}", file=out)
    for name, h in res.byte_histograms.items():
        print(f"{name}: byte chi-square p = {h['p_value']:.4f}", file=out)
    for name, r in res.raw.items():
        hm = r["empirical_min_entropy"]
        print(f"{name}: {r['samples']} samples, {r['off_scale']} off-scale, empirical min-entropy "
              f"{'n/a' if hm is None else f'{hm:.3f} bits'}", file=out)
    for note in res.notes:
        print(f"note: {note}", file=out)
    if not res.passed:
        print("FAILED: " + "; ".join(res.failures), file=out)
        return EXIT_STAT
    print("all statistical checks passed", file=out)
    return EXIT_OK


def cmd_bench(cfg: RunConfig, args, out=None) -> int:
    out = out or sys.stdout
    from .bench import run_bench

    rep = run_bench(
        cfg,
        input_bits=args.input_bits,
        naive_bits=args.naive_bits,
        runs=args.runs,
        end_to_end_samples=args.e2e_samples,
        with_scaling=not args.no_scaling,
    )
    print(rep.table(), file=out)
    if args.out:
        Path(args.out).mkdir(parents=True, exist_ok=True)
        (Path(args.out) / "bench.json").write_text(rep.to_json() + "\n")
    slow = [k for k, t in rep.kernel.items() if t.bits_per_s < MIN_KERNEL_BITS_PER_S or rep.speedup(k) < MIN_SPEEDUP]
    if slow:
        print(f"below performance floor on channel(s) {slow}", file=out)
        return EXIT_STAT
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = _load(args)
        if args.command == "plan":
            return cmd_plan(cfg, args.json)
        if args.command == "run":
            if args.samples is not None:
                cfg = replace(cfg, n_samples=args.samples)
            return cmd_run(cfg, args.out, args.format, not args.no_raw, not args.sequential)
        if args.command == "analyze":
            overrides = {
                "max_lag": args.max_lag,
                "corr_bits": args.corr_bits,
                "sts_block_len": args.sts_block_len,
                "sts_n_blocks": args.sts_blocks,
            }
            return cmd_analyze(cfg, args.inputs, args.out, args.include_self, overrides)
        if args.command == "bench":
            return cmd_bench(cfg, args)
    except (ConfigError, EntropyBudgetError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except RawFormatError as exc:
        print(f"format error: {exc}", file=sys.stderr)
        return EXIT_IO
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ValueError as exc:
        # insufficient data and malformed bit files surface here
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
