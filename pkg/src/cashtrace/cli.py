"""Batch front end: analyze trace files, generate scenarios, dump trees.

Commands:

* ``analyze``    stream bundles through the pipeline, one report line per
                 finding (jsonl or text), summary on stderr; optional
                 worker pool and figure rendering
* ``simulate``   write a scenario trace file plus its manifest sidecar
* ``lift-dump``  print the lifted tree of one bundle

Every flag can also be supplied through the environment with the
``CASHTRACE_`` prefix (``--tolerance-indirect`` becomes
``CASHTRACE_TOLERANCE_INDIRECT``); explicit flags win.

Exit codes: 0 success, 1 usage error, 2 input error, 3 internal error.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
import time
from concurrent.futures import Future, ProcessPoolExecutor
from fractions import Fraction
from typing import IO, Iterator

from . import model, report, scenarios
from .detect import DetectorConfig
from .lifting import dump_tree
from .pipeline import BundleRejected, analyze_bundle, lifted_tree

logger = logging.getLogger("cashtrace")

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_INPUT = 2
EXIT_INTERNAL = 3

ENV_PREFIX = "CASHTRACE_"


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):  # exit 1 on usage problems, not argparse's 2
        raise UsageError(message)


def _env_default(flag: str) -> str | None:
    return os.environ.get(ENV_PREFIX + flag.upper().replace("-", "_"))


def _add_flag(parser: argparse.ArgumentParser, flag: str, **kwargs) -> None:
    env = _env_default(flag)
    if env is not None:
        kwargs["default"] = env
        kwargs["required"] = False
    parser.add_argument(f"--{flag}", **kwargs)


def build_parser() -> _Parser:
    parser = _Parser(prog="cashtrace", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p_analyze = sub.add_parser("analyze", help="detect manipulation candidates in a trace file")
    _add_flag(p_analyze, "input", required=True, help="trace file path")
    _add_flag(p_analyze, "out", default="-", help="report path, - for stdout")
    _add_flag(p_analyze, "tolerance-amount-eq", default="0", help="reverse pair leg tolerance (fraction)")
    _add_flag(p_analyze, "tolerance-indirect", default="1/100", help="indirect break-even tolerance (fraction)")
    _add_flag(p_analyze, "jobs", default="1", help="parallel workers")
    _add_flag(p_analyze, "format", default="jsonl", choices=("jsonl", "text"), help="report format")
    _add_flag(p_analyze, "figures", default=None, help="directory for summary figures")

    p_sim = sub.add_parser("simulate", help="emit a ground-truth scenario trace")
    _add_flag(p_sim, "kind", required=True, choices=scenarios.KINDS, help="scenario kind")
    _add_flag(p_sim, "seed", default="0", help="rng seed")
    p_sim.add_argument("--params", nargs="*", default=[], metavar="K=V", help="scenario parameter overrides")
    _add_flag(p_sim, "out", required=True, help="trace file path; manifest lands beside it")

    p_dump = sub.add_parser("lift-dump", help="print one bundle's lifted tree")
    _add_flag(p_dump, "input", required=True, help="trace file path")
    _add_flag(p_dump, "bundle-id", required=True, help="bundle to dump")
    return parser


def _parse_fraction(text: str, flag: str) -> Fraction:
    try:
        value = Fraction(text)
    except (ValueError, ZeroDivisionError):
        raise UsageError(f"--{flag} expects a fraction like 0, 0.01 or 1/100, got {text!r}")
    if not 0 <= value < 1:
        raise UsageError(f"--{flag} must be in [0, 1)")
    return value


def _parse_params(items: list[str]) -> dict:
    params: dict = {}
    for item in items:
        for piece in item.split(","):
            if not piece:
                continue
            if "=" not in piece:
                raise UsageError(f"--params entries are K=V, got {piece!r}")
            key, value = piece.split("=", 1)
            try:
                params[key] = int(value)
            except ValueError:
                params[key] = value
    return params


def _bundle_blocks(handle: IO[str]) -> Iterator[list[str]]:
    """Group raw lines per bundle without parsing them."""
    block: list[str] = []
    for line in handle:
        stripped = line.strip()
        if not stripped:
            continue
        if '"rec":"bundle"' in stripped.replace(" ", "") and stripped.startswith("{"):
            if block:
                yield block
            block = [stripped]
        else:
            block.append(stripped)
    if block:
        yield block


def _analyze_block(
    block: list[str], cfg: DetectorConfig, fmt: str
) -> tuple[list[str], dict[str, int], list[int], int]:
    """Worker body: render one bundle block; returns (lines, counts, profits, skipped)."""
    renderer = report.RENDERERS[fmt]
    try:
        bundles = model.load_bundles(_as_handle(block))
    except model.TraceError as exc:
        logger.error("skipping malformed bundle block: %s", exc)
        return [], {}, [], 1
    lines: list[str] = []
    counts: dict[str, int] = {}
    profits: list[int] = []
    skipped = 0
    for bundle in bundles:
        try:
            result = analyze_bundle(bundle, cfg)
        except BundleRejected as exc:
            logger.error("skipping bundle: %s", exc)
            skipped += 1
            continue
        for finding in result.findings:
            lines.append(renderer(finding, result.actions))
            counts[finding.kind] = counts.get(finding.kind, 0) + 1
            profits.append(finding.profit_amount)
    return lines, counts, profits, skipped


def _as_handle(block: list[str]):
    import io

    return io.StringIO("\n".join(block) + "\n")


def cmd_analyze(args: argparse.Namespace) -> int:
    cfg = DetectorConfig(
        amount_eq_rel_tol=_parse_fraction(args.tolerance_amount_eq, "tolerance-amount-eq"),
        indirect_in_out_rel_tol=_parse_fraction(args.tolerance_indirect, "tolerance-indirect"),
    )
    try:
        jobs = int(args.jobs)
    except ValueError:
        raise UsageError(f"--jobs expects an integer, got {args.jobs!r}")
    if jobs < 1:
        raise UsageError("--jobs must be at least 1")

    if not os.path.exists(args.input):
        logger.error("input file not found: %s", args.input)
        return EXIT_INPUT

    summary = report.RunSummary()
    profits: list[int] = []
    started = time.monotonic()

    out_handle = sys.stdout if args.out == "-" else open(args.out, "w", encoding="utf-8")
    try:
        with open(args.input, "r", encoding="utf-8") as input_handle:
            blocks = _bundle_blocks(input_handle)
            if jobs == 1:
                results = (_analyze_block(block, cfg, args.format) for block in blocks)
                for lines, counts, block_profits, skipped in results:
                    _fold(out_handle, summary, profits, lines, counts, block_profits, skipped)
            else:
                with ProcessPoolExecutor(max_workers=jobs) as pool:
                    window: list[Future] = []
                    for block in blocks:
                        window.append(pool.submit(_analyze_block, block, cfg, args.format))
                        if len(window) >= jobs * 8:
                            _fold(out_handle, summary, profits, *window.pop(0).result())
                    for future in window:
                        _fold(out_handle, summary, profits, *future.result())
    except model.TraceError as exc:
        logger.error("schema failure: %s", exc)
        return EXIT_INPUT
    finally:
        if out_handle is not sys.stdout:
            out_handle.close()

    summary.wall_seconds = time.monotonic() - started
    print(summary.line(), file=sys.stderr)

    if args.figures:
        from .figures import render_figures

        for path in render_figures(summary.findings_by_kind, profits, args.figures):
            print(f"figure: {path}", file=sys.stderr)
    return EXIT_OK


def _fold(out_handle, summary: report.RunSummary, profits: list[int],
          lines: list[str], counts: dict[str, int], block_profits: list[int], skipped: int) -> None:
    for line in lines:
        out_handle.write(line + "\n")
    for kind, n in counts.items():
        summary.findings_by_kind[kind] = summary.findings_by_kind.get(kind, 0) + n
    profits.extend(block_profits)
    summary.skipped += skipped
    summary.bundles += 1


def cmd_simulate(args: argparse.Namespace) -> int:
    try:
        seed = int(args.seed)
    except ValueError:
        raise UsageError(f"--seed expects an integer, got {args.seed!r}")
    params = _parse_params(args.params)
    try:
        result = scenarios.generate(args.kind, params, seed)
    except scenarios.InvalidParams as exc:
        logger.error("invalid scenario parameters: %s", exc)
        return EXIT_INPUT
    with open(args.out, "w", encoding="utf-8") as handle:
        handle.write(result.text)
    manifest_path = args.out + ".manifest.json"
    with open(manifest_path, "w", encoding="utf-8") as handle:
        handle.write(scenarios.manifest_json(result.manifest))
    print(f"wrote {args.out} and {manifest_path}", file=sys.stderr)
    return EXIT_OK


def cmd_lift_dump(args: argparse.Namespace) -> int:
    if not os.path.exists(args.input):
        logger.error("input file not found: %s", args.input)
        return EXIT_INPUT
    try:
        for bundle in model.iter_bundles(args.input):
            if bundle.bundle_id == args.bundle_id:
                tree = lifted_tree(bundle)
                sys.stdout.write(dump_tree(tree))
                return EXIT_OK
    except model.TraceError as exc:
        logger.error("schema failure: %s", exc)
        return EXIT_INPUT
    logger.error("unknown bundle: %s", args.bundle_id)
    return EXIT_INPUT


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(stream=sys.stderr, format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command == "analyze":
            return cmd_analyze(args)
        if args.command == "simulate":
            return cmd_simulate(args)
        if args.command == "lift-dump":
            return cmd_lift_dump(args)
        raise UsageError(f"unknown command {args.command!r}")
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        logger.error("i/o failure: %s", exc)
        return EXIT_INPUT
    except Exception:  # anything else is an internal error
        logger.exception("internal error")
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
