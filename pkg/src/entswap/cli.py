"""Command-line interface.

Exit status: 0 on success, 1 for an invalid experiment specification, 2 when
table verification finds a mismatch.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import _kernels
from .harness import DEFAULT_TRIALS, ExperimentSpec, SpecError, run_trials, verify_tables
from .protocols import DEFAULT_SEED

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_MISMATCH = 2

log = logging.getLogger("entswap")


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INVALID, f"{self.prog}: error: {message}\n")


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--threshold", type=float, default=0.02, help="abort when a check error rate exceeds this")
    p.add_argument("--attack", default="none", metavar="{none|ir-z|ir-x|ir-zx|depol:<eta>}",
                   help="channel model on attacked links (default: none)")
    p.add_argument("--link", type=int, action="append", dest="links", metavar="INDEX",
                   help="link the attack applies to; repeatable (default: every link)")
    p.add_argument("--trials", type=int, default=DEFAULT_TRIALS)
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p.add_argument("--format", choices=("json", "csv"), default="json", dest="output_format")
    p.add_argument("--transcript", type=Path, metavar="PATH", help="write every trial's event log as JSON lines")
    p.add_argument("--per-trial", action="store_true", help="include per-trial rows in JSON output")
    p.add_argument("--timing", action="store_true", help="record wall time (makes output run-dependent)")
    p.add_argument("-o", "--output", type=Path, help="write the report here instead of stdout")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="entswap", description="Entanglement-swapping QSDC / QSS simulator")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    q = sub.add_parser("qsdc", help="run direct-communication sessions")
    q.add_argument("--variant", choices=("two-step", "encode-first"), default="two-step")
    q.add_argument("--pairs", type=int, dest="n_pairs", help="EPR pairs per session (default: fit the message)")
    q.add_argument("--message-hex", help="fixed message; each hex digit is two dibits")
    q.add_argument("--message-dibits", type=int, help="length of a random per-trial message (default 64)")
    q.add_argument("--sample-frac", type=float, default=0.25, dest="sample_fraction")
    _common(q)

    s = sub.add_parser("qss", help="run secret-sharing sessions")
    s.add_argument("--parties", type=int, default=3, dest="n_parties")
    s.add_argument("--key-dibits", type=int, default=64)
    s.add_argument("--check-prob", type=float, default=0.5, dest="check_probability")
    s.add_argument("--max-rounds", type=int, default=100_000)
    _common(s)

    t = sub.add_parser("tables", help="verify the decoding tables")
    t.add_argument("--format", choices=("text", "json"), default="text", dest="output_format")
    return parser


def _spec_from_args(args: argparse.Namespace) -> ExperimentSpec:
    common = dict(trials=args.trials, error_threshold=args.threshold, attack=args.attack,
                  links=args.links, seed=args.seed, output_format=args.output_format)
    if args.command == "qsdc":
        return ExperimentSpec(protocol=f"qsdc-{args.variant}", n_pairs=args.n_pairs,
                              sample_fraction=args.sample_fraction, message_hex=args.message_hex,
                              message_dibits=args.message_dibits, **common)
    return ExperimentSpec(protocol="qss", n_parties=args.n_parties, key_dibits=args.key_dibits,
                          check_probability=args.check_probability, max_rounds=args.max_rounds, **common)


def _emit(text: str, path: Path | None) -> None:
    if path is None:
        sys.stdout.write(text)
    else:
        path.write_text(text)


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    log.debug("kernel backend: %s", _kernels.BACKEND)

    if args.command == "tables":
        report = verify_tables()
        if args.output_format == "json":
            sys.stdout.write(json.dumps(report.to_dict(), indent=2) + "\n")
        else:
            sys.stdout.write(report.render() + "\n")
        return EXIT_OK if report.ok else EXIT_MISMATCH

    try:
        spec = _spec_from_args(args)
    except SpecError as exc:
        sys.stderr.write(f"entswap: invalid {exc.field}: {str(exc).split(': ', 1)[-1]}\n")
        return EXIT_INVALID
    result = run_trials(spec, keep_transcripts=args.transcript is not None, timing=args.timing)
    _emit(result.render(per_trial=args.per_trial), args.output)
    if args.transcript is not None:
        args.transcript.write_text(result.transcript_jsonl())
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
