"""Command-line front end.

    entropywalks <kind> --config <file> [--seed N] [--out DIR] [--emit-csv]

Exit codes: 0 all certified/verified, 1 falsification found (witness file
written next to the report), 2 error.
"""

from __future__ import annotations

import argparse
import sys

from .errors import EntropyWalksError
from .runner import KINDS, emit_plotdata, load_config, run


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="entropywalks",
                                 description="down-up walks, Glauber dynamics, "
                                             "and entropy-contraction certificates")
    ap.add_argument("kind", choices=KINDS, help="experiment kind")
    ap.add_argument("--config", required=True, help="JSON config file")
    ap.add_argument("--seed", type=int, default=None, help="override the config seed")
    ap.add_argument("--out", default=None, help="override the output directory")
    ap.add_argument("--emit-csv", action="store_true",
                    help="also write tidy plotdata CSVs")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = load_config(args.config, seed=args.seed, output_dir=args.out)
        if config.kind != args.kind:
            config.kind = args.kind
        report = run(config)
        if args.emit_csv:
            emit_plotdata(report)
    except EntropyWalksError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    ok = bool(report.summary.get("ok", True))
    verdict = report.summary.get("verdict")
    print(f"[{config.kind}] ok={ok}" + (f" verdict={verdict}" if verdict else "")
          + f" -> {report.out_dir}")
    return 0 if ok else 1


if __name__ == "__main__":
    raise SystemExit(main())
