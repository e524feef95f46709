from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .backend import get_backend
from .convert import convert


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="coco-adapter")
    sub = parser.add_subparsers(dest="command", required=True)
    conv = sub.add_parser("convert", help="raw JSONL to coco-corpus JSONL")
    conv.add_argument("--in", dest="raw", type=Path, required=True)
    conv.add_argument("--out", type=Path, required=True)
    conv.add_argument("--syn-backend", required=True)
    conv.add_argument("--sem-backend", required=True)
    args = parser.parse_args(argv)

    try:
        syn, sem = get_backend(args.syn_backend), get_backend(args.sem_backend)
    except KeyError as e:
        print(f"coco-adapter: {e.args[0]}", file=sys.stderr)
        return 2
    try:
        summary = convert(args.raw, args.out, syn, sem)
    except NotImplementedError as e:
        print(f"coco-adapter: {e}", file=sys.stderr)
        return 4
    for sample_id, reason in summary.skipped:
        print(f"skipped {sample_id}: {reason}", file=sys.stderr)
    print(f"{summary.written} samples written, {len(summary.skipped)} skipped")
    return 0


if __name__ == "__main__":
    sys.exit(main())
