"""Standalone exporter CLI: ``bridge pll|qa|nli --model <id> --in <path> --out <path>``."""

from __future__ import annotations

import argparse
import sys

from .config import BridgeConfig
from .exporters import IdMismatchError, export_nli_predictions, export_pll, export_qa_predictions


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="bridge", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("pll", "qa", "nli"):
        cmd = sub.add_parser(name)
        cmd.add_argument("--model", required=True, help="checkpoint id or local path")
        cmd.add_argument("--in", dest="infile", required=True)
        cmd.add_argument("--out", required=True)
        cmd.add_argument("--device", default="cpu")
        cmd.add_argument("--batch-size", type=int, default=16)
        cmd.add_argument("--max-length", type=int, default=512)
        cmd.add_argument("--seed", type=int, default=0)
        if name == "qa":
            cmd.add_argument("--gold", help="gold file to cross-check question ids against")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    cfg = BridgeConfig(
        model=args.model,
        device=args.device,
        batch_size=args.batch_size,
        max_length=args.max_length,
        seed=args.seed,
    )
    try:
        if args.command == "pll":
            out = export_pll(args.infile, cfg, args.out)
        elif args.command == "qa":
            out = export_qa_predictions(args.infile, cfg, args.out, gold_path=args.gold)
        else:
            out = export_nli_predictions(args.infile, cfg, args.out)
    except IdMismatchError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(f"wrote {out}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
