"""Command line front end: export encoders and emit parity fixtures.

    model-export export --model minilm --out exports/minilm --random-init
    model-export export --all --out exports --random-init --seed 7
    model-export fixtures --dir exports/minilm
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .catalog import CATALOG
from .exporter import (
    DEFAULT_NUM_LAYERS,
    DEFAULT_SEQUENCE_LENGTH,
    ExportError,
    export_model,
)
from .fixtures import emit_fixtures


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="model-export", description=__doc__.split("\n")[0]
    )
    sub = parser.add_subparsers(dest="command", required=True)

    exp = sub.add_parser("export", help="export one or all catalog models")
    group = exp.add_mutually_exclusive_group(required=True)
    group.add_argument("--model", choices=sorted(CATALOG), help="model id")
    group.add_argument(
        "--all", action="store_true", help="export every catalog model"
    )
    exp.add_argument("--out", required=True, type=Path, help="output directory")
    exp.add_argument(
        "--random-init",
        action="store_true",
        help="seeded random weights at the advertised width (offline mode)",
    )
    exp.add_argument("--seed", type=int, default=0)
    exp.add_argument(
        "--sequence-length", type=int, default=DEFAULT_SEQUENCE_LENGTH
    )
    exp.add_argument("--num-layers", type=int, default=DEFAULT_NUM_LAYERS)
    exp.add_argument(
        "--fixtures",
        action="store_true",
        help="also emit fixtures.jsonl after each export",
    )

    fix = sub.add_parser("fixtures", help="emit fixtures for an exported model")
    fix.add_argument("--dir", required=True, type=Path, help="export directory")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "export":
            mode = "random-init" if args.random_init else "pretrained"
            ids = sorted(CATALOG) if args.all else [args.model]
            for model_id in ids:
                out = args.out / model_id if args.all else args.out
                manifest = export_model(
                    model_id,
                    out,
                    mode=mode,
                    seed=args.seed,
                    sequence_length=args.sequence_length,
                    num_layers=args.num_layers,
                )
                print(
                    f"exported {manifest.model_id} dim={manifest.dim} "
                    f"-> {out} ({manifest.checksum_sha256[:12]}...)"
                )
                if args.fixtures:
                    fixtures = emit_fixtures(out)
                    print(f"  {len(fixtures)} fixtures")
        else:
            fixtures = emit_fixtures(args.dir)
            print(f"wrote {len(fixtures)} fixtures under {args.dir}")
    except ExportError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
