"""Command line: ``bridge export-matrices`` / ``bridge export-embeddings``.

Exit codes: 0 success, 1 data/model error, 2 usage error.
"""

from __future__ import annotations

import argparse
import sys

from .config import BridgeConfig, BridgeError
from .export import export_embeddings, export_utility_matrices


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="bridge", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--corpus", required=True, help="line-delimited corpus file")
    common.add_argument("--out", required=True, help="output directory")
    common.add_argument("--batch-size", type=int, default=16)
    common.add_argument("--device", default="cpu")
    common.add_argument("--max-length", type=int, default=256)

    p = sub.add_parser("export-matrices", parents=[common], help="pairwise utility matrices")
    p.add_argument("--scorer", choices=["bertscore", "bleurt"], default="bertscore")
    p.add_argument("--model", default="roberta-large", help="scorer model identifier")
    p.add_argument("--layer", type=int, default=None, help="hidden-state layer (bertscore)")
    p.add_argument("--rescale", action="store_true")
    p.add_argument("--rescale-baseline", type=float, default=None)
    p.set_defaults(matrices=True)

    p = sub.add_parser("export-embeddings", parents=[common], help="sentence embeddings")
    p.add_argument(
        "--model",
        default="sentence-transformers/all-mpnet-base-v2",
        help="embedder model identifier",
    )
    p.set_defaults(matrices=False)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.matrices:
            config = BridgeConfig(
                scorer=args.scorer,
                scorer_model=args.model,
                batch_size=args.batch_size,
                device=args.device,
                rescale=args.rescale,
                rescale_baseline=args.rescale_baseline,
                layer=args.layer,
                max_length=args.max_length,
            )
            stems = export_utility_matrices(args.corpus, config, args.out)
        else:
            config = BridgeConfig(
                embedder_model=args.model,
                batch_size=args.batch_size,
                device=args.device,
                max_length=args.max_length,
            )
            stems = export_embeddings(args.corpus, config, args.out)
    except FileNotFoundError as exc:
        print(f"error: missing input file: {exc}", file=sys.stderr)
        return 2
    except BridgeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(f"wrote {len(stems)} file pairs to {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
