"""embed: encode a text JSONL file into embedding JSONL.

Exit codes: 0 success, 1 input error, 3 encoder unavailable.
"""

from __future__ import annotations

import argparse
import logging
import sys

from .embed import DEFAULT_BATCH, DEFAULT_DIM, DEFAULT_MAX_TOKENS, EmbedJob, embed_file
from .exceptions import EncoderUnavailable, InputError


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise SystemExit(1)


def build_parser() -> _Parser:
    p = _Parser(prog="embed", description=__doc__)
    p.add_argument("--in", dest="input", required=True, help="text JSONL to encode")
    p.add_argument("--out", dest="output", required=True, help="embedding JSONL to write")
    p.add_argument("--encoder", default="hash",
                   help="encoder name; 'hash' is the built-in offline encoder")
    p.add_argument("--dim", type=int, default=DEFAULT_DIM, help="output embedding dimension")
    p.add_argument("--max-tokens", type=int, default=DEFAULT_MAX_TOKENS,
                   help="truncate texts beyond this many tokens")
    p.add_argument("--batch-size", type=int, default=DEFAULT_BATCH)
    p.add_argument("--seed", type=int, default=1, help="seed for the projection matrix")
    return p


def main(argv=None) -> int:
    logging.basicConfig(stream=sys.stderr, level=logging.INFO, format="%(message)s")
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        job = EmbedJob(
            input_path=args.input,
            output_path=args.output,
            encoder=args.encoder,
            target_dim=args.dim,
            max_tokens=args.max_tokens,
            batch_size=args.batch_size,
            seed=args.seed,
        )
        result = embed_file(job)
    except EncoderUnavailable as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except (InputError, FileNotFoundError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    summary = f"wrote {result.written} embeddings to {args.output}"
    if result.skipped:
        summary += f" ({result.skipped} skipped)"
    if result.projection_path:
        summary += f"; projection saved to {result.projection_path}"
    print(summary)
    return 0


if __name__ == "__main__":
    sys.exit(main())
