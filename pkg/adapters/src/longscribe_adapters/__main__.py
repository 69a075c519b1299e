"""Adapter launcher: `python -m longscribe_adapters <kind> [options]`."""

from __future__ import annotations

import argparse
import sys

from .protocol import serve


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="longscribe-adapter",
        description="Serve a model over the longscribe stdio wire protocol.",
    )
    sub = parser.add_subparsers(dest="kind", required=True)

    p = sub.add_parser("echo", help="deterministic test adapter, no model weights")
    p.add_argument("--script", help="token script JSON replayed by the recognize op")

    p = sub.add_parser("wav2vec2", help="CTC frame classifier + recognizer")
    p.add_argument("--model", required=True)
    p.add_argument("--device", default="cpu")

    p = sub.add_parser("ast", help="Audioset segment classifier")
    p.add_argument("--model", required=True)
    p.add_argument("--device", default="cpu")
    p.add_argument("--top-k", type=int, default=10)

    p = sub.add_parser("whisper", help="sequence-to-sequence recognizer")
    p.add_argument("--model", required=True)
    p.add_argument("--device", default="cpu")
    p.add_argument("--language")

    p = sub.add_parser("lm", help="causal-LM sequence scorer")
    p.add_argument("--model", required=True)
    p.add_argument("--device", default="cpu")

    args = parser.parse_args(argv)
    if args.kind == "echo":
        from .echo import EchoHandler

        handler = EchoHandler(args.script)
    elif args.kind == "wav2vec2":
        from .wav2vec2 import Wav2Vec2Handler

        handler = Wav2Vec2Handler(args.model, args.device)
    elif args.kind == "ast":
        from .ast_classifier import AstHandler

        handler = AstHandler(args.model, args.device, args.top_k)
    elif args.kind == "whisper":
        from .whisper import WhisperHandler

        handler = WhisperHandler(args.model, args.device, args.language)
    else:
        from .causal_lm import CausalLmHandler

        handler = CausalLmHandler(args.model, args.device)
    return serve(handler)


if __name__ == "__main__":
    sys.exit(main())
