"""Serve the scoring service: ``nli-sidecar --port 8080 --mode stub``."""

from __future__ import annotations

import argparse
import sys

import uvicorn

from .app import create_app


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="nli-sidecar", description=__doc__)
    parser.add_argument("--host", default="127.0.0.1")
    parser.add_argument("--port", type=int, default=8080)
    parser.add_argument("--mode", choices=("stub", "pretrained"), default="stub")
    parser.add_argument("--model", default=None, help="model name for pretrained mode")
    args = parser.parse_args(argv)
    app = create_app(args.mode, args.model)
    uvicorn.run(app, host=args.host, port=args.port, log_level="info")
    return 0


def entrypoint() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()
