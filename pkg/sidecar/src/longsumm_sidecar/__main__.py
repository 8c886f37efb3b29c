"""Sidecar CLI: serve a model registry, or check a running service."""

from __future__ import annotations

import argparse
import logging
import sys

from longsumm_sidecar import conformance
from longsumm_sidecar.registry import load_registry
from longsumm_sidecar.service import create_app


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="longsumm-sidecar")
    commands = parser.add_subparsers(dest="command", required=True)

    serve = commands.add_parser("serve", help="serve a model registry over /v1")
    serve.add_argument("registry", help="YAML model registry")
    serve.add_argument("--host", default="127.0.0.1")
    serve.add_argument("--port", type=int, default=8080)
    serve.add_argument(
        "--preload", action="store_true", help="load all checkpoints before serving"
    )

    check = commands.add_parser("check", help="run the conformance suite")
    check.add_argument("base_url")

    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")

    if args.command == "check":
        return conformance.main([args.base_url])

    import uvicorn

    entries = load_registry(args.registry)
    app = create_app(entries, preload=args.preload)
    uvicorn.run(app, host=args.host, port=args.port, log_level="info")
    return 0


if __name__ == "__main__":
    sys.exit(main())
