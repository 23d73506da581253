"""Command-line entry point.

One subcommand per pipeline stage plus ``serve``. Stages run in-process by
default; with ``--remote`` they become thin clients of a running service.

Exit codes: 0 success, 1 usage, 2 stage failure, 3 integrity error.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from pathlib import Path

from .errors import IntegrityError, StageError, UsageError
from .pipeline import STAGES, PipelineConfig, run_pipeline


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):  # argparse exits 2 by default; usage is 1
        raise UsageError(f"{self.prog}: {message}")


def _parse_threshold(raw: str) -> tuple[str, float]:
    label, sep, value = raw.partition("=")
    if not sep:
        raise UsageError(f"--threshold expects <label>=<value>, got {raw!r}")
    try:
        return label, float(value)
    except ValueError:
        raise UsageError(f"--threshold value for {label!r} is not a number: {value!r}") from None


def build_parser() -> _Parser:
    parser = _Parser(prog="refnet", description="Reference-network pipeline over a text corpus")
    parser.add_argument("--config", type=Path, help="pipeline config file (JSON)")
    parser.add_argument("--workdir", type=Path, help="override the artifact directory")
    parser.add_argument("--base-url", help="catalog API base URL (or set REFNET_CATALOG_URL)")
    parser.add_argument("--remote", help="run the stage on a refnet service at this URL instead of locally")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", metavar="{fetch,scan,classify,analyze,export,serve}")

    fetch = sub.add_parser("fetch", parents=[], description="Download catalog + texts, build author/text tables")
    fetch.add_argument("--limit", type=int, help="per-category entry limit")

    scan = sub.add_parser("scan", description="Scan texts for author references")
    scan.add_argument("--cap", type=int, help="per-text reference cap")
    scan.add_argument("--window", type=int, help="context window size in characters")

    classify = sub.add_parser("classify", description="Classify reference contexts into topics")
    classify.add_argument("--threshold", action="append", default=[], metavar="LABEL=V")
    classify.add_argument("--validated", type=Path, help="validated author_id list file")

    analyze = sub.add_parser("analyze", description="Build dataset variants and compute metrics")
    analyze.add_argument("--seed", type=int, help="Louvain seed")
    analyze.add_argument("--validated", type=Path)

    sub.add_parser("export", description="Export the explorer bundle")

    serve = sub.add_parser("serve", description="Serve the explorer and the JSON API")
    serve.add_argument("--port", type=int)
    serve.add_argument("--static-dir", type=Path, help="directory with the built explorer assets")

    return parser


def _build_config(args: argparse.Namespace) -> PipelineConfig:
    config = PipelineConfig.from_file(args.config) if args.config else PipelineConfig()
    if not args.config and os.environ.get("REFNET_CATALOG_URL"):
        config.base_url = os.environ["REFNET_CATALOG_URL"]
    if args.workdir:
        config.workdir = args.workdir
    if args.base_url:
        config.base_url = args.base_url
    if getattr(args, "limit", None) is not None:
        config.per_category_limit = args.limit
    if getattr(args, "cap", None) is not None:
        config.per_text_cap = args.cap
    if getattr(args, "window", None) is not None:
        config.window_size = args.window
    if getattr(args, "seed", None) is not None:
        config.seed = args.seed
    if getattr(args, "validated", None) is not None:
        config.validated_list = args.validated
    if getattr(args, "port", None) is not None:
        config.port = args.port
    if getattr(args, "static_dir", None) is not None:
        config.static_dir = args.static_dir
    for raw in getattr(args, "threshold", []):
        label, value = _parse_threshold(raw)
        config.thresholds[label] = value
    return config


def _run_remote(remote: str, stage: str, args: argparse.Namespace) -> int:
    import requests

    overrides: dict = {}
    if getattr(args, "cap", None) is not None:
        overrides["cap"] = args.cap
    if getattr(args, "window", None) is not None:
        overrides["window"] = args.window
    if getattr(args, "seed", None) is not None:
        overrides["seed"] = args.seed
    if getattr(args, "limit", None) is not None:
        overrides["per_category_limit"] = args.limit
    thresholds = dict(_parse_threshold(raw) for raw in getattr(args, "threshold", []))
    if thresholds:
        overrides["thresholds"] = thresholds

    url = remote.rstrip("/") + "/api/pipeline/run"
    try:
        resp = requests.post(url, json={"stages": [stage], "overrides": overrides}, timeout=3600)
    except requests.RequestException as exc:
        print(f"error: cannot reach service at {remote}: {exc}", file=sys.stderr)
        return 2
    if resp.status_code == 200:
        for artifact in resp.json().get("artifacts", []):
            print(f"wrote: {artifact}")
        return 0
    try:
        body = resp.json()
    except ValueError:
        body = {"detail": resp.text, "error_kind": "stage"}
    print(f"error: {body.get('detail', 'unknown error')}", file=sys.stderr)
    return {"usage": 1, "stage": 2, "integrity": 3, "busy": 2}.get(body.get("error_kind"), 2)


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if not args.command:
            parser.print_help()
            return 1
        logging.basicConfig(
            level=logging.DEBUG if args.verbose else logging.INFO,
            format="%(levelname)s %(name)s: %(message)s",
        )
        if args.command in STAGES and args.remote:
            return _run_remote(args.remote, args.command, args)
        config = _build_config(args)
        if args.command == "serve":
            config.validate()
            import uvicorn

            from .service.app import create_app

            uvicorn.run(create_app(config), host="127.0.0.1", port=config.port, log_level="info")
            return 0
        results = run_pipeline(config, [args.command])
        for paths in results.values():
            for path in paths:
                print(f"wrote: {path}")
        return 0
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except ValueError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except StageError as exc:
        print(f"stage error: {exc}", file=sys.stderr)
        return 2
    except IntegrityError as exc:
        print(f"integrity error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
