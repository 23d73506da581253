"""Shared fixtures: the generated corpus, a local Gutendex-style catalog
server, and a fully-run pipeline workspace reused by read-only tests."""

from __future__ import annotations

import json
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path
from urllib.parse import parse_qs, urlsplit

import pytest

from refnet.corpus import author_id_for, display_name_from_catalog
from refnet.pipeline import PipelineConfig, run_pipeline

from corpusgen import AMBIGUOUS_NAMES, EXCLUDED_NAMES, FixtureCorpus, generate_corpus, surname_of


class CatalogHandler(BaseHTTPRequestHandler):
    server_version = "FixtureCatalog/1"

    def log_message(self, *args) -> None:
        pass

    def do_GET(self) -> None:
        parts = urlsplit(self.path)
        key = parts.path
        fail_budget = self.server.fail_once  # type: ignore[attr-defined]
        if fail_budget.get(key, 0) > 0:
            fail_budget[key] -= 1
            self.send_response(500)
            self.end_headers()
            self.wfile.write(b"transient failure")
            return
        if parts.path == "/books/":
            query = parse_qs(parts.query)
            topic = query.get("topic", [""])[0]
            page = int(query.get("page", ["1"])[0])
            if topic == "__malformed__":
                self._send_json({"unexpected": "shape"})
                return
            if topic == "__badentry__":
                self._send_json({"count": 1, "next": None, "results": [{"title": "No Id Here"}]})
                return
            pages = self.server.pages.get(topic)  # type: ignore[attr-defined]
            if pages is None or page > len(pages):
                self._send_json({"count": 0, "next": None, "results": []})
                return
            self._send_json(pages[page - 1])
            return
        if parts.path.startswith("/texts/") and parts.path.endswith(".txt"):
            source_id = int(parts.path[len("/texts/") : -len(".txt")])
            text = self.server.texts_by_id.get(source_id)  # type: ignore[attr-defined]
            if text is None:
                self.send_response(404)
                self.end_headers()
                return
            payload = text.raw.encode("utf-8")
            self.send_response(200)
            self.send_header("Content-Type", "text/plain; charset=utf-8")
            self.send_header("Content-Length", str(len(payload)))
            self.end_headers()
            self.wfile.write(payload)
            return
        if parts.path == "/malformed/":
            self._send_json({"unexpected": "shape"})
            return
        self.send_response(404)
        self.end_headers()

    def _send_json(self, payload: dict) -> None:
        data = json.dumps(payload).encode("utf-8")
        self.send_response(200)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(data)))
        self.end_headers()
        self.wfile.write(data)


@pytest.fixture(scope="session")
def corpus() -> FixtureCorpus:
    return generate_corpus()


@pytest.fixture(scope="session")
def catalog_server(corpus: FixtureCorpus):
    server = ThreadingHTTPServer(("127.0.0.1", 0), CatalogHandler)
    base_url = f"http://127.0.0.1:{server.server_address[1]}"
    server.pages = corpus.catalog_pages(base_url)  # type: ignore[attr-defined]
    server.texts_by_id = {t.source_id: t for t in corpus.texts}  # type: ignore[attr-defined]
    server.fail_once = {}  # type: ignore[attr-defined]
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    yield base_url, server
    server.shutdown()


def author_ids_for_names(corpus: FixtureCorpus, names: list[str]) -> list[str]:
    out = []
    for catalog_name, birth, _death in corpus.authors:
        if birth is None:
            continue
        if surname_of(catalog_name) in names:
            out.append(author_id_for(display_name_from_catalog(catalog_name), birth))
    return sorted(out)


def make_config(corpus: FixtureCorpus, base_url: str, workdir: Path) -> PipelineConfig:
    workdir.mkdir(parents=True, exist_ok=True)
    validated_path = workdir / "validated.txt"
    validated_path.write_text("\n".join(author_ids_for_names(corpus, corpus.validated_names)) + "\n", encoding="utf-8")
    return PipelineConfig(
        workdir=workdir,
        base_url=base_url,
        categories=["philosophy", "literature", "science", "politics", "religion", "physics", "mathematics"],
        validated_list=validated_path,
        exclusion_names=list(EXCLUDED_NAMES),
        ambiguous_names=list(AMBIGUOUS_NAMES),
        seed=7,
        download_workers=4,
        scan_workers=2,
    )


@pytest.fixture(scope="session")
def ran_workspace(corpus: FixtureCorpus, catalog_server, tmp_path_factory) -> PipelineConfig:
    """One full pipeline run shared by read-only tests."""
    base_url, _server = catalog_server
    config = make_config(corpus, base_url, tmp_path_factory.mktemp("workspace"))
    run_pipeline(config, ["fetch", "scan", "classify", "analyze", "export"])
    return config
