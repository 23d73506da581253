"""Catalog access: fetch a Gutendex-compatible book catalog and download
plain-text bodies, with an on-disk cache so every later stage can run offline.

Cache layout:
    cache/catalog/<category>.json   one snapshot per category
    cache/texts/<source_id>.txt     raw downloaded bytes
"""

from __future__ import annotations

import json
import logging
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from urllib.parse import urlsplit

import requests

from .errors import CatalogParseError, EncodingError, FetchError

log = logging.getLogger(__name__)

CATEGORIES = ("philosophy", "literature", "science", "politics", "religion", "physics", "mathematics")

DEFAULT_BASE_URL = "https://gutendex.com"

# Preference order for picking a plain-text format URL.
_PLAIN_TEXT_KEYS = (
    "text/plain; charset=utf-8",
    "text/plain; charset=us-ascii",
    "text/plain; charset=iso-8859-1",
    "text/plain",
)

_MAX_PAGES = 10_000


@dataclass(frozen=True)
class CatalogAuthor:
    name: str
    birth_year: int | None
    death_year: int | None


@dataclass(frozen=True)
class CatalogEntry:
    source_id: int
    title: str
    authors: tuple[CatalogAuthor, ...]
    category: str
    format_urls: dict[str, str] = field(hash=False)

    def text_url(self) -> str | None:
        for key in _PLAIN_TEXT_KEYS:
            if key in self.format_urls:
                return self.format_urls[key]
        # Fall back to any text/plain variant with an unusual charset suffix.
        for key, url in sorted(self.format_urls.items()):
            if key.startswith("text/plain"):
                return url
        return None

    def text_charset(self) -> str:
        for key in sorted(self.format_urls):
            if key.startswith("text/plain") and "charset=" in key:
                if self.format_urls[key] == self.text_url():
                    return key.split("charset=")[1].strip()
        return "utf-8"


def _entry_from_json(raw: dict, category: str, page_url: str) -> CatalogEntry:
    try:
        authors = tuple(
            CatalogAuthor(
                name=a["name"],
                birth_year=a.get("birth_year"),
                death_year=a.get("death_year"),
            )
            for a in raw.get("authors", [])
        )
        return CatalogEntry(
            source_id=int(raw["id"]),
            title=str(raw["title"]),
            authors=authors,
            category=category,
            format_urls=dict(raw.get("formats", {})),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise CatalogParseError(f"malformed catalog entry on {page_url}: {exc}") from exc


def _get_with_retries(
    session: requests.Session,
    url: str,
    *,
    params: dict | None = None,
    max_retries: int = 3,
    backoff_s: float = 0.5,
    context: str = "",
) -> requests.Response:
    """GET with bounded exponential backoff on transient failures."""
    last_exc: Exception | None = None
    for attempt in range(max_retries + 1):
        try:
            resp = session.get(url, params=params, timeout=60)
            if resp.status_code >= 500:
                raise requests.HTTPError(f"server error {resp.status_code}", response=resp)
            resp.raise_for_status()
            return resp
        except (requests.ConnectionError, requests.Timeout, requests.HTTPError) as exc:
            status = getattr(getattr(exc, "response", None), "status_code", None)
            if status is not None and 400 <= status < 500:
                break  # client errors are not transient
            last_exc = exc
            if attempt < max_retries:
                time.sleep(backoff_s * (2**attempt))
    raise FetchError(f"GET {url} failed after {max_retries + 1} attempts ({context}): {last_exc}")


class _HostRateLimiter:
    """Enforces a minimum interval between requests to each host."""

    def __init__(self, min_interval_s: float):
        self.min_interval_s = min_interval_s
        self._lock = threading.Lock()
        self._last: dict[str, float] = {}

    def wait(self, url: str) -> None:
        if self.min_interval_s <= 0:
            return
        host = urlsplit(url).netloc
        while True:
            with self._lock:
                now = time.monotonic()
                due = self._last.get(host, 0.0) + self.min_interval_s
                if now >= due:
                    self._last[host] = now
                    return
                wait_for = due - now
            time.sleep(wait_for)


def _catalog_cache_path(cache_dir: Path, category: str) -> Path:
    return cache_dir / "catalog" / f"{category}.json"


def text_cache_path(cache_dir: Path, source_id: int) -> Path:
    return cache_dir / "texts" / f"{source_id}.txt"


def _fetch_category(
    category: str,
    *,
    base_url: str,
    session: requests.Session,
    per_category_limit: int | None,
    max_retries: int,
    backoff_s: float,
) -> list[CatalogEntry]:
    entries: list[CatalogEntry] = []
    url: str | None = f"{base_url.rstrip('/')}/books/"
    params: dict | None = {"topic": category, "languages": "en", "mime_type": "text/plain"}
    pages = 0
    while url:
        pages += 1
        if pages > _MAX_PAGES:
            raise CatalogParseError(f"catalog pagination for {category!r} did not terminate ({url})")
        resp = _get_with_retries(
            session, url, params=params, max_retries=max_retries, backoff_s=backoff_s, context=f"category {category!r}"
        )
        try:
            page = resp.json()
            results = page["results"]
            next_url = page.get("next")
        except (ValueError, KeyError, TypeError) as exc:
            raise CatalogParseError(f"malformed catalog page {resp.url}: {exc}") from exc
        if not isinstance(results, list):
            raise CatalogParseError(f"malformed catalog page {resp.url}: 'results' is not a list")
        for raw in results:
            entries.append(_entry_from_json(raw, category, str(resp.url)))
            if per_category_limit is not None and len(entries) >= per_category_limit:
                return entries
        url, params = next_url, None
    return entries


def fetch_catalog(
    categories: list[str],
    per_category_limit: int | None = None,
    *,
    base_url: str = DEFAULT_BASE_URL,
    cache_dir: Path | None = None,
    session: requests.Session | None = None,
    max_retries: int = 3,
    backoff_s: float = 0.5,
) -> list[CatalogEntry]:
    """Fetch catalog entries for the requested categories, cache-first.

    Returns at most ``per_category_limit`` entries per category, in the order
    the catalog reports them. Snapshots are cached under
    ``cache/catalog/<category>.json`` and reused when they cover the request.
    """
    if not categories:
        raise ValueError("categories must be non-empty")
    if per_category_limit is not None and per_category_limit < 1:
        raise ValueError("per_category_limit must be >= 1")
    session = session or requests.Session()
    out: list[CatalogEntry] = []
    for category in categories:
        cached = _load_snapshot(cache_dir, category) if cache_dir else None
        if cached is not None and _snapshot_covers(cached, per_category_limit):
            entries = [_entry_from_json(e, category, "cache") for e in cached["entries"]]
            log.info("catalog cache hit for %r (%d entries)", category, len(entries))
        else:
            entries = _fetch_category(
                category,
                base_url=base_url,
                session=session,
                per_category_limit=per_category_limit,
                max_retries=max_retries,
                backoff_s=backoff_s,
            )
            if cache_dir:
                _store_snapshot(cache_dir, category, per_category_limit, base_url, entries)
        if per_category_limit is not None:
            entries = entries[:per_category_limit]
        out.extend(entries)
    return out


def _snapshot_covers(snapshot: dict, limit: int | None) -> bool:
    cached_limit = snapshot.get("limit")
    if cached_limit is None:
        return True
    return limit is not None and cached_limit >= limit


def _load_snapshot(cache_dir: Path, category: str) -> dict | None:
    path = _catalog_cache_path(cache_dir, category)
    if not path.exists():
        return None
    try:
        return json.loads(path.read_text(encoding="utf-8"))
    except (ValueError, OSError) as exc:
        log.warning("ignoring unreadable catalog cache %s: %s", path, exc)
        return None


def _store_snapshot(
    cache_dir: Path, category: str, limit: int | None, base_url: str, entries: list[CatalogEntry]
) -> None:
    path = _catalog_cache_path(cache_dir, category)
    path.parent.mkdir(parents=True, exist_ok=True)
    snapshot = {
        "category": category,
        "limit": limit,
        "base_url": base_url,
        "fetched_at": datetime.now(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ"),
        "entries": [
            {
                "id": e.source_id,
                "title": e.title,
                "authors": [
                    {"name": a.name, "birth_year": a.birth_year, "death_year": a.death_year} for a in e.authors
                ],
                "formats": e.format_urls,
            }
            for e in entries
        ],
    }
    path.write_text(json.dumps(snapshot, ensure_ascii=False, indent=1), encoding="utf-8")


def snapshot_fetched_at(cache_dir: Path, categories: list[str]) -> str | None:
    """Earliest fetch stamp across the cached category snapshots."""
    stamps = []
    for category in categories:
        snap = _load_snapshot(cache_dir, category)
        if snap and snap.get("fetched_at"):
            stamps.append(snap["fetched_at"])
    return min(stamps) if stamps else None


def download_texts(
    entries: list[CatalogEntry],
    cache_dir: Path,
    *,
    session: requests.Session | None = None,
    workers: int = 4,
    rate_limit_s: float = 0.0,
    max_retries: int = 3,
    backoff_s: float = 0.5,
) -> tuple[list[CatalogEntry], list[tuple[CatalogEntry, str]]]:
    """Download the plain-text body of each entry into the cache.

    Runs with bounded parallelism and a per-host rate limit; results come back
    in input order regardless of completion order. Returns (downloaded entries,
    skipped entries with reasons).
    """
    session = session or requests.Session()
    limiter = _HostRateLimiter(rate_limit_s)
    (cache_dir / "texts").mkdir(parents=True, exist_ok=True)

    def fetch_one(entry: CatalogEntry) -> str | None:
        path = text_cache_path(cache_dir, entry.source_id)
        if path.exists():
            return None
        url = entry.text_url()
        if url is None:
            return "no text/plain format"
        limiter.wait(url)
        try:
            resp = _get_with_retries(
                session, url, max_retries=max_retries, backoff_s=backoff_s, context=f"text {entry.source_id}"
            )
        except FetchError as exc:
            return str(exc)
        path.write_bytes(resp.content)
        return None

    with ThreadPoolExecutor(max_workers=max(1, workers)) as pool:
        failures = list(pool.map(fetch_one, entries))

    downloaded: list[CatalogEntry] = []
    skipped: list[tuple[CatalogEntry, str]] = []
    for entry, failure in zip(entries, failures):
        if failure is None:
            downloaded.append(entry)
        else:
            skipped.append((entry, failure))
            log.warning("skipping text %d: %s", entry.source_id, failure)
    return downloaded, skipped


def load_text(entry: CatalogEntry, cache_dir: Path) -> str:
    """Decode a cached text body using the charset its catalog entry declares."""
    path = text_cache_path(cache_dir, entry.source_id)
    raw = path.read_bytes()
    charset = entry.text_charset()
    try:
        return raw.decode(charset)
    except (UnicodeDecodeError, LookupError) as exc:
        raise EncodingError(f"text {entry.source_id} is not valid {charset}: {exc}") from exc
