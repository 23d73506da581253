"""Corpus tables: normalize raw text bodies and build the cleaned
author/text tables from catalog entries.

Authors missing either life year are dropped (with a report), surnames on an
exclusion list are marked ``excluded`` and never matched downstream, and
ambiguous surnames are kept but flagged for later manual handling.
"""

from __future__ import annotations

import csv
import logging
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Literal

from .catalog import CatalogEntry

log = logging.getLogger(__name__)

Policy = Literal["normal", "excluded", "ambiguous"]

_START_MARKER = re.compile(r"^\s*\*\*\*\s*START OF", re.IGNORECASE)
_END_MARKER = re.compile(r"^\s*\*\*\*\s*END OF", re.IGNORECASE)


@dataclass(frozen=True)
class AuthorRecord:
    author_id: str
    display_name: str
    match_name: str
    birth_year: int  # negative = BCE
    death_year: int
    policy: Policy = "normal"


@dataclass(frozen=True)
class TextRecord:
    text_id: str
    author_id: str
    title: str
    category: str
    body: str
    raw_length: int
    body_length: int


@dataclass(frozen=True)
class DroppedItem:
    kind: str  # "author" | "text"
    name: str
    reason: str


def normalize_text(raw: str) -> str:
    """Strip catalog boilerplate and normalize line endings.

    Returns the content strictly between the ``*** START OF`` and
    ``*** END OF`` marker lines when both are present; if only one marker is
    found, strips from/to it and logs a warning; with no markers the text
    passes through unchanged apart from line-ending normalization.
    """
    text = raw.replace("\r\n", "\n").replace("\r", "\n")
    lines = text.split("\n")
    start_idx = next((i for i, ln in enumerate(lines) if _START_MARKER.match(ln)), None)
    end_idx = None
    for i in range(len(lines) - 1, -1, -1):
        if _END_MARKER.match(lines[i]):
            end_idx = i
            break
    if start_idx is None and end_idx is None:
        return text
    if start_idx is None:
        log.warning("text has an END marker but no START marker; stripping tail only")
        return "\n".join(lines[:end_idx])
    if end_idx is None or end_idx <= start_idx:
        log.warning("text has a START marker but no END marker; stripping head only")
        return "\n".join(lines[start_idx + 1 :])
    return "\n".join(lines[start_idx + 1 : end_idx])


def _slug(name: str) -> str:
    return re.sub(r"[^a-z0-9]+", "-", name.lower()).strip("-")


def display_name_from_catalog(raw_name: str) -> str:
    """Normalize a catalog "Last, First" name to "First Last" form."""
    if "," in raw_name:
        last, _, first = raw_name.partition(",")
        first = first.strip()
        last = last.strip()
        return f"{first} {last}".strip()
    return raw_name.strip()


def derive_match_name(display_name: str, *, single_name: bool) -> str:
    if single_name:
        return display_name
    return display_name.split()[-1]


def author_id_for(display_name: str, birth_year: int | None) -> str:
    base = _slug(display_name)
    return f"{base}-{birth_year}" if birth_year is not None else base


def build_author_table(
    entries: Iterable[CatalogEntry],
    exclusion_list: Iterable[str] = (),
    ambiguous_list: Iterable[str] = (),
    single_name_list: Iterable[str] = (),
) -> tuple[list[AuthorRecord], list[DroppedItem]]:
    """One AuthorRecord per distinct first-listed author, plus a drop report.

    Authors missing a birth or death year are omitted; match names on the
    exclusion list get ``policy=excluded``, on the ambiguous list
    ``policy=ambiguous``. The match name is the final whitespace-separated
    token of the display name unless the author is single-name (ancients),
    in which case the full name is used.
    """
    excluded = set(exclusion_list)
    ambiguous = set(ambiguous_list)
    single_names = set(single_name_list)

    records: dict[str, AuthorRecord] = {}
    dropped: dict[tuple[str, str], DroppedItem] = {}
    for entry in entries:
        if not entry.authors:
            dropped.setdefault(("?", "no author"), DroppedItem("author", f"(text {entry.source_id})", "no author"))
            continue
        primary = entry.authors[0]  # multi-author texts attribute to the first-listed author
        display = display_name_from_catalog(primary.name)
        if primary.birth_year is None or primary.death_year is None:
            dropped.setdefault((display, "missing life years"), DroppedItem("author", display, "missing life years"))
            continue
        if primary.birth_year >= primary.death_year:
            dropped.setdefault(
                (display, "birth year not before death year"),
                DroppedItem("author", display, "birth year not before death year"),
            )
            continue
        author_id = author_id_for(display, primary.birth_year)
        if author_id in records:
            continue
        is_single = display in single_names or len(display.split()) == 1
        match_name = derive_match_name(display, single_name=is_single)
        policy: Policy = "normal"
        if match_name in excluded:
            policy = "excluded"
        elif match_name in ambiguous:
            policy = "ambiguous"
        records[author_id] = AuthorRecord(
            author_id=author_id,
            display_name=display,
            match_name=match_name,
            birth_year=primary.birth_year,
            death_year=primary.death_year,
            policy=policy,
        )
    return sorted(records.values(), key=lambda r: r.author_id), list(dropped.values())


def build_text_record(entry: CatalogEntry, author_id: str, raw: str) -> TextRecord:
    body = normalize_text(raw)
    return TextRecord(
        text_id=f"g{entry.source_id}",
        author_id=author_id,
        title=entry.title,
        category=entry.category,
        body=body,
        raw_length=len(raw),
        body_length=len(body),
    )


AUTHOR_CSV_FIELDS = ["author_id", "display_name", "match_name", "birth_year", "death_year", "policy"]


def write_author_csv(path: Path, authors: Iterable[AuthorRecord]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f)
        writer.writerow(AUTHOR_CSV_FIELDS)
        for a in authors:
            writer.writerow([a.author_id, a.display_name, a.match_name, a.birth_year, a.death_year, a.policy])


def read_author_csv(path: Path) -> list[AuthorRecord]:
    out = []
    with open(path, newline="", encoding="utf-8") as f:
        for row in csv.DictReader(f):
            out.append(
                AuthorRecord(
                    author_id=row["author_id"],
                    display_name=row["display_name"],
                    match_name=row["match_name"],
                    birth_year=int(row["birth_year"]),
                    death_year=int(row["death_year"]),
                    policy=row["policy"],  # type: ignore[arg-type]
                )
            )
    return out


def write_dropped_report(path: Path, items: Iterable[DroppedItem]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f)
        writer.writerow(["kind", "name", "reason"])
        for item in items:
            writer.writerow([item.kind, item.name, item.reason])
