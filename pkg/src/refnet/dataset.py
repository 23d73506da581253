"""Reference-set variants: the expanded scan output, the validated main set,
the temporally filtered set, and per-topic subsets.

The temporal filter drops records whose cited author was born on or after the
citing author's death; such mentions can only come from editors or apparatus,
not the author's own hand.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Mapping

from .corpus import AuthorRecord
from .errors import IntegrityError
from .matching import ReferenceRecord

REFERENCE_CSV_FIELDS = ["citing_author_id", "cited_author_id", "text_id", "offset", "context"]


@dataclass(frozen=True)
class ReferenceSet:
    variant: str  # "expanded" | "main" | "filtered" | "topic:<label>"
    records: tuple[ReferenceRecord, ...]
    author_universe: frozenset[str] = field(default_factory=frozenset)

    @staticmethod
    def from_records(variant: str, records: Iterable[ReferenceRecord]) -> "ReferenceSet":
        records = tuple(records)
        universe = frozenset(r.citing_author_id for r in records) | frozenset(r.cited_author_id for r in records)
        return ReferenceSet(variant=variant, records=records, author_universe=universe)


@dataclass(frozen=True)
class DatasetSummary:
    total_authors: int
    total_references: int
    per_author_in: dict[str, int]
    per_author_out: dict[str, int]


def restrict_to_validated(refs: ReferenceSet, validated: set[str], author_ids: set[str]) -> ReferenceSet:
    """Keep only records whose citing AND cited authors were manually validated."""
    if not validated:
        raise ValueError("validated set must be non-empty")
    unknown = validated - author_ids
    if unknown:
        raise IntegrityError(f"validated authors absent from author table: {sorted(unknown)}")
    kept = tuple(r for r in refs.records if r.citing_author_id in validated and r.cited_author_id in validated)
    return ReferenceSet.from_records("main", kept)


def apply_temporal_filter(refs: ReferenceSet, authors: Mapping[str, AuthorRecord]) -> ReferenceSet:
    """Drop records where the cited author was born on or after the citing
    author's death (the citing author could not have written the mention)."""
    missing = refs.author_universe - set(authors)
    if missing:
        raise IntegrityError(f"authors missing life years: {sorted(missing)}")
    kept = (
        r
        for r in refs.records
        if authors[r.cited_author_id].birth_year < authors[r.citing_author_id].death_year
    )
    return ReferenceSet.from_records("filtered", kept)


def summarize(refs: ReferenceSet) -> DatasetSummary:
    """Distinct authors appearing on either side, and total record count."""
    per_in: dict[str, int] = {}
    per_out: dict[str, int] = {}
    for r in refs.records:
        per_out[r.citing_author_id] = per_out.get(r.citing_author_id, 0) + 1
        per_in[r.cited_author_id] = per_in.get(r.cited_author_id, 0) + 1
    authors = set(per_in) | set(per_out)
    return DatasetSummary(
        total_authors=len(authors),
        total_references=len(refs.records),
        per_author_in=dict(sorted(per_in.items())),
        per_author_out=dict(sorted(per_out.items())),
    )


def write_reference_csv(path: Path, refs: Iterable[ReferenceRecord]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f)  # RFC 4180: contexts with commas/newlines get quoted
        writer.writerow(REFERENCE_CSV_FIELDS)
        for r in refs:
            writer.writerow([r.citing_author_id, r.cited_author_id, r.text_id, r.offset, r.context])


def read_reference_csv(path: Path) -> list[ReferenceRecord]:
    out = []
    with open(path, newline="", encoding="utf-8") as f:
        for row in csv.DictReader(f):
            out.append(
                ReferenceRecord(
                    citing_author_id=row["citing_author_id"],
                    cited_author_id=row["cited_author_id"],
                    text_id=row["text_id"],
                    offset=int(row["offset"]),
                    context=row["context"],
                )
            )
    return out


def read_validated_list(path: Path) -> set[str]:
    """Newline-delimited author_id file; blank lines and # comments ignored."""
    out = set()
    for line in path.read_text(encoding="utf-8").splitlines():
        line = line.strip()
        if line and not line.startswith("#"):
            out.add(line)
    return out


def write_variant_manifest(path: Path, refs: ReferenceSet, source_csv: str, filters_applied: list[str]) -> None:
    summary = summarize(refs)
    manifest = {
        "variant": refs.variant,
        "source_csv": source_csv,
        "filters_applied": filters_applied,
        "summary": {
            "total_authors": summary.total_authors,
            "total_references": summary.total_references,
        },
    }
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def with_variant(refs: ReferenceSet, variant: str) -> ReferenceSet:
    return replace(refs, variant=variant)
