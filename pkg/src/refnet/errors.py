"""Exception hierarchy shared across the pipeline.

Exit-code mapping (see cli.py): UsageError -> 1, StageError -> 2,
IntegrityError -> 3. Pure-function violations (bad vectors, colliding
patterns, metrics on empty graphs) derive from ValueError so callers can
treat them as ordinary input errors.
"""

from __future__ import annotations


class RefnetError(Exception):
    """Base class for all refnet errors."""


class UsageError(RefnetError):
    """Invalid configuration or command-line input."""


class StageError(RefnetError):
    """A pipeline stage could not run (missing prerequisite, bad artifact)."""


class FetchError(StageError):
    """Catalog or text download failed after retries."""


class CatalogParseError(StageError):
    """A catalog page did not match the expected JSON shape."""


class EncodingError(StageError):
    """A downloaded text could not be decoded with its declared charset."""


class IntegrityError(RefnetError):
    """Cross-artifact references do not resolve (dangling author ids, ...)."""


class PatternCollisionError(ValueError):
    """One match surface maps to more than one author."""

    def __init__(self, collisions: dict[str, list[str]]):
        self.collisions = collisions
        detail = "; ".join(
            f"{surface!r} -> {', '.join(sorted(ids))}" for surface, ids in sorted(collisions.items())
        )
        super().__init__(f"match surfaces map to multiple authors: {detail}")


class UndefinedSimilarityError(ValueError):
    """Cosine similarity is undefined (zero vector)."""


class UndefinedMetricError(ValueError):
    """A graph metric is undefined for this input (e.g. no edges)."""
