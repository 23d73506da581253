"""Multi-pattern scan for in-text author references.

Match names are compiled into an Aho-Corasick automaton so every text is
scanned in a single pass regardless of how many authors are being looked for.
Matching is case-sensitive and boundary-aware: "Kant" matches in "Kant wrote"
and (under the possessive rule) in "Kant's", but never inside "Kantian".

Offsets are counted in characters of the normalized body, so context
extraction can never split a multi-byte character.
"""

from __future__ import annotations

from collections import deque
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Literal

from .corpus import AuthorRecord, TextRecord
from .errors import IntegrityError, PatternCollisionError

BoundaryRule = Literal["word_boundary", "word_boundary_plus_possessive"]

_APOSTROPHES = ("'", "’")


@dataclass(frozen=True)
class MatchPattern:
    author_id: str
    surface: str
    boundary_rule: BoundaryRule


@dataclass(frozen=True)
class ScanConfig:
    window_size: int = 150
    per_text_target_cap: int = 250
    boundary_rule: BoundaryRule = "word_boundary_plus_possessive"
    # "per_cited_author" caps each (text, cited author) pair; "per_text_total"
    # caps the text's total record count instead.
    cap_scope: Literal["per_cited_author", "per_text_total"] = "per_cited_author"

    def __post_init__(self) -> None:
        if self.window_size < 0:
            raise ValueError("window_size must be >= 0")
        if self.per_text_target_cap < 1:
            raise ValueError("per_text_target_cap must be >= 1")


@dataclass(frozen=True)
class ReferenceRecord:
    citing_author_id: str
    cited_author_id: str
    text_id: str
    offset: int
    context: str

    @property
    def record_id(self) -> str:
        return f"{self.text_id}:{self.offset}:{self.cited_author_id}"


def _is_word_char(ch: str) -> bool:
    return ch.isalnum() or ch == "_"


def _is_internal_apostrophe(body: str, i: int) -> bool:
    # An apostrophe flanked by word characters continues the word (O'Brien,
    # Kant's), so it is not a boundary.
    return (
        body[i] in _APOSTROPHES
        and i > 0
        and i + 1 < len(body)
        and _is_word_char(body[i - 1])
        and _is_word_char(body[i + 1])
    )


def boundary_ok(body: str, start: int, end: int, rule: BoundaryRule) -> bool:
    """True when body[start:end] sits on word boundaries under the given rule."""
    if start > 0:
        prev = start - 1
        if _is_word_char(body[prev]) or _is_internal_apostrophe(body, prev):
            return False
    if end < len(body):
        plain = not _is_word_char(body[end]) and not _is_internal_apostrophe(body, end)
        if not plain:
            if rule != "word_boundary_plus_possessive":
                return False
            possessive = (
                body[end] in _APOSTROPHES
                and body[end + 1 : end + 2] == "s"
                and (end + 2 >= len(body) or not _is_word_char(body[end + 2]))
            )
            if not possessive:
                return False
    return True


@dataclass
class MatcherAutomaton:
    """Immutable after compile; shareable across scanning threads."""

    patterns: tuple[MatchPattern, ...]
    known_authors: frozenset[str]
    _goto: list[dict[str, int]] = field(repr=False, default_factory=list)
    _fail: list[int] = field(repr=False, default_factory=list)
    _out: list[tuple[int, ...]] = field(repr=False, default_factory=list)

    def find_matches(self, body: str) -> Iterator[tuple[int, MatchPattern]]:
        """Yield (offset, pattern) for every boundary-valid match, one pass."""
        goto, fail, out, patterns = self._goto, self._fail, self._out, self.patterns
        state = 0
        for i, ch in enumerate(body):
            while state and ch not in goto[state]:
                state = fail[state]
            state = goto[state].get(ch, 0)
            for pidx in out[state]:
                pattern = patterns[pidx]
                start = i + 1 - len(pattern.surface)
                if boundary_ok(body, start, i + 1, pattern.boundary_rule):
                    yield start, pattern


def compile_patterns(
    authors: Iterable[AuthorRecord],
    boundary_rule: BoundaryRule = "word_boundary_plus_possessive",
) -> MatcherAutomaton:
    """Build the automaton for all non-excluded match names.

    Raises PatternCollisionError when one surface maps to several authors
    (the caller must disambiguate or exclude) and ValueError when no
    matchable author remains.
    """
    authors = list(authors)
    known = frozenset(a.author_id for a in authors)
    matchable = [a for a in authors if a.policy != "excluded"]
    if not matchable:
        raise ValueError("no matchable authors after excluding policy=excluded")

    by_surface: dict[str, list[str]] = {}
    for a in matchable:
        if not a.match_name:
            raise ValueError(f"author {a.author_id} has an empty match name")
        ids = by_surface.setdefault(a.match_name, [])
        if a.author_id not in ids:
            ids.append(a.author_id)
    collisions = {s: ids for s, ids in by_surface.items() if len(ids) > 1}
    if collisions:
        raise PatternCollisionError(collisions)

    patterns = tuple(
        MatchPattern(author_id=ids[0], surface=surface, boundary_rule=boundary_rule)
        for surface, ids in sorted(by_surface.items())
    )

    goto: list[dict[str, int]] = [{}]
    out_lists: list[list[int]] = [[]]
    for pidx, pattern in enumerate(patterns):
        node = 0
        for ch in pattern.surface:
            nxt = goto[node].get(ch)
            if nxt is None:
                goto.append({})
                out_lists.append([])
                nxt = len(goto) - 1
                goto[node][ch] = nxt
            node = nxt
        out_lists[node].append(pidx)

    fail = [0] * len(goto)
    queue: deque[int] = deque()
    for child in goto[0].values():
        queue.append(child)
    while queue:
        node = queue.popleft()
        for ch, child in goto[node].items():
            queue.append(child)
            f = fail[node]
            while f and ch not in goto[f]:
                f = fail[f]
            fail[child] = goto[f].get(ch, 0) if goto[f].get(ch, 0) != child else 0
            out_lists[child].extend(out_lists[fail[child]])

    return MatcherAutomaton(
        patterns=patterns,
        known_authors=known,
        _goto=goto,
        _fail=fail,
        _out=[tuple(o) for o in out_lists],
    )


def extract_context(body: str, match_start: int, match_len: int, window_size: int) -> str:
    """The match plus floor(window/2) chars before and ceil(window/2) after,
    clipped at the body boundaries."""
    if match_start < 0 or match_len < 0 or match_start + match_len > len(body):
        raise ValueError(f"match span [{match_start}, {match_start + match_len}) out of bounds")
    if window_size < 0:
        raise ValueError("window_size must be >= 0")
    before = window_size // 2
    after = window_size - before
    lo = max(0, match_start - before)
    hi = min(len(body), match_start + match_len + after)
    return body[lo:hi]


def scan_text(text: TextRecord, automaton: MatcherAutomaton, config: ScanConfig) -> list[ReferenceRecord]:
    """Scan one normalized body, returning records ordered by offset.

    Self-references are omitted and, for each cited author, at most
    ``per_text_target_cap`` records are retained (earliest offsets win).
    """
    if text.author_id not in automaton.known_authors:
        raise IntegrityError(f"text {text.text_id} cites unknown author {text.author_id!r}")

    matches = [
        (offset, pattern)
        for offset, pattern in automaton.find_matches(text.body)
        if pattern.author_id != text.author_id
    ]
    matches.sort(key=lambda m: (m[0], m[1].author_id))

    kept: list[tuple[int, MatchPattern]] = []
    if config.cap_scope == "per_text_total":
        kept = matches[: config.per_text_target_cap]
    else:
        per_author: dict[str, int] = {}
        for offset, pattern in matches:
            n = per_author.get(pattern.author_id, 0)
            if n < config.per_text_target_cap:
                per_author[pattern.author_id] = n + 1
                kept.append((offset, pattern))

    return [
        ReferenceRecord(
            citing_author_id=text.author_id,
            cited_author_id=pattern.author_id,
            text_id=text.text_id,
            offset=offset,
            context=extract_context(text.body, offset, len(pattern.surface), config.window_size),
        )
        for offset, pattern in kept
    ]


def scan_texts(
    texts: Iterable[TextRecord],
    automaton: MatcherAutomaton,
    config: ScanConfig,
    workers: int = 1,
) -> list[ReferenceRecord]:
    """Scan many texts, merging results in deterministic (text_id, offset) order."""
    texts = list(texts)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            per_text = list(pool.map(lambda t: scan_text(t, automaton, config), texts))
    else:
        per_text = [scan_text(t, automaton, config) for t in texts]
    ordered = sorted(zip(texts, per_text), key=lambda pair: pair[0].text_id)
    return [record for _, records in ordered for record in records]
