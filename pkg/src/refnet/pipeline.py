"""Pipeline stages over on-disk artifacts.

Each stage reads its predecessor's persisted artifact and writes its own, so
stages can be re-run independently and the whole pipeline is deterministic
given the same cache:

    fetch    -> cache/, authors.csv, texts.csv, reports/dropped.csv
    scan     -> references.csv
    classify -> classified.csv
    analyze  -> datasets/, metrics.json, adjacency/
    export   -> bundle.json (+ .gz)
"""

from __future__ import annotations

import csv
import hashlib
import json
import logging
import os
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from pathlib import Path

from . import __version__
from .bundle import export_bundle, write_bundle
from .catalog import (
    CATEGORIES,
    DEFAULT_BASE_URL,
    CatalogEntry,
    download_texts,
    fetch_catalog,
    snapshot_fetched_at,
    text_cache_path,
)
from .corpus import (
    DroppedItem,
    author_id_for,
    build_author_table,
    build_text_record,
    display_name_from_catalog,
    read_author_csv,
    write_author_csv,
    write_dropped_report,
)
from .dataset import (
    ReferenceSet,
    apply_temporal_filter,
    read_reference_csv,
    read_validated_list,
    restrict_to_validated,
    write_reference_csv,
    write_variant_manifest,
)
from .errors import EncodingError, StageError, UsageError
from .graphs import (
    CommunityPartition,
    MetricsReport,
    build_graph,
    compute_metrics,
    write_adjacency_dense_csv,
    write_adjacency_triples_csv,
    write_metrics_json,
)
from .matching import ScanConfig, compile_patterns, scan_texts
from .topics import (
    DEFAULT_THRESHOLD,
    TOPIC_LABELS,
    LexiconProvider,
    RemoteEmbeddingProvider,
    TopicConfig,
    build_topic_subsets,
    classify_references,
    read_classified_csv,
    write_classified_csv,
)

log = logging.getLogger(__name__)

STAGES = ("fetch", "scan", "classify", "analyze", "export")

CATALOG_URL_ENV = "REFNET_CATALOG_URL"

_TEXTS_CSV_FIELDS = ["text_id", "source_id", "author_id", "title", "category", "charset", "raw_length", "body_length"]


@dataclass
class PipelineConfig:
    workdir: Path = Path("work")
    base_url: str = DEFAULT_BASE_URL
    categories: list[str] = field(default_factory=lambda: ["philosophy"])
    per_category_limit: int | None = None
    validated_list: Path | None = None
    exclusion_names: list[str] = field(default_factory=list)
    ambiguous_names: list[str] = field(default_factory=list)
    single_name_authors: list[str] = field(default_factory=list)
    window_size: int = 150
    per_text_cap: int = 250
    boundary_rule: str = "word_boundary_plus_possessive"
    cap_scope: str = "per_cited_author"
    provider: str = "lexicon"
    lexicon_dir: Path | None = None
    thresholds: dict[str, float] = field(default_factory=lambda: {l: DEFAULT_THRESHOLD for l in TOPIC_LABELS})
    prompts: dict[str, str] = field(default_factory=dict)
    classify_dataset: str = "auto"  # auto | main | expanded
    seed: int = 0
    resolution: float = 1.0
    port: int = 8000
    static_dir: Path | None = None
    download_workers: int = 4
    scan_workers: int = 1
    rate_limit_s: float = 0.0

    @staticmethod
    def from_file(path: Path) -> "PipelineConfig":
        try:
            raw = json.loads(Path(path).read_text(encoding="utf-8"))
        except FileNotFoundError as exc:
            raise UsageError(f"config file not found: {path}") from exc
        except ValueError as exc:
            raise UsageError(f"config file {path} is not valid JSON: {exc}") from exc
        known = set(PipelineConfig.__dataclass_fields__)
        unknown = set(raw) - known
        if unknown:
            raise UsageError(f"unknown config keys: {sorted(unknown)}")
        config = PipelineConfig(**{k: v for k, v in raw.items()})
        base = Path(path).parent
        for attr in ("workdir", "validated_list", "lexicon_dir", "static_dir"):
            value = getattr(config, attr)
            if value is not None:
                value = Path(value)
                setattr(config, attr, value if value.is_absolute() else base / value)
        if CATALOG_URL_ENV in os.environ and "base_url" not in raw:
            config.base_url = os.environ[CATALOG_URL_ENV]
        thresholds = {l: DEFAULT_THRESHOLD for l in TOPIC_LABELS}
        thresholds.update(raw.get("thresholds", {}))
        config.thresholds = thresholds
        return config

    def validate(self) -> None:
        if not self.categories:
            raise UsageError("categories must be non-empty")
        bad = [c for c in self.categories if c not in CATEGORIES]
        if bad:
            raise UsageError(f"unknown categories {bad}; valid: {list(CATEGORIES)}")
        if self.per_category_limit is not None and self.per_category_limit < 1:
            raise UsageError("per_category_limit must be >= 1")
        if self.window_size < 0:
            raise UsageError("window_size must be >= 0")
        if self.per_text_cap < 1:
            raise UsageError("per_text_cap must be >= 1")
        if self.boundary_rule not in ("word_boundary", "word_boundary_plus_possessive"):
            raise UsageError(f"invalid boundary_rule {self.boundary_rule!r}")
        if self.cap_scope not in ("per_cited_author", "per_text_total"):
            raise UsageError(f"invalid cap_scope {self.cap_scope!r}")
        if self.provider not in ("lexicon", "remote"):
            raise UsageError(f"invalid provider {self.provider!r}")
        if self.classify_dataset not in ("auto", "main", "expanded"):
            raise UsageError(f"invalid classify_dataset {self.classify_dataset!r}")
        unknown = set(self.thresholds) - set(TOPIC_LABELS)
        if unknown:
            raise UsageError(f"thresholds for unknown topics: {sorted(unknown)}")
        if not 1 <= self.port <= 65535:
            raise UsageError(f"port {self.port} out of range [1, 65535]")
        for attr in ("validated_list", "lexicon_dir", "static_dir"):
            value = getattr(self, attr)
            if value is not None and not Path(value).exists():
                raise UsageError(f"{attr} path does not exist: {value}")

    def config_hash(self) -> str:
        data = asdict(self)
        data = {k: str(v) if isinstance(v, Path) else v for k, v in data.items()}
        canonical = json.dumps(data, sort_keys=True, default=str)
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()[:16]

    # Artifact paths
    @property
    def cache_dir(self) -> Path:
        return self.workdir / "cache"

    @property
    def authors_csv(self) -> Path:
        return self.workdir / "authors.csv"

    @property
    def texts_csv(self) -> Path:
        return self.workdir / "texts.csv"

    @property
    def dropped_csv(self) -> Path:
        return self.workdir / "reports" / "dropped.csv"

    @property
    def references_csv(self) -> Path:
        return self.workdir / "references.csv"

    @property
    def classified_csv(self) -> Path:
        return self.workdir / "classified.csv"

    @property
    def datasets_dir(self) -> Path:
        return self.workdir / "datasets"

    @property
    def adjacency_dir(self) -> Path:
        return self.workdir / "adjacency"

    @property
    def metrics_json(self) -> Path:
        return self.workdir / "metrics.json"

    @property
    def bundle_json(self) -> Path:
        return self.workdir / "bundle.json"


def _require(path: Path, producer: str) -> None:
    if not path.exists():
        raise StageError(f"missing prerequisite artifact {path}; run the {producer!r} stage first")


def _variant_stem(variant: str) -> str:
    return variant.replace(":", "-")


def stage_fetch(config: PipelineConfig) -> list[Path]:
    config.workdir.mkdir(parents=True, exist_ok=True)
    (config.workdir / "reports").mkdir(exist_ok=True)
    entries = fetch_catalog(
        list(config.categories),
        config.per_category_limit,
        base_url=config.base_url,
        cache_dir=config.cache_dir,
    )
    downloaded, skipped = download_texts(
        entries,
        config.cache_dir,
        workers=config.download_workers,
        rate_limit_s=config.rate_limit_s,
    )
    authors, dropped = build_author_table(
        downloaded,
        exclusion_list=config.exclusion_names,
        ambiguous_list=config.ambiguous_names,
        single_name_list=config.single_name_authors,
    )
    dropped.extend(DroppedItem("text", f"{e.source_id} {e.title}", reason) for e, reason in skipped)
    author_ids = {a.author_id for a in authors}

    rows = []
    seen_titles: set[tuple[str, str]] = set()
    for entry in downloaded:
        if not entry.authors:
            continue
        primary = entry.authors[0]
        author_id = author_id_for(display_name_from_catalog(primary.name), primary.birth_year)
        if author_id not in author_ids:
            dropped.append(DroppedItem("text", f"{entry.source_id} {entry.title}", "author dropped"))
            continue
        title_key = (author_id, entry.title.strip().lower())
        if title_key in seen_titles:
            dropped.append(DroppedItem("text", f"{entry.source_id} {entry.title}", "duplicate work"))
            continue
        seen_titles.add(title_key)
        raw = _decode(text_cache_path(config.cache_dir, entry.source_id).read_bytes(), entry.text_charset(), entry.source_id)
        record = build_text_record(entry, author_id, raw)
        rows.append(
            {
                "text_id": record.text_id,
                "source_id": entry.source_id,
                "author_id": author_id,
                "title": entry.title,
                "category": entry.category,
                "charset": entry.text_charset(),
                "raw_length": record.raw_length,
                "body_length": record.body_length,
            }
        )
    rows.sort(key=lambda r: r["text_id"])

    write_author_csv(config.authors_csv, authors)
    with open(config.texts_csv, "w", newline="", encoding="utf-8") as f:
        writer = csv.DictWriter(f, fieldnames=_TEXTS_CSV_FIELDS)
        writer.writeheader()
        writer.writerows(rows)
    write_dropped_report(config.dropped_csv, dropped)
    log.info("fetch: %d texts across %d authors (%d dropped items)", len(rows), len(authors), len(dropped))
    return [config.authors_csv, config.texts_csv, config.dropped_csv]


def _decode(raw: bytes, charset: str, source_id) -> str:
    try:
        return raw.decode(charset)
    except (UnicodeDecodeError, LookupError) as exc:
        raise EncodingError(f"text {source_id} is not valid {charset}: {exc}") from exc


def _load_text_records(config: PipelineConfig):
    _require(config.texts_csv, "fetch")
    records = []
    with open(config.texts_csv, newline="", encoding="utf-8") as f:
        for row in csv.DictReader(f):
            path = text_cache_path(config.cache_dir, int(row["source_id"]))
            if not path.exists():
                raise StageError(f"missing prerequisite artifact {path}; run the 'fetch' stage first")
            raw = _decode(path.read_bytes(), row["charset"], row["source_id"])
            entry = CatalogEntry(
                source_id=int(row["source_id"]),
                title=row["title"],
                authors=(),
                category=row["category"],
                format_urls={},
            )
            records.append(build_text_record(entry, row["author_id"], raw))
    return records


def stage_scan(config: PipelineConfig) -> list[Path]:
    _require(config.authors_csv, "fetch")
    authors = read_author_csv(config.authors_csv)
    texts = _load_text_records(config)
    automaton = compile_patterns(authors, boundary_rule=config.boundary_rule)  # type: ignore[arg-type]
    scan_config = ScanConfig(
        window_size=config.window_size,
        per_text_target_cap=config.per_text_cap,
        boundary_rule=config.boundary_rule,  # type: ignore[arg-type]
        cap_scope=config.cap_scope,  # type: ignore[arg-type]
    )
    records = scan_texts(texts, automaton, scan_config, workers=config.scan_workers)
    write_reference_csv(config.references_csv, records)
    log.info("scan: %d reference records from %d texts", len(records), len(texts))
    return [config.references_csv]


def _classified_base(config: PipelineConfig) -> ReferenceSet:
    """The reference set the classifier covers (main when a validated list is
    configured, otherwise expanded)."""
    _require(config.references_csv, "scan")
    expanded = ReferenceSet.from_records("expanded", read_reference_csv(config.references_csv))
    which = config.classify_dataset
    if which == "auto":
        which = "main" if config.validated_list else "expanded"
    if which == "expanded":
        return expanded
    if not config.validated_list:
        raise UsageError("classify_dataset='main' requires a validated_list path")
    _require(config.authors_csv, "fetch")
    validated = read_validated_list(config.validated_list)
    author_ids = {a.author_id for a in read_author_csv(config.authors_csv)}
    return restrict_to_validated(expanded, validated, author_ids)


def _make_provider(config: PipelineConfig):
    if config.provider == "remote":
        return RemoteEmbeddingProvider()
    return LexiconProvider(lexicon_dir=config.lexicon_dir)


def stage_classify(config: PipelineConfig) -> list[Path]:
    base = _classified_base(config)
    topic_config = TopicConfig(threshold=config.thresholds, provider_id=config.provider, prompts=config.prompts)
    provider = _make_provider(config)
    classified = classify_references(list(base.records), topic_config, provider)
    write_classified_csv(config.classified_csv, classified)
    log.info("classify: %d records over dataset %r", len(classified), base.variant)
    return [config.classified_csv]


def stage_analyze(config: PipelineConfig) -> list[Path]:
    _require(config.references_csv, "scan")
    _require(config.classified_csv, "classify")
    _require(config.authors_csv, "fetch")
    authors = {a.author_id: a for a in read_author_csv(config.authors_csv)}
    expanded = ReferenceSet.from_records("expanded", read_reference_csv(config.references_csv))

    variants: dict[str, ReferenceSet] = {"expanded": expanded}
    filters: dict[str, list[str]] = {"expanded": []}
    if config.validated_list:
        validated = read_validated_list(config.validated_list)
        main = restrict_to_validated(expanded, validated, set(authors))
        variants["main"] = main
        filters["main"] = ["validated"]
        variants["filtered"] = apply_temporal_filter(main, authors)
        filters["filtered"] = ["validated", "temporal"]
        topic_base = main
    else:
        topic_base = expanded
    classified = read_classified_csv(config.classified_csv)
    for label, subset in build_topic_subsets(classified, topic_base).items():
        variants[f"topic:{label}"] = subset
        filters[f"topic:{label}"] = [*filters.get(topic_base.variant, []), f"topic:{label}"]

    config.datasets_dir.mkdir(parents=True, exist_ok=True)
    config.adjacency_dir.mkdir(parents=True, exist_ok=True)
    written = []
    reports: dict[str, tuple] = {}
    for variant_id in sorted(variants):
        refs = variants[variant_id]
        stem = _variant_stem(variant_id)
        csv_path = config.datasets_dir / f"{stem}.csv"
        write_reference_csv(csv_path, refs.records)
        write_variant_manifest(config.datasets_dir / f"{stem}.manifest.json", refs, csv_path.name, filters[variant_id])
        graph = build_graph(refs)
        report = compute_metrics(
            graph, seed=config.seed, resolution=config.resolution, top_sets=_top_sets(graph)
        )
        reports[variant_id] = (graph, report)
        write_adjacency_dense_csv(config.adjacency_dir / f"{stem}.dense.csv", graph)
        write_adjacency_triples_csv(config.adjacency_dir / f"{stem}.edges.csv", graph)
        written.extend([csv_path, config.datasets_dir / f"{stem}.manifest.json"])
    write_metrics_json(config.metrics_json, reports)
    written.append(config.metrics_json)
    log.info("analyze: %d dataset variants", len(variants))
    return written


def _top_sets(graph) -> dict[str, list[str]]:
    if graph.edge_count() == 0:
        return {}
    in_totals = graph.weights.sum(axis=0)
    ranked = sorted(graph.nodes, key=lambda n: (-int(in_totals[graph.index(n)]), n))
    return {"top_2": ranked[:2], "top_10": ranked[:10]}


def stage_export(config: PipelineConfig) -> list[Path]:
    _require(config.metrics_json, "analyze")
    _require(config.authors_csv, "fetch")
    metrics = json.loads(config.metrics_json.read_text(encoding="utf-8"))
    authors = {a.author_id: a for a in read_author_csv(config.authors_csv)}

    variants: dict[str, tuple[ReferenceSet, MetricsReport]] = {}
    for variant_id, data in metrics["datasets"].items():
        csv_path = config.datasets_dir / f"{_variant_stem(variant_id)}.csv"
        _require(csv_path, "analyze")
        refs = ReferenceSet.from_records(variant_id, read_reference_csv(csv_path))
        report = _report_from_json(data)
        variants[variant_id] = (refs, report)

    bundle = export_bundle(
        variants,
        authors,
        generated_at=_generated_at(config),
        tool_version=__version__,
        config_hash=config.config_hash(),
    )
    write_bundle(config.bundle_json, bundle)
    log.info("export: bundle with %d datasets", len(bundle["datasets"]))
    return [config.bundle_json, Path(str(config.bundle_json) + ".gz")]


def _report_from_json(data: dict) -> MetricsReport:
    nodes = data["nodes"]
    partition = None
    if data.get("modularity") is not None:
        partition = CommunityPartition(
            assignment={n["author_id"]: n["community"] for n in nodes}, modularity=data["modularity"]
        )
    return MetricsReport(
        in_total={n["author_id"]: n["in_total"] for n in nodes},
        out_total={n["author_id"]: n["out_total"] for n in nodes},
        in_degree={n["author_id"]: n["in_degree"] for n in nodes},
        out_degree={n["author_id"]: n["out_degree"] for n in nodes},
        betweenness={n["author_id"]: n["betweenness"] for n in nodes},
        reciprocity=data.get("reciprocity"),
        partition=partition,
        top_shares=data.get("top_shares", {}),
    )


def _generated_at(config: PipelineConfig) -> str:
    """Deterministic bundle timestamp: SOURCE_DATE_EPOCH when set, else the
    catalog snapshot's fetch stamp (stable across offline re-runs)."""
    epoch = os.environ.get("SOURCE_DATE_EPOCH")
    if epoch:
        return datetime.fromtimestamp(int(epoch), tz=timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")
    stamp = snapshot_fetched_at(config.cache_dir, list(config.categories))
    if stamp:
        return stamp
    log.warning("no catalog snapshot stamp found; using fixed epoch for reproducibility")
    return "1970-01-01T00:00:00Z"


_STAGE_FUNCS = {
    "fetch": stage_fetch,
    "scan": stage_scan,
    "classify": stage_classify,
    "analyze": stage_analyze,
    "export": stage_export,
}


def run_pipeline(config: PipelineConfig, stages: list[str]) -> dict[str, list[Path]]:
    """Run the requested stages in canonical order; fail fast on the first error."""
    unknown = [s for s in stages if s not in STAGES]
    if unknown:
        raise UsageError(f"unknown stages {unknown}; valid: {list(STAGES)}")
    if not stages:
        raise UsageError("no stages requested")
    config.validate()
    results: dict[str, list[Path]] = {}
    for stage in STAGES:
        if stage in stages:
            log.info("running stage %r", stage)
            results[stage] = [Path(p) for p in _STAGE_FUNCS[stage](config)]
    return results
