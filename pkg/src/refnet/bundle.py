"""Explorer bundle: one JSON document holding every dataset's node list,
edge list, and per-node totals, consumed by the client-side explorer.

A full run yields eleven datasets: main, the eight topic subsets, filtered,
and expanded.
"""

from __future__ import annotations

import gzip
import json
from pathlib import Path
from typing import Mapping

from .corpus import AuthorRecord
from .dataset import ReferenceSet
from .errors import IntegrityError
from .graphs import MetricsReport, build_graph
from .topics import TOPIC_LABELS

import numpy as np

# Canonical dataset order for a full run.
DATASET_ORDER = ("main", *(f"topic:{label}" for label in TOPIC_LABELS), "filtered", "expanded")


def dataset_label(dataset_id: str) -> str:
    if dataset_id == "main":
        return "Main (validated authors)"
    if dataset_id == "expanded":
        return "Expanded (all matched authors)"
    if dataset_id == "filtered":
        return "Filtered (temporal filter applied)"
    if dataset_id.startswith("topic:"):
        return dataset_id.split(":", 1)[1].capitalize()
    return dataset_id


def export_bundle(
    variants: Mapping[str, tuple[ReferenceSet, MetricsReport]],
    authors: Mapping[str, AuthorRecord],
    *,
    generated_at: str,
    tool_version: str,
    config_hash: str,
) -> dict:
    """Assemble the bundle document; edges sorted by (citing, cited)."""
    if not variants:
        raise ValueError("at least one dataset variant is required")

    ordered_ids = [d for d in DATASET_ORDER if d in variants]
    ordered_ids += sorted(set(variants) - set(ordered_ids))

    datasets = []
    used_authors: set[str] = set()
    for dataset_id in ordered_ids:
        refs, report = variants[dataset_id]
        dangling = refs.author_universe - set(authors)
        if dangling:
            raise IntegrityError(f"dataset {dataset_id!r} references unknown authors: {sorted(dangling)[:5]}")
        graph = build_graph(refs)
        edges = [
            {"citing": graph.nodes[i], "cited": graph.nodes[j], "weight": int(graph.weights[i, j])}
            for i in range(graph.n)
            for j in np.nonzero(graph.weights[i])[0]
        ]
        edges.sort(key=lambda e: (e["citing"], e["cited"]))
        per_node = {
            node: {"in_total": report.in_total[node], "out_total": report.out_total[node]} for node in graph.nodes
        }
        used_authors.update(graph.nodes)
        datasets.append(
            {
                "dataset_id": dataset_id,
                "label": dataset_label(dataset_id),
                "nodes": list(graph.nodes),
                "edges": edges,
                "per_node": per_node,
            }
        )

    roster = [
        {
            "author_id": a.author_id,
            "display_name": a.display_name,
            "birth_year": a.birth_year,
            "death_year": a.death_year,
        }
        for a in sorted(authors.values(), key=lambda a: a.author_id)
        if a.author_id in used_authors
    ]
    return {
        "meta": {"generated_at": generated_at, "tool_version": tool_version, "config_hash": config_hash},
        "authors": roster,
        "datasets": datasets,
    }


def serialize_bundle(bundle: dict) -> str:
    return json.dumps(bundle, indent=1, sort_keys=True) + "\n"


def write_bundle(path: Path, bundle: dict) -> None:
    """bundle.json plus a byte-stable gzip variant alongside."""
    text = serialize_bundle(bundle)
    path.write_text(text, encoding="utf-8")
    with open(str(path) + ".gz", "wb") as f:
        with gzip.GzipFile(fileobj=f, mode="wb", mtime=0) as gz:
            gz.write(text.encode("utf-8"))


def load_bundle(path: Path) -> dict:
    return json.loads(path.read_text(encoding="utf-8"))
