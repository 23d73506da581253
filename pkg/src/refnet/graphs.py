"""Weighted directed reference graphs and the metric suite: weighted totals,
unique-counterpart degree centralities, Brandes betweenness, reciprocity,
modularity, Louvain communities, and concentration shares.

Betweenness treats edges as unweighted directed links (an edge exists where
the weight is positive). Modularity and Louvain run on the symmetrized
weighted projection W + W^T, since the partition quality function is defined
for undirected graphs.
"""

from __future__ import annotations

import json
import random
from collections import deque
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping

import numpy as np

from .dataset import ReferenceSet
from .errors import UndefinedMetricError


@dataclass(frozen=True)
class ReferenceGraph:
    nodes: tuple[str, ...]
    weights: np.ndarray  # weights[i][j] = references from nodes[i] to nodes[j]

    def __post_init__(self) -> None:
        n = len(self.nodes)
        if self.weights.shape != (n, n):
            raise ValueError(f"weight matrix shape {self.weights.shape} does not match {n} nodes")
        if len(set(self.nodes)) != n:
            raise ValueError("node list contains duplicates")
        if np.any(np.diag(self.weights) != 0):
            raise ValueError("self-references must be excluded upstream (nonzero diagonal)")
        if np.any(self.weights < 0):
            raise ValueError("weights must be non-negative")

    @property
    def n(self) -> int:
        return len(self.nodes)

    def index(self, node: str) -> int:
        return self.nodes.index(node)

    def edge_count(self) -> int:
        return int(np.count_nonzero(self.weights))

    def total_weight(self) -> int:
        return int(self.weights.sum())


@dataclass(frozen=True)
class CommunityPartition:
    assignment: dict[str, int]
    modularity: float
    # Q after each completed Louvain phase pair (local moves + aggregation);
    # non-decreasing by construction.
    phase_modularity: tuple[float, ...] = ()


@dataclass(frozen=True)
class MetricsReport:
    in_total: dict[str, int]
    out_total: dict[str, int]
    in_degree: dict[str, int]
    out_degree: dict[str, int]
    betweenness: dict[str, float]
    reciprocity: float | None
    partition: CommunityPartition | None
    top_shares: dict[str, float]


def build_graph(refs: ReferenceSet) -> ReferenceGraph:
    """W[i][j] = number of records citing=i, cited=j, over authors with at
    least one incident record."""
    nodes = tuple(sorted({r.citing_author_id for r in refs.records} | {r.cited_author_id for r in refs.records}))
    index = {node: i for i, node in enumerate(nodes)}
    weights = np.zeros((len(nodes), len(nodes)), dtype=np.int64)
    for r in refs.records:
        weights[index[r.citing_author_id], index[r.cited_author_id]] += 1
    return ReferenceGraph(nodes=nodes, weights=weights)


def weighted_totals(g: ReferenceGraph) -> tuple[dict[str, int], dict[str, int]]:
    """(in_total, out_total): weighted sums of received/made references."""
    in_t = g.weights.sum(axis=0)
    out_t = g.weights.sum(axis=1)
    return (
        {node: int(in_t[i]) for i, node in enumerate(g.nodes)},
        {node: int(out_t[i]) for i, node in enumerate(g.nodes)},
    )


def degree_centrality(g: ReferenceGraph, direction: str) -> dict[str, int]:
    """Unique counterpart counts: in-degree(v) = |{u : W[u][v] > 0}|."""
    if direction not in ("in", "out"):
        raise ValueError("direction must be 'in' or 'out'")
    axis = 0 if direction == "in" else 1
    counts = np.count_nonzero(g.weights > 0, axis=axis)
    return {node: int(counts[i]) for i, node in enumerate(g.nodes)}


def _adjacency_lists(g: ReferenceGraph) -> list[list[int]]:
    return [list(np.nonzero(g.weights[i] > 0)[0]) for i in range(g.n)]


def _brandes_from_source(source: int, adj: list[list[int]], n: int, scores: np.ndarray) -> None:
    sigma = [0] * n
    dist = [-1] * n
    preds: list[list[int]] = [[] for _ in range(n)]
    sigma[source] = 1
    dist[source] = 0
    order: list[int] = []
    queue: deque[int] = deque([source])
    while queue:
        v = queue.popleft()
        order.append(v)
        for w in adj[v]:
            if dist[w] < 0:
                dist[w] = dist[v] + 1
                queue.append(w)
            if dist[w] == dist[v] + 1:
                sigma[w] += sigma[v]
                preds[w].append(v)
    delta = [0.0] * n
    for w in reversed(order):
        for v in preds[w]:
            delta[v] += (sigma[v] / sigma[w]) * (1.0 + delta[w])
        if w != source:
            scores[w] += delta[w]


def betweenness_centrality(g: ReferenceGraph, normalized: bool = False, workers: int = 1) -> dict[str, float]:
    """Brandes accumulation over single-source BFS passes (edges as unit hops).

    Unnormalized pair counts by default; ``normalized=True`` divides by
    (n-1)(n-2), the directed pair count.
    """
    n = g.n
    adj = _adjacency_lists(g)

    def contribution(s: int) -> np.ndarray:
        arr = np.zeros(n)
        _brandes_from_source(s, adj, n, arr)
        return arr

    if workers > 1 and n > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            contribs = list(pool.map(contribution, range(n)))
    else:
        contribs = [contribution(s) for s in range(n)]
    scores = np.zeros(n)
    for contrib in contribs:  # fixed source-order merge: identical result for any worker count
        scores += contrib
    if normalized and n > 2:
        scores = scores / ((n - 1) * (n - 2))
    return {node: float(scores[i]) for i, node in enumerate(g.nodes)}


def reciprocity(g: ReferenceGraph) -> float:
    """Fraction of directed edges whose reverse edge also exists."""
    present = g.weights > 0
    edges = int(present.sum())
    if edges == 0:
        raise UndefinedMetricError("reciprocity is undefined for a graph with no edges")
    mutual = int((present & present.T).sum())
    return mutual / edges


def _symmetrize(g: ReferenceGraph) -> np.ndarray:
    return (g.weights + g.weights.T).astype(np.float64)


def modularity(g: ReferenceGraph, partition: Mapping[str, int], resolution: float = 1.0) -> float:
    """Newman modularity of the partition on the symmetrized projection."""
    missing = [node for node in g.nodes if node not in partition]
    if missing:
        raise ValueError(f"partition does not cover nodes: {missing[:5]}")
    sym = _symmetrize(g)
    two_m = sym.sum()
    if two_m == 0:
        raise UndefinedMetricError("modularity is undefined for a graph with no edges")
    comm = np.array([partition[node] for node in g.nodes])
    k = sym.sum(axis=1)
    q = 0.0
    for c in np.unique(comm):
        members = comm == c
        q += sym[np.ix_(members, members)].sum() / two_m
        q -= resolution * (k[members].sum() / two_m) ** 2
    return float(q)


class _LouvainState:
    """Community bookkeeping for one Louvain level (sigma_in / sigma_tot sums)."""

    def __init__(self, sym: np.ndarray, resolution: float):
        self.sym = sym
        self.n = sym.shape[0]
        self.resolution = resolution
        self.two_m = sym.sum()
        self.k = sym.sum(axis=1)
        self.node_comm = list(range(self.n))
        self.sigma_tot = [float(self.k[i]) for i in range(self.n)]
        self.neighbors = [np.nonzero(sym[i])[0] for i in range(self.n)]

    def neighbor_weights(self, v: int) -> dict[int, float]:
        """Weight from v to each neighboring community (self-loop excluded)."""
        out: dict[int, float] = {}
        for w in self.neighbors[v]:
            if w == v:
                continue
            c = self.node_comm[w]
            out[c] = out.get(c, 0.0) + float(self.sym[v, w])
        return out

    def local_moves(self, order: list[int]) -> bool:
        """Sweep nodes until a full pass makes no move; True if any node moved."""
        improved = False
        moved = True
        while moved:
            moved = False
            for v in order:
                home = self.node_comm[v]
                k_v = float(self.k[v])
                links = self.neighbor_weights(v)
                # Detach v, then evaluate re-insertion into every candidate.
                self.sigma_tot[home] -= k_v
                self.node_comm[v] = -1
                candidates = dict(links)
                candidates.setdefault(home, 0.0)
                home_gain = _insert_gain(candidates[home], self.sigma_tot[home], k_v, self.two_m, self.resolution)
                best_comm, best_gain = home, home_gain
                for c in sorted(candidates):  # ascending id: lowest wins equal gains
                    gain = _insert_gain(candidates[c], self.sigma_tot[c], k_v, self.two_m, self.resolution)
                    if gain > best_gain + 1e-12:
                        best_comm, best_gain = c, gain
                if best_gain <= home_gain + 1e-12:
                    best_comm = home  # only strictly positive moves
                self.node_comm[v] = best_comm
                self.sigma_tot[best_comm] += k_v
                if best_comm != home:
                    moved = True
                    improved = True
        return improved

    def compact_assignment(self) -> list[int]:
        """Renumber communities 0..k-1 by lowest member node index."""
        first_member: dict[int, int] = {}
        for v in range(self.n):
            c = self.node_comm[v]
            if c not in first_member:
                first_member[c] = v
        relabel = {c: rank for rank, (c, _) in enumerate(sorted(first_member.items(), key=lambda cv: cv[1]))}
        return [relabel[self.node_comm[v]] for v in range(self.n)]


def _insert_gain(k_v_to_c: float, sigma_tot_c: float, k_v: float, two_m: float, resolution: float) -> float:
    # Modularity gain of inserting detached node v into community c, scaled by
    # m and with terms constant across candidates dropped.
    return k_v_to_c - resolution * sigma_tot_c * k_v / two_m


def louvain_partition(g: ReferenceGraph, seed: int = 0, resolution: float = 1.0) -> CommunityPartition:
    """Greedy modularity optimization on the symmetrized projection.

    Node visit order is seeded for reproducibility; equal-gain moves prefer
    the lowest community id. The returned modularity is the plain (gamma=1)
    value of the final assignment.
    """
    if g.edge_count() == 0:
        raise UndefinedMetricError("Louvain is undefined for a graph with no edges")
    rng = random.Random(seed)
    sym = _symmetrize(g)
    mapping = list(range(g.n))  # original node index -> current supernode
    phase_q: list[float] = []
    while True:
        state = _LouvainState(sym, resolution)
        order = list(range(state.n))
        rng.shuffle(order)
        improved = state.local_moves(order)
        compact = state.compact_assignment()
        mapping = [compact[mapping[i]] for i in range(g.n)]
        assignment = {node: mapping[i] for i, node in enumerate(g.nodes)}
        phase_q.append(modularity(g, assignment))
        if not improved:
            break
        # Aggregate: communities become the next level's nodes.
        n_comm = max(compact) + 1
        agg = np.zeros((n_comm, n_comm))
        for i in range(state.n):
            for j in np.nonzero(sym[i])[0]:
                agg[compact[i], compact[j]] += sym[i, j]
        if n_comm == state.n:
            break
        sym = agg
    return CommunityPartition(assignment=assignment, modularity=phase_q[-1], phase_modularity=tuple(phase_q))


def top_share(g: ReferenceGraph, targets: Iterable[str]) -> float:
    """Share of all reference weight received by the target nodes."""
    total = g.total_weight()
    if total == 0:
        raise UndefinedMetricError("top share is undefined for a graph with no edges")
    targets = set(targets)
    in_totals = g.weights.sum(axis=0)
    got = sum(int(in_totals[i]) for i, node in enumerate(g.nodes) if node in targets)
    return got / total


def compute_metrics(
    g: ReferenceGraph,
    *,
    seed: int = 0,
    resolution: float = 1.0,
    top_sets: Mapping[str, Iterable[str]] | None = None,
    betweenness_workers: int = 1,
) -> MetricsReport:
    """The full per-graph metric suite in one pass."""
    in_total, out_total = weighted_totals(g)
    has_edges = g.edge_count() > 0
    partition = louvain_partition(g, seed=seed, resolution=resolution) if has_edges else None
    shares = {}
    if top_sets and has_edges:
        shares = {name: top_share(g, nodes) for name, nodes in top_sets.items()}
    return MetricsReport(
        in_total=in_total,
        out_total=out_total,
        in_degree=degree_centrality(g, "in"),
        out_degree=degree_centrality(g, "out"),
        betweenness=betweenness_centrality(g, workers=betweenness_workers),
        reciprocity=reciprocity(g) if has_edges else None,
        partition=partition,
        top_shares=shares,
    )


def metrics_to_json(g: ReferenceGraph, report: MetricsReport) -> dict:
    per_node = [
        {
            "author_id": node,
            "in_total": report.in_total[node],
            "out_total": report.out_total[node],
            "in_degree": report.in_degree[node],
            "out_degree": report.out_degree[node],
            "betweenness": report.betweenness[node],
            "community": report.partition.assignment[node] if report.partition else None,
        }
        for node in g.nodes
    ]
    return {
        "nodes": per_node,
        "reciprocity": report.reciprocity,
        "modularity": report.partition.modularity if report.partition else None,
        "top_shares": report.top_shares,
    }


def write_adjacency_dense_csv(path: Path, g: ReferenceGraph) -> None:
    """Dense matrix with the node list as header row and column."""
    import csv

    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f)
        writer.writerow(["", *g.nodes])
        for i, node in enumerate(g.nodes):
            writer.writerow([node, *(int(w) for w in g.weights[i])])


def write_adjacency_triples_csv(path: Path, g: ReferenceGraph) -> None:
    import csv

    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f)
        writer.writerow(["citing", "cited", "weight"])
        for i, citing in enumerate(g.nodes):
            for j in np.nonzero(g.weights[i])[0]:
                writer.writerow([citing, g.nodes[j], int(g.weights[i, j])])


def write_metrics_json(path: Path, reports: Mapping[str, tuple[ReferenceGraph, MetricsReport]]) -> None:
    payload = {"datasets": {name: metrics_to_json(g, report) for name, (g, report) in sorted(reports.items())}}
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")
