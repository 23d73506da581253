import random

import numpy as np
import pytest

from refnet.dataset import ReferenceSet
from refnet.errors import UndefinedMetricError
from refnet.graphs import (
    ReferenceGraph,
    betweenness_centrality,
    build_graph,
    degree_centrality,
    louvain_partition,
    modularity,
    reciprocity,
    top_share,
    weighted_totals,
)
from refnet.matching import ReferenceRecord

from oracles import (
    best_partition_exhaustive,
    brute_betweenness,
    brute_modularity,
    brute_reciprocity,
    random_digraph,
)


def ref(citing, cited, n=0):
    return ReferenceRecord(citing_author_id=citing, cited_author_id=cited, text_id="t", offset=n, context="c")


def graph_from(n, weights):
    W = np.zeros((n, n), dtype=np.int64)
    for (u, v), w in weights.items():
        W[u, v] = w
    return ReferenceGraph(nodes=tuple(f"n{i}" for i in range(n)), weights=W)


TRIANGLES = {(0, 1): 1, (1, 2): 1, (2, 0): 1, (3, 4): 1, (4, 5): 1, (5, 3): 1}
K4 = {(u, v): 1 for u in range(4) for v in range(4) if u != v}


class TestBuildGraph:
    def test_empty_set_gives_empty_graph(self):
        g = build_graph(ReferenceSet.from_records("expanded", []))
        assert g.nodes == ()
        assert g.weights.shape == (0, 0)

    def test_weights_count_records(self):
        records = [ref("a", "b", 0), ref("a", "b", 1), ref("a", "b", 2), ref("b", "a", 3)]
        g = build_graph(ReferenceSet.from_records("expanded", records))
        ia, ib = g.nodes.index("a"), g.nodes.index("b")
        assert g.weights[ia, ib] == 3
        assert g.weights[ib, ia] == 1

    def test_matrix_equals_independent_tally(self):
        rng = random.Random(17)
        authors = [f"a{i}" for i in range(5)]
        records = []
        for n in range(20):
            citing, cited = rng.sample(authors, 2)
            records.append(ref(citing, cited, n))
        tally: dict[tuple[str, str], int] = {}
        for r in records:
            tally[(r.citing_author_id, r.cited_author_id)] = tally.get((r.citing_author_id, r.cited_author_id), 0) + 1
        g = build_graph(ReferenceSet.from_records("expanded", records))
        for i, u in enumerate(g.nodes):
            for j, v in enumerate(g.nodes):
                assert g.weights[i, j] == tally.get((u, v), 0)


class TestDegrees:
    def test_star(self):
        records = [ref(f"s{i}", "p", n=i) for i in range(4)]
        g = build_graph(ReferenceSet.from_records("expanded", records))
        in_deg = degree_centrality(g, "in")
        in_total, out_total = weighted_totals(g)
        assert in_deg["p"] == 4
        assert out_total["p"] == 0
        assert all(in_deg[f"s{i}"] == 0 for i in range(4))

    def test_degrees_are_unique_counts_not_weights(self):
        records = [ref("a", "b", 0), ref("a", "b", 1), ref("c", "b", 2)]
        g = build_graph(ReferenceSet.from_records("expanded", records))
        assert degree_centrality(g, "in")["b"] == 2
        in_total, _ = weighted_totals(g)
        assert in_total["b"] == 3

    def test_random_graphs_match_nonzero_row_col_counts(self):
        rng = random.Random(23)
        for _ in range(30):
            n = rng.randint(2, 8)
            weights = random_digraph(rng, n, 0.4)
            g = graph_from(n, weights)
            in_deg = degree_centrality(g, "in")
            out_deg = degree_centrality(g, "out")
            for v in range(n):
                assert in_deg[f"n{v}"] == sum(1 for (a, b) in weights if b == v)
                assert out_deg[f"n{v}"] == sum(1 for (a, b) in weights if a == v)

    def test_conservation(self):
        rng = random.Random(29)
        records = [ref(f"a{rng.randint(0, 6)}", f"b{rng.randint(0, 6)}", n) for n in range(200)]
        refs = ReferenceSet.from_records("expanded", records)
        g = build_graph(refs)
        in_total, out_total = weighted_totals(g)
        assert sum(in_total.values()) == sum(out_total.values()) == len(records)


class TestBetweenness:
    def test_directed_path_middle_node(self):
        g = graph_from(3, {(0, 1): 1, (1, 2): 1})
        assert betweenness_centrality(g) == {"n0": 0.0, "n1": 1.0, "n2": 0.0}

    def test_directed_four_cycle(self):
        # Exhaustive enumeration: each node lies on the unique shortest path
        # of three ordered pairs (one at distance 2, two at distance 3).
        g = graph_from(4, {(0, 1): 1, (1, 2): 1, (2, 3): 1, (3, 0): 1})
        got = betweenness_centrality(g)
        want = brute_betweenness([0, 1, 2, 3], {(0, 1), (1, 2), (2, 3), (3, 0)})
        assert got == {f"n{v}": pytest.approx(want[v], abs=1e-12) for v in range(4)}
        assert all(v == pytest.approx(3.0) for v in got.values())

    def test_random_digraphs_match_enumeration_oracle(self):
        rng = random.Random(41)
        for _ in range(120):
            n = rng.randint(2, 6)
            weights = random_digraph(rng, n, rng.uniform(0.15, 0.7))
            g = graph_from(n, weights)
            got = betweenness_centrality(g)
            want = brute_betweenness(list(range(n)), set(weights))
            for v in range(n):
                assert abs(got[f"n{v}"] - want[v]) <= 1e-9

    def test_normalized_divides_by_pair_count(self):
        g = graph_from(4, {(0, 1): 1, (1, 2): 1, (2, 3): 1, (3, 0): 1})
        raw = betweenness_centrality(g)
        norm = betweenness_centrality(g, normalized=True)
        assert norm["n1"] == pytest.approx(raw["n1"] / 6)

    def test_parallel_equals_sequential(self):
        rng = random.Random(43)
        weights = random_digraph(rng, 12, 0.3)
        g = graph_from(12, weights)
        assert betweenness_centrality(g, workers=4) == betweenness_centrality(g, workers=1)


class TestReciprocity:
    def test_two_of_three_edges_mutual(self):
        g = graph_from(3, {(0, 1): 2, (1, 0): 1, (0, 2): 5})
        assert reciprocity(g) == pytest.approx(2 / 3)

    def test_zero_edges_is_undefined(self):
        with pytest.raises(UndefinedMetricError):
            reciprocity(graph_from(3, {}))

    def test_random_graphs_match_brute_force(self):
        rng = random.Random(47)
        for _ in range(60):
            n = rng.randint(2, 8)
            weights = random_digraph(rng, n, rng.uniform(0.2, 0.7))
            if not weights:
                continue
            g = graph_from(n, weights)
            assert reciprocity(g) == brute_reciprocity(set(weights))


class TestModularity:
    def test_single_community_is_zero(self):
        rng = random.Random(53)
        for _ in range(40):
            n = rng.randint(2, 8)
            weights = random_digraph(rng, n, rng.uniform(0.2, 0.7))
            if not weights:
                continue
            g = graph_from(n, weights)
            assert abs(modularity(g, {f"n{i}": 0 for i in range(n)})) <= 1e-12

    def test_two_disconnected_triangles_natural_partition(self):
        g = graph_from(6, TRIANGLES)
        part = {f"n{i}": (0 if i < 3 else 1) for i in range(6)}
        assert modularity(g, part) == pytest.approx(0.5, abs=1e-12)

    def test_matches_brute_force_on_random_suite(self):
        rng = random.Random(59)
        for _ in range(60):
            n = rng.randint(2, 8)
            weights = random_digraph(rng, n, rng.uniform(0.2, 0.7))
            if not weights:
                continue
            g = graph_from(n, weights)
            comm = {i: rng.randint(0, 3) for i in range(n)}
            got = modularity(g, {f"n{i}": comm[i] for i in range(n)})
            assert got == pytest.approx(brute_modularity(n, weights, comm), abs=1e-12)

    def test_zero_weight_is_undefined(self):
        with pytest.raises(UndefinedMetricError):
            modularity(graph_from(2, {}), {"n0": 0, "n1": 0})

    def test_partition_must_cover_all_nodes(self):
        g = graph_from(2, {(0, 1): 1})
        with pytest.raises(ValueError):
            modularity(g, {"n0": 0})


class TestLouvain:
    def test_two_triangles_found_and_optimal(self):
        g = graph_from(6, TRIANGLES)
        part = louvain_partition(g, seed=1)
        assert len(set(part.assignment.values())) == 2
        assert part.modularity == pytest.approx(0.5, abs=1e-9)
        best_q, _ = best_partition_exhaustive(6, TRIANGLES)
        assert part.modularity == pytest.approx(best_q, abs=1e-9)

    def test_k4_collapses_to_one_community(self):
        g = graph_from(4, K4)
        part = louvain_partition(g, seed=1)
        assert len(set(part.assignment.values())) == 1
        assert part.modularity == pytest.approx(0.0, abs=1e-12)
        best_q, _ = best_partition_exhaustive(4, K4)
        assert best_q == pytest.approx(0.0, abs=1e-12)

    def test_phases_are_monotone_and_beat_singletons(self):
        rng = random.Random(61)
        for _ in range(40):
            n = rng.randint(3, 12)
            weights = random_digraph(rng, n, rng.uniform(0.15, 0.5))
            if not weights:
                continue
            g = graph_from(n, weights)
            part = louvain_partition(g, seed=rng.randint(0, 100))
            phases = part.phase_modularity
            assert all(phases[i] <= phases[i + 1] + 1e-12 for i in range(len(phases) - 1))
            singleton_q = modularity(g, {f"n{i}": i for i in range(n)})
            assert part.modularity >= singleton_q - 1e-12
            assert part.modularity == pytest.approx(modularity(g, part.assignment), abs=1e-12)

    def test_fixed_seed_is_reproducible_across_ten_runs(self):
        rng = random.Random(67)
        weights = random_digraph(rng, 14, 0.3)
        g = graph_from(14, weights)
        runs = [louvain_partition(g, seed=5) for _ in range(10)]
        assert all(r.assignment == runs[0].assignment for r in runs)
        assert all(r.modularity == runs[0].modularity for r in runs)

    def test_zero_edges_is_undefined(self):
        with pytest.raises(UndefinedMetricError):
            louvain_partition(graph_from(3, {}))

    def test_permutation_invariance_of_metrics(self):
        rng = random.Random(71)
        weights = random_digraph(rng, 8, 0.4)
        g = graph_from(8, weights)
        perm = list(range(8))
        rng.shuffle(perm)
        # Relabel node i as m{perm[i]} and rebuild.
        remap = {f"n{i}": f"m{perm[i]}" for i in range(8)}
        permuted_weights = {(perm[u], perm[v]): w for (u, v), w in weights.items()}
        W = np.zeros((8, 8), dtype=np.int64)
        for (u, v), w in permuted_weights.items():
            W[u, v] = w
        g2 = ReferenceGraph(nodes=tuple(f"m{i}" for i in range(8)), weights=W)
        b1 = betweenness_centrality(g)
        b2 = betweenness_centrality(g2)
        for node, score in b1.items():
            assert b2[remap[node]] == pytest.approx(score, abs=1e-12)
        if weights:
            assert reciprocity(g) == pytest.approx(reciprocity(g2), abs=1e-15)


class TestTopShare:
    def test_single_receiver_gets_everything(self):
        records = [ref(f"s{i}", "p", i) for i in range(5)]
        g = build_graph(ReferenceSet.from_records("expanded", records))
        assert top_share(g, {"p"}) == pytest.approx(1.0)

    def test_targets_with_seven_of_thirty_five(self):
        records = []
        n = 0
        for _ in range(7):
            records.append(ref("x", "star", n))
            n += 1
        for i in range(28):
            records.append(ref("x", f"minor{i}", n))
            n += 1
        g = build_graph(ReferenceSet.from_records("expanded", records))
        assert top_share(g, {"star"}) == pytest.approx(0.2)

    def test_all_nodes_share_is_exactly_one(self):
        rng = random.Random(73)
        records = [ref(f"a{rng.randint(0, 5)}", f"b{rng.randint(0, 5)}", n) for n in range(60)]
        g = build_graph(ReferenceSet.from_records("expanded", records))
        assert top_share(g, set(g.nodes)) == 1.0

    def test_zero_edges_is_undefined(self):
        with pytest.raises(UndefinedMetricError):
            top_share(graph_from(2, {}), {"n0"})
