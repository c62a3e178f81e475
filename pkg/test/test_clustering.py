#
# Copyright (C) 2026 pdnet contributors. See LICENSE file for terms.
#
"""
Unit tests for per-verb object clustering and classifier-slot indexing
"""
import os
import unittest
from collections import OrderedDict

import numpy as np

from pdnet.clustering import (ClassifierIndex, ClusterModel, VerbObjectTable, build_cluster_model, build_index,
                              cluster_count, kmeans_cosine, load_manifest, polysemic_verbs, polysemy_stats,
                              route_unseen, save_manifest)
from pdnet.embeddings import EmbeddingTable
from pdnet.errors import (ClusteringError, InvalidCategoryError, InvalidSchemeError, ManifestFormatError,
                          MissingClusterError, UnknownVerbError)
from test.test_helpers import (BENCH_CATEGORIES, BENCH_OBJECTS, BENCH_VERBS, HOI_VP_CSP_SLOTS, HOI_VP_OBJECT_COUNTS,
                               PdNetTest, benchmark_sized_table, toy_embeddings)


def grouped_embeddings(groups, per_group, dim=300, spread=0.05, seed=0):
    """Objects g<i>o<j> scattered tightly around one random direction per group."""
    rng = np.random.default_rng(seed)
    vectors = OrderedDict()
    for g in range(groups):
        center = rng.normal(size=dim)
        center /= np.linalg.norm(center)
        for j in range(per_group):
            vectors["g%do%d" % (g, j)] = center + spread / np.sqrt(dim) * rng.normal(size=dim)
    return vectors


class ClusterCountTest(PdNetTest):
    def test_floor_sqrt(self):
        self.assertEqual([cluster_count(n) for n in (1, 3, 4, 8, 9, 10, 229)], [1, 1, 2, 2, 3, 3, 15])

    def test_floor_sqrt_around_perfect_squares(self):
        for root in range(2, 200):
            square = root * root
            self.assertEqual(cluster_count(square - 1), root - 1)
            self.assertEqual(cluster_count(square), root)
            self.assertEqual(cluster_count(square + root), root)
        self.assertEqual(cluster_count(10 ** 12 - 1), 999999)
        self.assertEqual(cluster_count(np.int64(16)), 4)

    def test_verb_polysemy_benchmark_sizes(self):
        self.assertEqual(sum(HOI_VP_OBJECT_COUNTS), 836)
        self.assertEqual(len(HOI_VP_OBJECT_COUNTS), 15)
        counts = [cluster_count(n) for n in HOI_VP_OBJECT_COUNTS]
        self.assertEqual(sum(counts), HOI_VP_CSP_SLOTS)

    def test_zero_objects(self):
        with self.assertRaises(ClusteringError):
            cluster_count(0)


class KMeansTest(PdNetTest):
    def test_recovers_groups(self):
        vectors = grouped_embeddings(3, 5)
        result = kmeans_cosine(np.stack(list(vectors.values())), 3, seed=1)
        labels = result.assignments.reshape(3, 5)
        for row in labels:
            self.assertEqual(len(set(row)), 1)
        self.assertEqual(len(set(labels[:, 0])), 3)

    def test_near_parallel_pair_shares_a_cluster(self):
        close = np.array([0.995, 0.0999]) / np.linalg.norm([0.995, 0.0999])
        points = np.stack([np.array([1.0, 0.0]), close, np.array([0.0, 1.0])])
        for seed in range(5):
            result = kmeans_cosine(points, 2, seed=seed)
            labels = result.assignments.tolist()
            self.assertEqual(labels[0], labels[1])
            self.assertNotEqual(labels[0], labels[2])
            self.assertEqual(sorted(set(labels)), [0, 1])

    def test_objective_never_increases(self):
        rng = np.random.default_rng(2)
        result = kmeans_cosine(rng.normal(size=(40, 10)), 5, seed=3)
        history = result.objective_history
        for before, after in zip(history, history[1:]):
            self.assertLessEqual(after, before + 1e-9)

    def test_deterministic(self):
        points = np.random.default_rng(5).normal(size=(20, 6))
        a = kmeans_cosine(points, 4, seed=11)
        b = kmeans_cosine(points, 4, seed=11)
        np.testing.assert_array_equal(a.assignments, b.assignments)
        np.testing.assert_array_equal(a.centroids, b.centroids)

    def test_every_cluster_non_empty_and_unit(self):
        points = np.random.default_rng(6).normal(size=(12, 4))
        result = kmeans_cosine(points, 5, seed=0)
        self.assertEqual(sorted(set(result.assignments.tolist())), [0, 1, 2, 3, 4])
        np.testing.assert_allclose(np.linalg.norm(result.centroids, axis=1), np.ones(5))

    def test_k_out_of_range(self):
        points = np.array([[1.0, 0.0], [2.0, 0.0], [0.0, 1.0]])
        with self.assertRaises(ClusteringError):
            kmeans_cosine(points, 3, seed=0)
        with self.assertRaises(ClusteringError):
            kmeans_cosine(points, 0, seed=0)

    def test_zero_row(self):
        with self.assertRaises(ClusteringError):
            kmeans_cosine(np.array([[1.0, 0.0], [0.0, 0.0]]), 1, seed=0)


class VerbObjectTableTest(PdNetTest):
    def test_from_pairs_sorts_and_merges(self):
        table = VerbObjectTable.from_pairs([("ride", "horse"), ("eat", "apple"), ("ride", "bike"), ("ride", "horse")])
        self.assertEqual(table.verbs, ["eat", "ride"])
        self.assertEqual(table.objects_of("ride"), ("bike", "horse"))
        self.assertEqual(len(table), 3)
        self.assertIn(("ride", "bike"), table)
        self.assertNotIn(("eat", "bike"), table)
        self.assertEqual(table.verbs_for("horse"), ["ride"])

    def test_unknown_verb(self):
        with self.assertRaises(UnknownVerbError):
            VerbObjectTable({"ride": ["horse"]}).objects_of("fly")

    def test_duplicate_object(self):
        with self.assertRaises(ClusteringError):
            VerbObjectTable({"ride": ["horse", "horse"]})


class PolysemyStatsTest(PdNetTest):
    def test_counts_and_ratios(self):
        table = VerbObjectTable(OrderedDict([("hold", ["a", "b", "c", "d"]), ("ride", ["a", "b"]), ("eat", ["c"])]))
        rows = polysemy_stats(table, thresholds=(4, 2))
        self.assertEqual([(r.threshold, r.verbs, r.categories) for r in rows], [(4, 1, 4), (2, 2, 6)])
        self.assertAlmostEqual(rows[1].verb_ratio, 2 / 3.0)
        self.assertAlmostEqual(rows[1].category_ratio, 6 / 7.0)

    def test_top_verbs(self):
        table = VerbObjectTable(OrderedDict([("b", ["x", "y"]), ("a", ["x", "y"]), ("c", ["x", "y", "z"])]))
        self.assertEqual(polysemic_verbs(table, top=2), [("c", 3), ("a", 2)])


class ClusterModelTest(PdNetTest):
    def setUp(self):
        self.vectors = grouped_embeddings(2, 3, seed=4)
        self.vectors["ride"] = np.ones(300)
        self.vectors["hold"] = -np.ones(300)
        self.embeddings = EmbeddingTable(self.vectors, 300)
        objects = [o for o in self.vectors if o.startswith("g")]
        self.table = VerbObjectTable(OrderedDict([("ride", objects), ("hold", objects[:2])]))

    def test_build(self):
        model = build_cluster_model(self.table, self.embeddings, seed=0)
        self.assertEqual(model.verbs, ["ride", "hold"])
        self.assertEqual(model.count("ride"), 2)
        self.assertEqual(model.count("hold"), 1)
        self.assertEqual(model.total_clusters(), 3)
        ride = [model.cluster_of("ride", o) for o in self.table.objects_of("ride")]
        self.assertEqual(ride[0], ride[1])
        self.assertEqual(ride[1], ride[2])
        self.assertNotEqual(ride[0], ride[3])
        self.assertEqual(sorted(model.members("ride", ride[0])), ["g0o0", "g0o1", "g0o2"])

    def test_same_seed_same_manifest(self):
        a = build_cluster_model(self.table, self.embeddings, seed=9)
        b = build_cluster_model(self.table, self.embeddings, seed=9)
        self.assertEqual(a.digest(), b.digest())

    def test_duplicate_embeddings_cap_clusters(self):
        vectors = {"ride": np.ones(300)}
        for name in ("a", "b", "c", "d"):
            vectors[name] = np.ones(300)
        table = VerbObjectTable({"ride": ["a", "b", "c", "d"]})
        model = build_cluster_model(table, EmbeddingTable(vectors, 300), seed=0)
        self.assertEqual(model.count("ride"), 1)

    def test_missing_assignment(self):
        model = build_cluster_model(self.table, self.embeddings, seed=0)
        with self.assertRaises(MissingClusterError):
            model.cluster_of("hold", "g1o2")

    def test_manifest_round_trip(self):
        d = self.make_tempdir()
        model = build_cluster_model(self.table, self.embeddings, seed=0)
        path = os.path.join(d, "clusters.json")
        save_manifest(model, path)
        loaded = load_manifest(path)
        self.assertEqual(loaded.digest(), model.digest())
        self.assertEqual(loaded.seed, 0)

    def test_bad_manifest(self):
        d = self.make_tempdir()
        path = os.path.join(d, "clusters.json")
        with open(path, "w") as f:
            f.write('{"format": "something-else"}')
        with self.assertRaises(ManifestFormatError):
            load_manifest(path)
        with open(path, "w") as f:
            f.write("{not json")
        with self.assertRaises(ManifestFormatError):
            load_manifest(path)

    def test_inconsistent_manifest(self):
        manifest = build_cluster_model(self.table, self.embeddings, seed=0).to_manifest()
        manifest["verbs"][0]["count"] = 5
        with self.assertRaises(ManifestFormatError):
            ClusterModel.from_manifest(manifest)


class IndexTest(PdNetTest):
    def setUp(self):
        test = ClusterModelTest("test_build")
        test.setUp()
        self.table = test.table
        self.model = build_cluster_model(test.table, test.embeddings, seed=0)
        self.embeddings = test.embeddings

    def test_schemes(self):
        def check(scheme):
            index = build_index(scheme, self.table, self.model)
            expected = {"SH": 2, "SP": len(self.table), "CSP": self.model.total_clusters()}[scheme]
            if index.num_slots != expected:
                return "%d slots, expected %d" % (index.num_slots, expected)
            used = sorted(set(index.slot(v, o) for v, o in self.table.categories()))
            if used != list(range(expected)):
                return "slots are not dense: %s" % used

        self.run_snippet_and_count_problems(OrderedDict((s, s) for s in ("SH", "SP", "CSP")), check)

    def test_sh_shares_verb_slot(self):
        index = build_index("SH", self.table)
        self.assertEqual(index.slot("ride", "g0o0"), index.slot("ride", "g1o2"))
        self.assertEqual(index.verb_slot("hold"), 1)

    def test_csp_slot_follows_cluster(self):
        index = build_index("CSP", self.table, self.model)
        base = 0
        for obj in self.table.objects_of("ride"):
            self.assertEqual(index.slot("ride", obj), base + self.model.cluster_of("ride", obj))
        self.assertEqual(index.slot("hold", "g0o0"), self.model.count("ride"))

    def test_invalid_category(self):
        index = build_index("SP", self.table)
        with self.assertRaises(InvalidCategoryError):
            index.slot("hold", "g1o2")

    def test_invalid_scheme(self):
        with self.assertRaises(InvalidSchemeError):
            build_index("XYZ", self.table)

    def test_csp_needs_clusters(self):
        with self.assertRaises(MissingClusterError):
            build_index("CSP", self.table)

    def test_dict_round_trip(self):
        index = build_index("CSP", self.table, self.model)
        self.assertEqual(ClassifierIndex.from_dict(index.to_dict()), index)

    def test_route_unseen_picks_nearest_centroid(self):
        cluster = self.model.cluster_of("ride", "g1o0")
        self.assertEqual(route_unseen(self.model, "ride", self.embeddings.vector("g1o0") * 3.0), cluster)

    def test_route_ties_go_to_lowest_index(self):
        model = ClusterModel.from_manifest({
            "format": "pdnet-clusters", "version": 1, "seed": 0,
            "verbs": [{"verb": "ride", "objects": ["a", "b"], "count": 2, "assignments": {"a": 0, "b": 1},
                       "centroids": [[1.0, 0.0], [0.0, 1.0]]}]})
        self.assertEqual(route_unseen(model, "ride", [1.0, 1.0]), 0)
        self.assertEqual(route_unseen(model, "ride", [0.2, 1.0]), 1)

    def test_large_vocabulary_slot_counts(self):
        table = benchmark_sized_table()
        self.assertEqual((len(table.verbs), len(table.objects), len(table)),
                         (BENCH_VERBS, BENCH_OBJECTS, BENCH_CATEGORIES))
        self.assertEqual(build_index("SH", table).num_slots, BENCH_VERBS)
        self.assertEqual(build_index("SP", table).num_slots, BENCH_CATEGORIES)

    def test_verb_polysemy_vocabulary_csp_slots(self):
        objects = ["o%03d" % i for i in range(max(HOI_VP_OBJECT_COUNTS))]
        table = VerbObjectTable(OrderedDict(("v%02d" % i, objects[:n]) for i, n in enumerate(HOI_VP_OBJECT_COUNTS)))
        model = build_cluster_model(table, toy_embeddings(objects, seed=1), seed=0)
        self.assertEqual(build_index("CSP", table, model).num_slots, HOI_VP_CSP_SLOTS)


class ToyEmbeddingTest(PdNetTest):
    def test_toy_tokens(self):
        table = toy_embeddings(["a", "b"])
        self.assertEqual(len(table), 2)


if __name__ == '__main__':
    unittest.main()
