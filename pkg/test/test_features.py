#
# Copyright (C) 2026 pdnet contributors. See LICENSE file for terms.
#
"""
Unit tests for geometric encoders, proposal filtering and dataset files
"""
import io
import json
import os
import unittest

import numpy as np

from pdnet.clustering import VerbObjectTable
from pdnet.errors import (DatasetValidationError, FeatureLengthError, InvalidBoxError, ScoreRangeError)
from pdnet.features import (Box, Dataset, GroundTruth, Instance, decode_vector, encode_pose, encode_spatial,
                            encode_vector, filter_proposals, load_dataset, pair_proposals, save_dataset)
from pdnet.functions import iou
from test.test_helpers import PdNetTest, toy_pair

IOU_INDEX = 32


class BoxTest(PdNetTest):
    def test_degenerate_box(self):
        with self.assertRaises(InvalidBoxError):
            Box(10, 10, 10, 20)
        with self.assertRaises(InvalidBoxError):
            Box(0, 5, 4, 1)

    def test_score_range(self):
        with self.assertRaises(ScoreRangeError):
            Instance(Box(0, 0, 1, 1), "cup", 1.5)

    def test_iou(self):
        self.assertAlmostEqual(iou(Box(0, 0, 10, 10), Box(5, 0, 15, 10)), 1 / 3.0)
        self.assertEqual(iou(Box(0, 0, 10, 10), Box(20, 20, 30, 30)), 0.0)


class SpatialTest(PdNetTest):
    def test_length_and_finite(self):
        v = encode_spatial(Box(10, 20, 50, 200), Box(40, 100, 90, 160), 640, 480)
        self.assertEqual(v.shape, (42,))
        self.assertTrue(np.all(np.isfinite(v)))

    def test_identical_boxes(self):
        b = Box(10, 10, 60, 90)
        v = encode_spatial(b, b, 100, 100)
        self.assertAlmostEqual(v[IOU_INDEX], 1.0)
        np.testing.assert_allclose(v[24:32], np.zeros(8), atol=1e-12)

    def test_disjoint_boxes(self):
        v = encode_spatial(Box(0, 0, 10, 10), Box(50, 50, 60, 60), 100, 100)
        np.testing.assert_array_equal(v[IOU_INDEX:IOU_INDEX + 3], [0.0, 0.0, 0.0])
        self.assertGreater(v[41], 0.0)

    def test_half_overlap(self):
        v = encode_spatial(Box(0, 0, 10, 10), Box(5, 0, 15, 10), 100, 100)
        self.assertAlmostEqual(v[IOU_INDEX], 1 / 3.0)
        self.assertAlmostEqual(v[IOU_INDEX + 1], 0.5)
        self.assertAlmostEqual(v[41], 0.0)

    def test_translation_invariant(self):
        h, o = Box(10, 20, 50, 200), Box(40, 100, 90, 160)
        moved = encode_spatial(Box(110, 70, 150, 250), Box(140, 150, 190, 210), 640, 480, origin=(100, 50))
        np.testing.assert_allclose(encode_spatial(h, o, 640, 480), moved, atol=1e-12)


class PoseTest(PdNetTest):
    def setUp(self):
        rng = np.random.default_rng(0)
        self.keypoints = np.column_stack([rng.uniform(10, 50, 17), rng.uniform(20, 200, 17), rng.uniform(0, 1, 17)])
        self.h, self.o = Box(10, 20, 50, 200), Box(40, 100, 90, 160)

    def test_length_and_ranges(self):
        v = encode_pose(self.keypoints, self.h, self.o, 640, 480)
        self.assertEqual(v.shape, (272,))
        per_keypoint = v.reshape(17, 16)
        self.assertTrue(np.all((per_keypoint[:, 15] >= 0.0) & (per_keypoint[:, 15] < 1.0)))
        np.testing.assert_array_equal(per_keypoint[:, 13], (self.keypoints[:, 2] > 0.05).astype(float))

    def test_wrong_keypoint_count(self):
        with self.assertRaises(FeatureLengthError):
            encode_pose(np.zeros((16, 3)), self.h, self.o, 640, 480)

    def test_translation_invariant(self):
        shift = np.array([30.0, 40.0, 0.0])
        moved = encode_pose(self.keypoints + shift, Box(40, 60, 80, 240), Box(70, 140, 120, 200), 640, 480,
                            origin=(30, 40))
        np.testing.assert_allclose(encode_pose(self.keypoints, self.h, self.o, 640, 480), moved, atol=1e-12)


class ProposalTest(PdNetTest):
    def test_top_k_then_threshold(self):
        cups = [Instance(Box(i, 0, i + 5, 5), "cup", s) for i, s in enumerate([0.9, 0.5, 0.005, 0.7])]
        person = Instance(Box(0, 0, 50, 100), "person", 0.95)
        kept = filter_proposals(cups + [person], top_k=2, threshold=0.01)
        self.assertEqual(kept, [cups[0], cups[3], person])

    def test_threshold_is_inclusive(self):
        cup = Instance(Box(0, 0, 5, 5), "cup", 0.01)
        self.assertEqual(filter_proposals([cup]), [cup])

    def test_ties_keep_input_order(self):
        cups = [Instance(Box(i, 0, i + 5, 5), "cup", 0.5) for i in range(3)]
        self.assertEqual(filter_proposals(cups, top_k=2), cups[:2])

    def test_pairs(self):
        h1 = Instance(Box(0, 0, 10, 10), "person", 0.9)
        h2 = Instance(Box(1, 0, 10, 10), "person", 0.8)
        cup = Instance(Box(5, 5, 9, 9), "cup", 0.7)
        self.assertEqual(pair_proposals([h1, cup, h2]), [(h1, cup), (h2, cup)])


class DatasetFileTest(PdNetTest):
    def setUp(self):
        self.vocabulary = VerbObjectTable({"drink_with": ["cup"], "hold": ["cup", "knife"]})
        self.pairs = [toy_pair("cup", ["hold"], seed=1, image_id="a"), toy_pair("knife", [], seed=2, image_id="a"),
                      toy_pair("cup", ["drink_with", "hold"], seed=3, image_id="b")]
        self.truths = [GroundTruth("a", "hold", "cup", Box(100, 50, 220, 400), Box(200, 200, 300, 280))]

    def write(self, encoding="b64"):
        d = self.make_tempdir()
        paths = [os.path.join(d, n) for n in ("pairs.jsonl", "gt.jsonl", "vocabulary.json")]
        save_dataset(Dataset(self.pairs, self.truths, self.vocabulary), *paths, encoding=encoding)
        return paths

    def test_round_trip(self):
        def check(encoding):
            loaded = load_dataset(*self.write(encoding))
            if len(loaded) != 3 or loaded.k_a != 8 or loaded.ground_truths != self.truths:
                return "counts or ground truth differ"
            for before, after in zip(self.pairs, loaded.pairs):
                if not np.array_equal(before.pose, after.pose) or before.positive_verbs != after.positive_verbs:
                    return "pair %s differs" % before.image_id
            if loaded.vocabulary.categories() != self.vocabulary.categories():
                return "vocabulary differs"

        self.run_snippet_and_count_problems({"b64": "b64", "list": "list"}, check)

    def test_category_counts(self):
        counts = Dataset(self.pairs).category_counts()
        self.assertEqual(counts[("hold", "cup")], 2)
        self.assertEqual(counts[("drink_with", "cup")], 1)
        self.assertEqual(Dataset(self.pairs).induced_table().categories(), [("drink_with", "cup"), ("hold", "cup")])

    def rewrite(self, path, index, change):
        with io.open(path, "r", encoding="utf-8") as f:
            records = [json.loads(line) for line in f]
        change(records[index])
        with io.open(path, "w", encoding="utf-8") as f:
            for r in records:
                f.write(json.dumps(r) + "\n")

    def test_error_names_record(self):
        pairs, gt, vocabulary = self.write("list")
        self.rewrite(pairs, 2, lambda r: r["features"]["pose"].pop())
        with self.assertRaises(DatasetValidationError) as ctx:
            load_dataset(pairs, gt, vocabulary)
        self.assertIn("record 2", str(ctx.exception))
        self.assertIn(pairs, str(ctx.exception))

    def test_invalid_label(self):
        pairs, gt, vocabulary = self.write()
        self.rewrite(pairs, 1, lambda r: r.update(verbs=["drink_with"]))
        with self.assertRaises(DatasetValidationError) as ctx:
            load_dataset(pairs, gt, vocabulary)
        self.assertIn("record 1", str(ctx.exception))

    def test_bad_score(self):
        pairs, gt, vocabulary = self.write()
        self.rewrite(pairs, 0, lambda r: r["object"].update(score=2.0))
        with self.assertRaises(DatasetValidationError):
            load_dataset(pairs, gt, vocabulary)

    def test_mixed_k_a(self):
        pairs, gt, vocabulary = self.write("list")
        self.rewrite(pairs, 1, lambda r: r["features"].update(h_app=[0.0] * 4, o_app=[0.0] * 4))
        with self.assertRaises(DatasetValidationError):
            load_dataset(pairs, gt, vocabulary)

    def test_byte_identical_writes(self):
        first = self.write()
        second = self.write()
        for a, b in zip(first, second):
            with open(a, "rb") as fa, open(b, "rb") as fb:
                self.assertEqual(fa.read(), fb.read())

    def test_vector_codec_length_check(self):
        payload = encode_vector(np.arange(4.0))
        payload["length"] = 5
        with self.assertRaises(FeatureLengthError):
            decode_vector(payload)


if __name__ == '__main__':
    unittest.main()
