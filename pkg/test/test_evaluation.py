#
# Copyright (C) 2026 pdnet contributors. See LICENSE file for terms.
#
"""
Unit tests for detection matching, AP, the DT/KO modes and report files
"""
import io
import os
import unittest

import numpy as np

from pdnet.errors import MatchingError, UnknownCategoryError
from pdnet.evaluation import (DetectionRecord, average_precision, category_attention, detect, emit_attention_report,
                              emit_report, emit_verb_report, evaluate, load_detections, match_detections,
                              rank_detections, rare_categories, save_detections, summary_value)
from pdnet.features import Box, Dataset, GroundTruth
from pdnet.functions import iou
from pdnet.network import AblationConfig, classify_pair, pamf_scores
from pdnet.synthetic import SynthConfig, generate_synthetic
from pdnet.training import TrainConfig, train
from test.test_helpers import PdNetTest, toy_model, toy_pair

H = Box(0, 0, 10, 10)
O = Box(20, 20, 30, 30)
FAR = Box(100, 100, 110, 110)


def det(image_id, score, human=H, obj=O, verb="hold", category="cup"):
    return DetectionRecord(image_id, verb, category, human, obj, score)


def gt(image_id, human=H, obj=O, verb="hold", category="cup"):
    return GroundTruth(image_id, verb, category, human, obj)


def brute_force_ap(flags, n_gt):
    """Sum over each recall step of the best precision at that recall or beyond."""
    precisions, recalls = [], []
    tp = 0
    for k, flag in enumerate(flags):
        tp += int(flag)
        precisions.append(tp / float(k + 1))
        recalls.append(tp / float(n_gt))
    ap, previous = 0.0, 0.0
    for k, flag in enumerate(flags):
        if flag:
            ap += (recalls[k] - previous) * max(precisions[k:])
            previous = recalls[k]
    return ap


class RankTest(PdNetTest):
    def test_score_then_input_order(self):
        a, b, c = det("i", 0.5), det("j", 0.9), det("k", 0.5)
        self.assertEqual(rank_detections([a, b, c]), [b, a, c])


class MatchTest(PdNetTest):
    def test_both_boxes_must_overlap(self):
        self.assertEqual(match_detections([det("i", 0.9, obj=FAR)], [gt("i")]), [False])
        self.assertEqual(match_detections([det("i", 0.9, human=FAR)], [gt("i")]), [False])
        self.assertEqual(match_detections([det("i", 0.9)], [gt("i")]), [True])

    def test_threshold_is_inclusive(self):
        # IoU of exactly one half on both boxes
        half_h, half_o = Box(0, 0, 10, 20), Box(20, 20, 30, 40)
        self.assertEqual(match_detections([det("i", 0.9, half_h, half_o)], [gt("i")]), [True])
        self.assertEqual(match_detections([det("i", 0.9, half_h, half_o)], [gt("i")], threshold=0.51), [False])

    def test_duplicates_and_images(self):
        flags = match_detections([det("i", 0.9), det("i", 0.8), det("j", 0.7)], [gt("i")])
        self.assertEqual(flags, [True, False, False])

    def test_equal_overlap_takes_earlier_ground_truth(self):
        flags = match_detections([det("i", 0.9), det("i", 0.8)], [gt("i"), gt("i")])
        self.assertEqual(flags, [True, True])

    def test_best_overlap_wins(self):
        shifted = gt("i", human=Box(1, 0, 11, 10))
        flags = match_detections([det("i", 0.9), det("i", 0.8, human=Box(1, 0, 11, 10))], [shifted, gt("i")])
        self.assertEqual(flags, [True, True])


class AveragePrecisionTest(PdNetTest):
    def test_against_brute_force(self):
        rng = np.random.default_rng(7)
        cases = {}
        for i in range(20):
            flags = list(rng.integers(2, size=rng.integers(1, 15)).astype(bool))
            cases["random %d" % i] = (flags, sum(flags) + int(rng.integers(0, 4)))

        def check(case):
            flags, n_gt = case
            if n_gt == 0:
                return None
            got, want = average_precision(flags, n_gt), brute_force_ap(flags, n_gt)
            if abs(got - want) > 1e-12:
                return "AP %r, brute force %r" % (got, want)

        self.run_snippet_and_count_problems(cases, check)

    def test_known_values(self):
        self.assertEqual(average_precision([True, True], 2), 1.0)
        self.assertAlmostEqual(average_precision([False, True], 1), 0.5)
        self.assertAlmostEqual(average_precision([True, False], 2), 0.5)
        self.assertAlmostEqual(average_precision([True, False, True], 4), 0.25 + 0.25 * 2 / 3.0)

    def test_degenerate(self):
        self.assertIsNone(average_precision([], 0))
        self.assertEqual(average_precision([False], 0), 0.0)
        self.assertEqual(average_precision([], 3), 0.0)
        with self.assertRaises(MatchingError):
            average_precision([True, True], 1)

class MicroSceneTest(PdNetTest):
    """evaluate() against an independent matcher and brute-force AP on random scenes."""

    @staticmethod
    def scene(rng):
        boxes = [Box(x, y, x + 10, y + 10) for x in (0, 6, 30) for y in (0, 6)]
        truths, detections = [], []
        for image in ("a", "b", "c"):
            for _ in range(int(rng.integers(0, 3))):
                truths.append(gt(image, boxes[int(rng.integers(len(boxes)))], boxes[int(rng.integers(len(boxes)))]))
        for image in ("a", "b", "c", "d"):
            for _ in range(int(rng.integers(0, 4))):
                detections.append(det(image, float(rng.integers(1, 6)) / 5.0, boxes[int(rng.integers(len(boxes)))],
                                      boxes[int(rng.integers(len(boxes)))]))
        return detections, truths

    @staticmethod
    def oracle(detections, truths):
        ranked = sorted(detections, key=lambda d: -d.score)
        used, flags = set(), []
        for d in ranked:
            candidates = [(min(iou(d.human_box, g.human_box), iou(d.object_box, g.object_box)), -i)
                          for i, g in enumerate(truths) if g.image_id == d.image_id and i not in used]
            candidates = [c for c in candidates if c[0] >= 0.5]
            if candidates:
                used.add(-max(candidates)[1])
                flags.append(True)
            else:
                flags.append(False)
        if not truths:
            return None if not flags else 0.0
        return 100.0 * brute_force_ap(flags, len(truths))

    def test_random_scenes(self):
        rng = np.random.default_rng(11)
        cases = dict(("scene %d" % i, self.scene(rng)) for i in range(50))

        def check(case):
            detections, truths = case
            report = evaluate(detections, truths, [("hold", "cup")])
            got, want = report.ap["DT"][("hold", "cup")], self.oracle(detections, truths)
            if (got is None) != (want is None) or (got is not None and abs(got - want) > 1e-9):
                return "AP %r, oracle %r" % (got, want)
            ko = report.ap["KO"][("hold", "cup")]
            if got is not None and ko is not None and ko < got - 1e-12:
                return "KO %r below DT %r" % (ko, got)

        self.run_snippet_and_count_problems(cases, check)



class EvaluateTest(PdNetTest):
    def setUp(self):
        self.categories = [("hold", "cup"), ("hold", "knife"), ("ride", "horse")]
        self.truths = [gt("a"), gt("b"), gt("c", category="horse", verb="ride")]
        self.detections = [det("a", 0.9), det("x", 0.95), det("b", 0.5),
                           det("c", 0.8, verb="ride", category="horse")]

    def test_modes(self):
        report = evaluate(self.detections, self.truths, self.categories, rare=[("ride", "horse")])
        # the detection in image x (no cup there) only counts in DT mode
        self.assertAlmostEqual(report.ap["DT"][("hold", "cup")], 100.0 * 2 / 3.0)
        self.assertAlmostEqual(report.ap["KO"][("hold", "cup")], 100.0)
        self.assertIsNone(report.ap["DT"][("hold", "knife")])
        self.assertAlmostEqual(summary_value(report, "KO", "Full"), 100.0)
        self.assertAlmostEqual(summary_value(report, "DT", "Rare"), 100.0)
        self.assertAlmostEqual(summary_value(report, "DT", "Non-Rare"), report.ap["DT"][("hold", "cup")])
        self.assertEqual(report.n_gt[("hold", "cup")], 2)
        self.assertEqual(list(report.per_verb["DT"]), ["hold", "ride"])

    def test_unknown_category(self):
        with self.assertRaises(UnknownCategoryError):
            evaluate([det("a", 0.5, category="spoon")], self.truths, self.categories)
        with self.assertRaises(UnknownCategoryError):
            evaluate([], [gt("a", category="spoon")], self.categories)

    def test_single_mode(self):
        report = evaluate(self.detections, self.truths, self.categories, modes=["KO"])
        self.assertEqual(list(report.ap), ["KO"])
        self.assertIsNone(summary_value(report, "DT", "Full"))

    def test_rare_categories(self):
        pairs = [toy_pair("cup", ("hold",), seed=i) for i in range(3)] + [toy_pair("horse", ("ride",), seed=9)]
        table = toy_model()[1]
        self.assertEqual(rare_categories(Dataset(pairs, vocabulary=table), limit=3),
                         [("hold", "knife"), ("hold", "fork"), ("hold", "spoon"), ("ride", "horse"),
                          ("ride", "bike")])
        self.assertEqual(len(rare_categories(Dataset(pairs, vocabulary=table))), 6)


class ReportTest(PdNetTest):
    def setUp(self):
        self.categories = [("hold", "cup"), ("ride", "horse")]
        self.report = evaluate([det("a", 0.9)], [gt("a")], self.categories, rare=[("ride", "horse")])

    def read(self, path):
        with io.open(path, encoding="utf-8") as f:
            return f.read().splitlines()

    def test_csv(self):
        path = os.path.join(self.make_tempdir(), "report.csv")
        self.assertEqual(emit_report(self.report, path), 5)
        lines = self.read(path)
        self.assertEqual(lines[0], "category,n_gt,AP_DT,AP_KO")
        self.assertEqual(lines[1], "hold cup,1,100.0000,100.0000")
        self.assertEqual(lines[2], "ride horse,0,-,-")
        self.assertEqual([l.split(",")[0] for l in lines[3:]], ["Full", "Rare", "Non-Rare"])
        self.assertEqual(lines[4], "Rare,0,-,-")

    def test_markdown_and_empty(self):
        d = self.make_tempdir()
        path = os.path.join(d, "report.md")
        emit_report(self.report, path, fmt="md")
        self.assertEqual(self.read(path)[0], "| category | n_gt | AP_DT | AP_KO |")
        empty = evaluate([], [], [])
        path = os.path.join(d, "empty.csv")
        self.assertEqual(emit_report(empty, path), 0)
        self.assertEqual(self.read(path), ["category,n_gt,AP_DT,AP_KO"])

    def test_verb_report_orders_by_category_count(self):
        path = os.path.join(self.make_tempdir(), "verbs.csv")
        emit_verb_report(self.report, toy_model()[1], path)
        lines = self.read(path)
        self.assertEqual(lines[1:], ["hold,4,100.0000,100.0000", "ride,2,-,-"])


class DetectTest(PdNetTest):
    def test_scores_and_file(self):
        model, _ = toy_model()
        pairs = [toy_pair("cup", seed=1, image_id="a", interactiveness=0.5), toy_pair("horse", seed=2, image_id="b")]
        records = detect(model, Dataset(pairs, vocabulary=toy_model()[1]))
        self.assertEqual([(r.image_id, r.verb, r.object) for r in records], [("a", "hold", "cup"),
                                                                             ("b", "ride", "horse")])
        self.assertAlmostEqual(records[0].score, 0.9 * 0.8 * 0.5 * classify_pair(pairs[0], "hold", model))
        plain = detect(model, Dataset(pairs), use_interactiveness=False)
        self.assertAlmostEqual(plain[0].score, 2 * records[0].score)

        path = os.path.join(self.make_tempdir(), "detections.jsonl")
        self.assertEqual(save_detections(records, path), 2)
        self.assertEqual(load_detections(path), records)


class AttentionTest(PdNetTest):
    @classmethod
    def setUpClass(cls):
        # one verb, one group per layout, confusers from the other group
        config = SynthConfig(num_verbs=1, objects_per_verb=4, groups_per_verb=2, k_a=8, train_per_category=16,
                             test_per_category=1, rare_fraction=0.0, unseen_objects=0, noise=0.5,
                             confuser_fraction=0.5, distractors_per_image=0, junk_per_image=0)
        cls.bench = generate_synthetic(config, seed=2)
        ablation = AblationConfig(lpca_variant="off", lpfa=False, pamf=True, scheme="SH")
        config = TrainConfig(epochs=20, learning_rate=1e-2, batch_size=8, seed=2, ablation=ablation)
        cls.model, _ = train(cls.bench.train, config, cls.bench.embeddings)
        cls.categories = cls.bench.vocabulary.categories()

    def test_layouts_rank_streams_apart(self):
        attention = category_attention(self.model, self.categories)
        self.assertEqual(list(attention), self.categories)

        def check(category):
            a = dict(zip(self.model.stream_names, attention[category]))
            preference = (a["H"] + a["P"]) - (a["O"] + a["S"])
            layout = self.bench.layouts[(category[0], self.bench.groups[category[1]])]
            if layout == ("H", "P") and preference <= 0:
                return "H/P group attends O/S: %s" % a
            if layout == ("O", "S") and preference >= 0:
                return "O/S group attends H/P: %s" % a

        self.run_snippet_and_count_problems(dict((" ".join(c), c) for c in self.categories), check)

    def test_table(self):
        path = os.path.join(self.make_tempdir(), "attention.csv")
        self.assertEqual(emit_attention_report(self.model, self.categories, path), len(self.categories))
        with io.open(path, encoding="utf-8") as f:
            lines = f.read().splitlines()
        self.assertEqual(lines[0], "category,a_H,a_O,a_S,a_P")
        verb, obj = self.categories[0]
        expected = pamf_scores(self.model.prior(verb, obj), self.model.params)
        self.assertEqual(lines[1], "%s %s," % (verb, obj) + ",".join("%.4f" % v for v in expected))

    def test_off_without_pamf(self):
        model, table = toy_model(ablation=AblationConfig(pamf=False))
        self.assertEqual(len(category_attention(model, table.categories())), 0)


if __name__ == '__main__':
    unittest.main()
