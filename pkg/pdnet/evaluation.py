#
# Copyright (C) 2026 pdnet contributors. See LICENSE file for terms.
#
"""
HOI detection scoring and mAP evaluation in Default (DT) and Known-Object (KO) modes.

A detection of category (verb, object) is a true positive when an unmatched ground truth of that category in the
same image overlaps it with min(IoU_human, IoU_object) >= 0.5. AP is the area under the precision-recall curve with
precision made monotone from the right. KO mode keeps, per category, only the images that contain its object.
"""
from __future__ import division
from collections import namedtuple, OrderedDict
import csv
import io
import json
import logging

import numpy as np

from pdnet.constants import EVAL_MODES, REPORT_FORMATS, DEFAULT_IOU_THRESHOLD, enum_member
from pdnet.errors import MatchingError, UnknownCategoryError, DatasetValidationError
from pdnet.features import Box
from pdnet.functions import iou
from pdnet.network import pamf_scores, score_pairs, score_hoi

logger = logging.getLogger(__name__)

RARE_THRESHOLD = 10
SUMMARY_ROWS = ("Full", "Rare", "Non-Rare")
EVAL_ORDER = ("DT", "KO")
REPORT_HEADER = ["category", "n_gt", "AP_DT", "AP_KO"]

DetectionRecord = namedtuple("DetectionRecord", ["image_id", "verb", "object", "human_box", "object_box", "score"])


def rank_detections(detections):
    """Score descending; equal scores keep input order."""
    return [d for _, d in sorted(enumerate(detections), key=lambda item: (-item[1].score, item[0]))]


def match_detections(detections, ground_truths, threshold=DEFAULT_IOU_THRESHOLD):
    """
        match_detections(
                list        detections      one HOI category, ranked by rank_detections
                list        ground_truths   the same category
                float       threshold       applied as >=
                )

        Greedy in detection order: each detection takes the unmatched same-image ground truth with the highest
        min(IoU_human, IoU_object), earlier ground truths winning ties, if that overlap reaches threshold. Returns one
        TP flag per detection.
    """
    by_image = OrderedDict()
    for position, gt in enumerate(ground_truths):
        by_image.setdefault(gt.image_id, []).append(position)
    used = set()
    flags = []
    for det in detections:
        best, best_overlap = None, -1.0
        for position in by_image.get(det.image_id, ()):
            if position in used:
                continue
            gt = ground_truths[position]
            overlap = min(iou(det.human_box, gt.human_box), iou(det.object_box, gt.object_box))
            if overlap >= threshold and overlap > best_overlap:
                best, best_overlap = position, overlap
        if best is None:
            flags.append(False)
        else:
            used.add(best)
            flags.append(True)
    return flags


def average_precision(flags, n_gt):
    """
    AP in [0, 1] for TP flags in score order. Returns None when there is nothing to evaluate (no ground truth and no
    detection); ground-truth-free categories with detections score 0.
    """
    flags = np.asarray(flags, dtype=bool)
    true_positives = int(flags.sum())
    if true_positives > n_gt:
        raise MatchingError("%d true positives for %d ground truths" % (true_positives, n_gt))
    if n_gt == 0:
        return None if flags.size == 0 else 0.0
    if flags.size == 0:
        return 0.0
    tp = np.cumsum(flags)
    fp = np.cumsum(~flags)
    recall = tp / float(n_gt)
    precision = tp / np.maximum(tp + fp, np.finfo(np.float64).eps)
    mrec = np.concatenate(([0.0], recall, [1.0]))
    mpre = np.concatenate(([0.0], precision, [0.0]))
    for i in range(mpre.size - 1, 0, -1):
        mpre[i - 1] = max(mpre[i - 1], mpre[i])
    steps = np.where(mrec[1:] != mrec[:-1])[0]
    return float(np.sum((mrec[steps + 1] - mrec[steps]) * mpre[steps + 1]))


EvalReport = namedtuple("EvalReport", ["categories", "n_gt", "ap", "summary", "per_verb", "rare", "modes"])


def _mean(values):
    values = [v for v in values if v is not None]
    return float(np.mean(values)) if values else None


def evaluate(detections, ground_truths, categories, modes=("DT", "KO"), rare=(), threshold=DEFAULT_IOU_THRESHOLD):
    """
        evaluate(
                list        detections      DetectionRecord
                list        ground_truths   GroundTruth
                list        categories      (verb, object) categories to report
                tuple       modes           DT and/or KO
                iterable    rare            categories in the Rare split
                )

        Returns an EvalReport with APs in percent. Categories with neither ground truth nor detections are left out of
        every mean.
    """
    categories = [tuple(c) for c in categories]
    known = set(categories)
    modes = [enum_member(EVAL_MODES, m, "evaluation mode") for m in modes]
    rare = set(tuple(c) for c in rare)
    dets_by_category = OrderedDict((c, []) for c in categories)
    for det in detections:
        key = (det.verb, det.object)
        if key not in known:
            raise UnknownCategoryError("detection for unknown category ('%s', '%s')" % key)
        dets_by_category[key].append(det)
    gts_by_category = OrderedDict((c, []) for c in categories)
    images_with_object = {}
    for gt in ground_truths:
        key = (gt.verb, gt.object)
        if key not in known:
            raise UnknownCategoryError("ground truth for unknown category ('%s', '%s')" % key)
        gts_by_category[key].append(gt)
        images_with_object.setdefault(gt.object, set()).add(gt.image_id)

    n_gt = OrderedDict((c, len(gts_by_category[c])) for c in categories)
    ap = OrderedDict()
    summary = OrderedDict()
    per_verb = OrderedDict()
    for mode in modes:
        ap[mode] = OrderedDict()
        for c in categories:
            dets = dets_by_category[c]
            if mode == "KO":
                images = images_with_object.get(c[1], set())
                dets = [d for d in dets if d.image_id in images]
            flags = match_detections(rank_detections(dets), gts_by_category[c], threshold)
            value = average_precision(flags, n_gt[c])
            ap[mode][c] = None if value is None else 100.0 * value
        summary[mode] = OrderedDict([
            ("Full", _mean(ap[mode].values())),
            ("Rare", _mean(ap[mode][c] for c in categories if c in rare)),
            ("Non-Rare", _mean(ap[mode][c] for c in categories if c not in rare)),
        ])
        verbs = OrderedDict()
        for c in categories:
            verbs.setdefault(c[0], []).append(ap[mode][c])
        per_verb[mode] = OrderedDict((v, _mean(values)) for v, values in verbs.items())
        logger.info("%s mode: mAP Full %s, Rare %s, Non-Rare %s over %d categories", mode,
                    _fmt(summary[mode]["Full"]), _fmt(summary[mode]["Rare"]), _fmt(summary[mode]["Non-Rare"]),
                    len(categories))
    return EvalReport(categories, n_gt, ap, summary, per_verb, sorted(rare & known), modes)


def rare_categories(train_dataset, categories=None, limit=RARE_THRESHOLD):
    """Categories with fewer than limit positive training pairs."""
    counts = train_dataset.category_counts()
    categories = categories if categories is not None else train_dataset.vocabulary.categories()
    return [tuple(c) for c in categories if counts.get(tuple(c), 0) < limit]


# detection

def detect(model, dataset, zero_shot=False, vocabulary=None, use_interactiveness=None):
    """
    Scores every (pair, verb) of the dataset: S_h * S_o * S_PD * S_I, with S_I fixed to 1 when interactiveness is
    switched off. Returns DetectionRecords in pair order.
    """
    if use_interactiveness is None:
        use_interactiveness = model.ablation.use_interactiveness
    pair_indices, verbs, scores = score_pairs(model, dataset.pairs, zero_shot, vocabulary)
    records = []
    for i, verb, s_pd in zip(pair_indices, verbs, scores):
        pair = dataset.pairs[i]
        s_i = pair.interactiveness if use_interactiveness else 1.0
        records.append(DetectionRecord(pair.image_id, verb, pair.object.category, pair.human.box, pair.object.box,
                                       score_hoi(pair.human.score, pair.object.score, s_pd, s_i)))
    return records


def save_detections(detections, path):
    with io.open(path, "w", encoding="utf-8", newline="\n") as f:
        for d in detections:
            f.write(json.dumps({"image_id": d.image_id, "verb": d.verb, "object": d.object,
                                "human_box": list(d.human_box), "object_box": list(d.object_box),
                                "score": d.score}, sort_keys=True) + "\n")
    return len(detections)


def load_detections(path):
    detections = []
    with io.open(path, "r", encoding="utf-8") as f:
        for number, line in enumerate(f):
            if not line.strip():
                continue
            try:
                r = json.loads(line)
                detections.append(DetectionRecord(str(r["image_id"]), r["verb"], r["object"], Box(*r["human_box"]),
                                                  Box(*r["object_box"]), float(r["score"])))
            except (ValueError, KeyError, TypeError) as e:
                raise DatasetValidationError("bad detection (%s)" % e, record_index=number, path=path)
    return detections


# reports

def _fmt(value):
    return "-" if value is None else "%.4f" % value


def write_table(header, rows, path, fmt="csv"):
    """Writes rows as CSV or a markdown table. Returns the number of data rows."""
    fmt = enum_member(REPORT_FORMATS, fmt, "report format")
    with io.open(path, "w", encoding="utf-8", newline="") as f:
        if fmt == "csv":
            writer = csv.writer(f, lineterminator="\n")
            writer.writerow(header)
            for row in rows:
                writer.writerow(row)
        else:
            f.write("| " + " | ".join(header) + " |\n")
            f.write("|" + "|".join(["---"] * len(header)) + "|\n")
            for row in rows:
                f.write("| " + " | ".join(str(v) for v in row) + " |\n")
    return len(rows)


def report_rows(report):
    """One row per category then, when there are categories, the Full / Rare / Non-Rare summary rows."""
    rows = []
    for c in report.categories:
        rows.append([" ".join(c), report.n_gt[c]] + [_fmt(report.ap[m][c]) if m in report.ap else "-"
                                                     for m in EVAL_ORDER])
    if report.categories:
        rare = set(report.rare)
        subsets = {"Full": report.categories, "Rare": [c for c in report.categories if c in rare],
                   "Non-Rare": [c for c in report.categories if c not in rare]}
        for name in SUMMARY_ROWS:
            rows.append([name, sum(report.n_gt[c] for c in subsets[name])] +
                        [_fmt(report.summary[m][name]) if m in report.summary else "-" for m in EVAL_ORDER])
    return rows


def emit_report(report, path, fmt="csv"):
    """category, n_gt, AP_DT, AP_KO; an empty category set gives a header-only file."""
    return write_table(REPORT_HEADER, report_rows(report), path, fmt)


def emit_verb_report(report, table, path, fmt="csv"):
    """Per-verb mean AP, verbs with the most categories first (ties by name)."""
    counts = OrderedDict()
    for verb, _ in report.categories:
        counts[verb] = counts.get(verb, 0) + 1
    if table is not None:
        counts = OrderedDict((v, len(table.objects_of(v))) for v in counts)
    ranked = sorted(counts.items(), key=lambda item: (-item[1], item[0]))
    rows = [[verb, n] + [_fmt(report.per_verb[m].get(verb)) if m in report.per_verb else "-" for m in EVAL_ORDER]
            for verb, n in ranked]
    return write_table(["verb", "n_categories", "AP_DT", "AP_KO"], rows, path, fmt)


def summary_value(report, mode, split):
    return report.summary.get(mode, {}).get(split)


# attention

def category_attention(model, categories):
    """
    PAMF attention per category, one score per stream in model.stream_names order. Attention depends on the prior
    alone, so it is the mean over every pair of the category. Empty when PAMF is off.
    """
    if not model.ablation.pamf:
        return OrderedDict()
    return OrderedDict((tuple(c), pamf_scores(model.prior(c[0], c[1]), model.params)) for c in categories)


def emit_attention_report(model, categories, path, fmt="csv"):
    """category then one a_<stream> column per stream."""
    rows = [[" ".join(c)] + [_fmt(v) for v in scores] for c, scores in category_attention(model, categories).items()]
    return write_table(["category"] + ["a_" + s for s in model.stream_names], rows, path, fmt)
