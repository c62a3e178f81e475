#
# Copyright (C) 2026 pdnet contributors. See LICENSE file for terms.
#
"""
The pair-sample data model, geometric feature encoders, proposal filtering and dataset files.

A dataset on disk is three files:
    pairs manifest  JSON lines, one candidate human-object pair per line, features as base-64 float64 or plain lists
    ground truth    JSON lines, one annotated <human, verb, object> triplet per line
    vocabulary      JSON, {"verbs": [...], "objects": [...], "categories": [[verb, object], ...]}
"""
from __future__ import division
from collections import namedtuple, OrderedDict
import base64
import io
import json
import logging
import math

import numpy as np

from pdnet.clustering import VerbObjectTable
from pdnet.constants import (SPATIAL_DIM, POSE_DIM, POSE_KEYPOINTS, POSE_PER_KEYPOINT, SIZE_FLOOR, DEFAULT_TOP_K,
                             DEFAULT_SCORE_THRESHOLD, HUMAN_CATEGORY)
from pdnet.errors import InvalidBoxError, FeatureLengthError, DatasetValidationError, ScoreRangeError, PdNetError
from pdnet import functions

logger = logging.getLogger(__name__)

VISIBILITY_THRESHOLD = 0.05
APPEARANCE_FEATURES = ("h_app", "o_app", "union_app")


class Box(namedtuple("Box", ["x1", "y1", "x2", "y2"])):
    """Pixel box with x2 > x1 and y2 > y1."""
    __slots__ = ()

    def __new__(cls, x1, y1, x2, y2):
        values = [float(v) for v in (x1, y1, x2, y2)]
        if not all(math.isfinite(v) for v in values):
            raise InvalidBoxError("box %s has a non-finite coordinate" % (values,))
        if values[2] <= values[0] or values[3] <= values[1]:
            raise InvalidBoxError("box %s needs x2 > x1 and y2 > y1" % (values,))
        return super(Box, cls).__new__(cls, *values)

    @property
    def width(self):
        return self.x2 - self.x1

    @property
    def height(self):
        return self.y2 - self.y1

    @property
    def area(self):
        return self.width * self.height


class Instance(namedtuple("Instance", ["box", "category", "score"])):
    """A detected (or annotated) box with its category and a detection score in [0, 1]."""
    __slots__ = ()

    def __new__(cls, box, category, score=1.0):
        score = float(score)
        if not 0.0 <= score <= 1.0:
            raise ScoreRangeError("detection score %r is outside [0, 1]" % score)
        if not isinstance(box, Box):
            box = Box(*box)
        return super(Instance, cls).__new__(cls, box, category, score)


PairSample = namedtuple("PairSample", ["image_id", "image_size", "human", "object", "h_app", "o_app", "spatial", "pose",
                                       "union_app", "interactiveness", "positive_verbs"])
PairSample.__new__.__defaults__ = (None, 1.0, ())

GroundTruth = namedtuple("GroundTruth", ["image_id", "verb", "object", "human_box", "object_box"])


def _image_dims(width, height):
    if not (width > 0 and height > 0):
        raise InvalidBoxError("image size must be positive, got %r x %r" % (width, height))
    return float(width), float(height)


def _box_terms(box, width, height, ox, oy):
    cx, cy = functions.box_center(box)
    w, h = functions.box_size(box)
    return [(box[0] - ox) / width, (box[1] - oy) / height, (box[2] - ox) / width, (box[3] - oy) / height,
            (cx - ox) / width, (cy - oy) / height, w / width, h / height]


def encode_spatial(h, o, width, height, origin=(0.0, 0.0)):
    """
        encode_spatial(
                Box         h           human box
                Box         o           object box
                float       width       image width
                float       height      image height
                tuple       origin      image top-left, so translated scenes encode identically
                )

        Returns 42 values: human, object and union box terms (8 each), human- and object-normalized deltas (4 each),
        overlap [IoU, inter/area_h, inter/area_o], area ratios [area_o/area_h, area_h/area_u, area_o/area_u] and
        geometry [center distance/diagonal, w_h/h_h, w_o/h_o, edge gap/diagonal].
    """
    width, height = _image_dims(width, height)
    ox, oy = origin
    u = functions.union_box(h, o)
    diagonal = math.hypot(width, height)
    hcx, hcy = functions.box_center(h)
    ocx, ocy = functions.box_center(o)
    hw, hh = functions.box_size(h, SIZE_FLOOR)
    ow, oh = functions.box_size(o, SIZE_FLOOR)
    inter = functions.intersection_area(h, o)
    area_h = functions.box_area(h)
    area_o = functions.box_area(o)
    area_u = functions.box_area(u)
    values = _box_terms(h, width, height, ox, oy) + _box_terms(o, width, height, ox, oy) + \
        _box_terms(u, width, height, ox, oy)
    values += [(ocx - hcx) / hw, (ocy - hcy) / hh, math.log(ow / hw), math.log(oh / hh)]
    values += [(hcx - ocx) / ow, (hcy - ocy) / oh, math.log(hw / ow), math.log(hh / oh)]
    values += [functions.iou(h, o), inter / area_h, inter / area_o]
    values += [area_o / area_h, area_h / area_u, area_o / area_u]
    values += [math.hypot(ocx - hcx, ocy - hcy) / diagonal, hw / hh, ow / oh,
               max(0.0, functions.edge_gap(h, o)) / diagonal]
    return np.array(values, dtype=np.float64)


def encode_pose(keypoints, h, o, width, height, origin=(0.0, 0.0)):
    """
    Returns 272 values, 16 per keypoint: coordinates normalized to the human, object and union boxes; offsets from
    the human and object centers over box size; coordinates over the image; confidence; visibility (confidence >
    0.05); distance to the object center over the image diagonal; angle to the object center mapped to [0, 1).
    """
    width, height = _image_dims(width, height)
    keypoints = np.asarray(keypoints, dtype=np.float64)
    if keypoints.shape != (POSE_KEYPOINTS, 3):
        raise FeatureLengthError("expected %d keypoints of (x, y, confidence), got shape %s"
                                 % (POSE_KEYPOINTS, keypoints.shape))
    ox, oy = origin
    u = functions.union_box(h, o)
    diagonal = math.hypot(width, height)
    hcx, hcy = functions.box_center(h)
    ocx, ocy = functions.box_center(o)
    hw, hh = functions.box_size(h, SIZE_FLOOR)
    ow, oh = functions.box_size(o, SIZE_FLOOR)
    uw, uh = functions.box_size(u, SIZE_FLOOR)
    out = np.empty((POSE_KEYPOINTS, POSE_PER_KEYPOINT), dtype=np.float64)
    for i, (x, y, confidence) in enumerate(keypoints):
        dx, dy = x - ocx, y - ocy
        angle = (math.atan2(dy, dx) / (2.0 * math.pi)) % 1.0
        if angle >= 1.0:
            angle = 0.0
        out[i] = [
            (x - h[0]) / hw, (y - h[1]) / hh,
            (x - o[0]) / ow, (y - o[1]) / oh,
            (x - u[0]) / uw, (y - u[1]) / uh,
            (x - hcx) / hw, (y - hcy) / hh,
            dx / ow, dy / oh,
            (x - ox) / width, (y - oy) / height,
            confidence,
            1.0 if confidence > VISIBILITY_THRESHOLD else 0.0,
            math.hypot(dx, dy) / diagonal,
            angle,
        ]
    return out.reshape(POSE_DIM)


def filter_proposals(instances, top_k=DEFAULT_TOP_K, threshold=DEFAULT_SCORE_THRESHOLD):
    """
    Keeps, per category, the top_k highest-scoring instances and then drops those scoring below threshold. Equal
    scores keep input order. The result preserves input order.
    """
    by_category = OrderedDict()
    for position, instance in enumerate(instances):
        by_category.setdefault(instance.category, []).append(position)
    kept = set()
    for positions in by_category.values():
        ranked = sorted(positions, key=lambda p: (-instances[p].score, p))
        kept.update(p for p in ranked[:top_k] if instances[p].score >= threshold)
    return [instance for position, instance in enumerate(instances) if position in kept]


def pair_proposals(instances, human_category=HUMAN_CATEGORY):
    """Every human paired with every non-human instance, in input order."""
    humans = [i for i in instances if i.category == human_category]
    objects = [i for i in instances if i.category != human_category]
    return [(h, o) for h in humans for o in objects]


# dataset files

def encode_vector(vector, encoding="b64"):
    vector = np.ascontiguousarray(vector, dtype="<f8")
    if encoding == "list":
        return [float(v) for v in vector]
    return {"b64": base64.b64encode(vector.tobytes()).decode("ascii"), "length": int(vector.size)}


def decode_vector(payload):
    if isinstance(payload, dict):
        raw = base64.b64decode(payload["b64"])
        vector = np.frombuffer(raw, dtype="<f8").astype(np.float64)
        if "length" in payload and vector.size != int(payload["length"]):
            raise FeatureLengthError("payload declares %s values but holds %d" % (payload["length"], vector.size))
        return vector
    if isinstance(payload, list):
        return np.array(payload, dtype=np.float64)
    raise FeatureLengthError("feature payload must be a list or a {'b64': ...} object")


def _instance_record(instance):
    return {"box": [instance.box.x1, instance.box.y1, instance.box.x2, instance.box.y2],
            "category": instance.category, "score": instance.score}


def pair_to_record(pair, encoding="b64"):
    features = {"h_app": encode_vector(pair.h_app, encoding), "o_app": encode_vector(pair.o_app, encoding),
                "spatial": encode_vector(pair.spatial, encoding), "pose": encode_vector(pair.pose, encoding)}
    if pair.union_app is not None:
        features["union_app"] = encode_vector(pair.union_app, encoding)
    return {"image_id": pair.image_id, "image_size": list(pair.image_size), "human": _instance_record(pair.human),
            "object": _instance_record(pair.object), "features": features,
            "interactiveness": pair.interactiveness, "verbs": sorted(pair.positive_verbs)}


def record_to_pair(record):
    features = record["features"]
    union = features.get("union_app")
    return PairSample(
        image_id=str(record["image_id"]),
        image_size=tuple(float(v) for v in record["image_size"]),
        human=Instance(Box(*record["human"]["box"]), record["human"]["category"], record["human"]["score"]),
        object=Instance(Box(*record["object"]["box"]), record["object"]["category"], record["object"]["score"]),
        h_app=decode_vector(features["h_app"]),
        o_app=decode_vector(features["o_app"]),
        spatial=decode_vector(features["spatial"]),
        pose=decode_vector(features["pose"]),
        union_app=decode_vector(union) if union is not None else None,
        interactiveness=float(record.get("interactiveness", 1.0)),
        positive_verbs=tuple(sorted(record.get("verbs", []))),
    )


def validate_pair(pair, k_a, vocabulary=None, has_union=None):
    """Checks feature lengths, score ranges and label validity; raises FeatureLengthError or ValueError subclasses."""
    for name in ("h_app", "o_app"):
        if getattr(pair, name).shape != (k_a,):
            raise FeatureLengthError("%s has %d values, expected K_A = %d" % (name, getattr(pair, name).size, k_a))
    if pair.spatial.shape != (SPATIAL_DIM,):
        raise FeatureLengthError("spatial has %d values, expected %d" % (pair.spatial.size, SPATIAL_DIM))
    if pair.pose.shape != (POSE_DIM,):
        raise FeatureLengthError("pose has %d values, expected %d" % (pair.pose.size, POSE_DIM))
    if has_union is not None and (pair.union_app is not None) != has_union:
        raise FeatureLengthError("union_app must be present on every record or on none")
    if pair.union_app is not None and pair.union_app.shape != (k_a,):
        raise FeatureLengthError("union_app has %d values, expected K_A = %d" % (pair.union_app.size, k_a))
    for name in ("h_app", "o_app", "spatial", "pose", "union_app"):
        vector = getattr(pair, name)
        if vector is not None and not np.all(np.isfinite(vector)):
            raise FeatureLengthError("%s holds a non-finite value" % name)
    if not 0.0 <= pair.interactiveness <= 1.0:
        raise ScoreRangeError("interactiveness %r is outside [0, 1]" % pair.interactiveness)
    if vocabulary is not None:
        for verb in pair.positive_verbs:
            if (verb, pair.object.category) not in vocabulary:
                raise DatasetValidationError("positive verb '%s' is not valid for object '%s'"
                                             % (verb, pair.object.category))


class Dataset(object):
    """Validated pair samples, ground truths and the vocabulary they are checked against."""

    def __init__(self, pairs, ground_truths=(), vocabulary=None):
        self.pairs = list(pairs)
        self.ground_truths = list(ground_truths)
        self.vocabulary = vocabulary if vocabulary is not None else self.induced_table()
        self.k_a = self.pairs[0].h_app.size if self.pairs else 0
        self.has_union = bool(self.pairs) and self.pairs[0].union_app is not None

    def __len__(self):
        return len(self.pairs)

    def induced_table(self):
        """VerbObjectTable of the (verb, object) categories labelled positive in this dataset."""
        return VerbObjectTable.from_pairs((verb, p.object.category) for p in self.pairs for verb in p.positive_verbs)

    def category_counts(self):
        """Positive pair count per (verb, object) category."""
        counts = OrderedDict()
        for pair in self.pairs:
            for verb in pair.positive_verbs:
                key = (verb, pair.object.category)
                counts[key] = counts.get(key, 0) + 1
        return counts

    def images(self):
        return sorted(set(p.image_id for p in self.pairs) | set(g.image_id for g in self.ground_truths))


def _read_jsonl(path):
    with io.open(path, "r", encoding="utf-8") as f:
        for number, line in enumerate(f):
            if not line.strip():
                continue
            try:
                yield number, json.loads(line)
            except ValueError as e:
                raise DatasetValidationError("invalid JSON (%s)" % e, record_index=number, path=path)


def load_vocabulary(path):
    with io.open(path, "r", encoding="utf-8") as f:
        try:
            data = json.load(f)
            return VerbObjectTable.from_pairs(tuple(c) for c in data["categories"])
        except (ValueError, KeyError, TypeError) as e:
            raise DatasetValidationError("malformed vocabulary (%s)" % e, path=path)


def save_vocabulary(table, path):
    data = OrderedDict([("verbs", table.verbs), ("objects", table.objects),
                        ("categories", [list(c) for c in table.categories()])])
    with io.open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write(json.dumps(data, indent=2))
        f.write("\n")


def load_ground_truths(path):
    truths = []
    for number, record in _read_jsonl(path):
        try:
            truths.append(GroundTruth(str(record["image_id"]), record["verb"], record["object"],
                                      Box(*record["human_box"]), Box(*record["object_box"])))
        except (KeyError, TypeError, ValueError) as e:
            raise DatasetValidationError("bad ground truth (%s)" % e, record_index=number, path=path)
    return truths


def load_dataset(manifest_path, ground_truth_path=None, vocabulary_path=None):
    """
        load_dataset(
                str     manifest_path       pairs JSON lines
                str     ground_truth_path   optional GT triplets JSON lines
                str     vocabulary_path     optional vocabulary JSON; labels are validated against it
                )

        Every record is validated; errors name the file and the 0-based record index. Without a vocabulary file the
        vocabulary is induced from the positive labels.
    """
    vocabulary = load_vocabulary(vocabulary_path) if vocabulary_path else None
    pairs = []
    k_a = None
    has_union = None
    for number, record in _read_jsonl(manifest_path):
        try:
            pair = record_to_pair(record)
            if k_a is None:
                k_a = pair.h_app.size
                has_union = pair.union_app is not None
            validate_pair(pair, k_a, vocabulary, has_union)
        except DatasetValidationError as e:
            raise DatasetValidationError(str(e), record_index=number, path=manifest_path)
        except (PdNetError, KeyError, TypeError, ValueError) as e:
            raise DatasetValidationError("%s: %s" % (type(e).__name__, e), record_index=number, path=manifest_path)
        pairs.append(pair)
    truths = load_ground_truths(ground_truth_path) if ground_truth_path else []
    dataset = Dataset(pairs, truths, vocabulary)
    logger.info("loaded %d pairs and %d ground truths from %s", len(pairs), len(truths), manifest_path)
    return dataset


def save_dataset(dataset, manifest_path, ground_truth_path=None, vocabulary_path=None, encoding="b64"):
    """Writes the files load_dataset reads; keys are sorted so equal datasets give byte-identical files."""
    with io.open(manifest_path, "w", encoding="utf-8", newline="\n") as f:
        for pair in dataset.pairs:
            f.write(json.dumps(pair_to_record(pair, encoding), sort_keys=True) + "\n")
    if ground_truth_path:
        with io.open(ground_truth_path, "w", encoding="utf-8", newline="\n") as f:
            for gt in dataset.ground_truths:
                f.write(json.dumps({"image_id": gt.image_id, "verb": gt.verb, "object": gt.object,
                                    "human_box": list(gt.human_box), "object_box": list(gt.object_box)},
                                   sort_keys=True) + "\n")
    if vocabulary_path:
        save_vocabulary(dataset.vocabulary, vocabulary_path)
