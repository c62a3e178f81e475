#
# Copyright (C) 2026 pdnet contributors. See LICENSE file for terms.
#
"""
A seeded synthetic polysemy benchmark.

Every verb is valid with every seen object. Objects fall into latent groups whose word embeddings sit around a shared
centroid, so per-verb clustering can recover them. For each (verb, group) the informative streams follow one of two
layouts: human appearance with pose, or object appearance with spatial. Within a verb the groups alternate between
them, and groups that share a layout also share the prototype of one of its streams (the vector stream for even
verbs, the appearance stream for odd ones), so they differ in a single stream.

Positive pairs are prototype plus Gaussian noise. Negatives are background (noise only) or confusers: the prototype
of some (verb, group) shown next to an object outside that group. A confuser looks exactly like a positive of its
verb, so without the object only chance separates them. Which part of the model can tell them apart depends on the
pair of groups:

    other layout                        the prior-driven stream attention, or an object-aware classifier slot
    same layout, appearance differs     channel attention on the appearance streams, or the slot
    same layout, vector differs         the prior concatenated to the vector streams, or the slot

Rare objects get one or two training images per verb and never show up as training distractors.

Files written by write_benchmark:
    embeddings.txt              300-d text table: verbs, seen and unseen objects
    vocabulary.json             seen (verb, object) categories
    vocabulary_full.json        seen plus unseen categories
    train.jsonl, train_gt.jsonl
    test.jsonl, test_gt.jsonl   seen objects, detector-style boxes and scores
    unseen.jsonl, unseen_gt.jsonl
    generator.json              config, seed, object groups, stream layouts, rare objects and categories
"""
from __future__ import division
from collections import namedtuple, OrderedDict
import io
import json
import logging
import os

import numpy as np

from pdnet.clustering import VerbObjectTable
from pdnet.constants import PRIOR_HALF_DIM, SPATIAL_DIM, POSE_DIM, HUMAN_CATEGORY, STREAMS
from pdnet.embeddings import EmbeddingTable, save_table
from pdnet.errors import SyntheticConfigError
from pdnet.features import (Box, Instance, PairSample, GroundTruth, Dataset, filter_proposals, pair_proposals,
                            save_dataset, save_vocabulary)
from pdnet import functions

logger = logging.getLogger(__name__)

RARE_LIMIT = 9

# informative streams of a (verb, group); U follows H when the union stream is on
LAYOUTS = (("H", "P"), ("O", "S"))
APPEARANCE_STREAMS = ("H", "O", "U")

SynthConfig = namedtuple("SynthConfig", [
    "num_verbs",
    "objects_per_verb",
    "groups_per_verb",
    "k_a",
    "train_per_category",
    "test_per_category",
    "rare_fraction",
    "rare_train_max",
    "unseen_objects",
    "noise",
    "signal",
    "embedding_noise",
    "embedding_norm",
    "negative_ratio",
    "confuser_fraction",
    "distractors_per_image",
    "junk_per_image",
    "iou_range",
    "image_size",
    "union_stream",
])
SynthConfig.__new__.__defaults__ = (4, 9, 3, 64, 24, 8, 0.34, 2, 4, 1.0, 1.0, 0.2, 6.0, 2, 0.75, 2, 1, (0.55, 0.95),
                                    (640, 480), False)

SyntheticBenchmark = namedtuple("SyntheticBenchmark", ["config", "seed", "embeddings", "vocabulary",
                                                       "full_vocabulary", "train", "test", "unseen", "groups",
                                                       "layouts", "prototypes", "rare_objects", "rare_categories"])


def synth_config_from_mapping(mapping):
    """SynthConfig from a flat mapping; unknown keys are rejected."""
    unknown = set(mapping) - set(SynthConfig._fields)
    if unknown:
        raise SyntheticConfigError("unknown synthetic config keys: %s" % ", ".join(sorted(unknown)))
    values = dict(mapping)
    for key in ("iou_range", "image_size"):
        if key in values:
            values[key] = tuple(values[key])
    return validate_config(SynthConfig(**values))


def rare_object_count(config):
    return int(round(config.rare_fraction * config.objects_per_verb))


def validate_config(config):
    if config.num_verbs < 1 or config.objects_per_verb < 1:
        raise SyntheticConfigError("need at least one verb and one object per verb")
    if not 1 <= config.groups_per_verb <= config.objects_per_verb:
        raise SyntheticConfigError("groups_per_verb (%d) must be between 1 and objects_per_verb (%d)"
                                   % (config.groups_per_verb, config.objects_per_verb))
    if config.k_a < 2 or config.k_a % 2:
        raise SyntheticConfigError("k_a must be an even number >= 2, got %d" % config.k_a)
    if config.train_per_category < 1 or config.test_per_category < 1:
        raise SyntheticConfigError("train_per_category and test_per_category must be >= 1")
    if not 0.0 <= config.rare_fraction <= 1.0 or not 0.0 <= config.confuser_fraction <= 1.0:
        raise SyntheticConfigError("rare_fraction and confuser_fraction must lie in [0, 1]")
    if rare_object_count(config) > config.objects_per_verb - config.groups_per_verb:
        raise SyntheticConfigError("rare_fraction %.3g leaves a group without a common object"
                                   % config.rare_fraction)
    if not 1 <= config.rare_train_max <= RARE_LIMIT:
        raise SyntheticConfigError("rare_train_max must lie in [1, %d], got %d" % (RARE_LIMIT, config.rare_train_max))
    if config.noise < 0 or config.embedding_noise < 0 or config.signal <= 0 or config.embedding_norm <= 0:
        raise SyntheticConfigError("noise scales must be >= 0, signal and embedding_norm > 0")
    if config.unseen_objects < 0 or config.negative_ratio < 0 or config.distractors_per_image < 0 \
            or config.junk_per_image < 0:
        raise SyntheticConfigError("counts must be >= 0")
    low, high = config.iou_range
    if not 0.0 < low <= high <= 1.0:
        raise SyntheticConfigError("iou_range must satisfy 0 < low <= high <= 1, got %s" % (config.iou_range,))
    if config.image_size[0] <= 0 or config.image_size[1] <= 0:
        raise SyntheticConfigError("image_size must be positive")
    return config


def stream_dims(config):
    dims = OrderedDict([("H", config.k_a), ("O", config.k_a), ("S", SPATIAL_DIM), ("P", POSE_DIM)])
    if config.union_stream:
        dims["U"] = config.k_a
    return dims


def stream_layout(config, verb_index, group):
    """
    Informative streams of (verb, group). The first ceil(G/2) groups of a verb take one layout and the rest the
    other; even and odd verbs swap which layout comes first.
    """
    second = group >= (config.groups_per_verb + 1) // 2
    layout = LAYOUTS[(verb_index + int(second)) % len(LAYOUTS)]
    if config.union_stream and "H" in layout:
        layout = layout + ("U",)
    return layout


def shared_streams(verb_index, layout):
    """Streams whose prototype is common to all groups of a verb on this layout."""
    appearance = verb_index % 2 == 1
    return tuple(s for s in layout if (s in APPEARANCE_STREAMS) == appearance)


def _unit(rng, size):
    v = rng.normal(size=size)
    return v / np.linalg.norm(v)


class _Generator(object):

    def __init__(self, config, seed):
        self.config = config
        self.seed = seed
        self.dims = stream_dims(config)
        self.verbs = ["verb%d" % i for i in range(config.num_verbs)]
        self.objects = ["obj%02d" % i for i in range(config.objects_per_verb)]
        self.unseen = ["new%02d" % i for i in range(config.unseen_objects)]
        groups = config.groups_per_verb
        self.groups = OrderedDict((o, i % groups) for i, o in enumerate(self.objects))
        for i, o in enumerate(self.unseen):
            self.groups[o] = i % groups
        self.rare_objects = self._rare_objects()
        self.common = [o for o in self.objects if o not in self.rare_objects]
        self.layouts = OrderedDict(((verb, g), stream_layout(config, v, g))
                                   for v, verb in enumerate(self.verbs) for g in range(groups))
        self.embeddings = self._embeddings()
        self.prototypes = self._prototypes()

    def _rare_objects(self):
        """Round-robin over shuffled groups; every group keeps at least one common object."""
        rng = functions.make_rng(self.seed, "rare")
        members = []
        for g in range(self.config.groups_per_verb):
            group = [o for o in self.objects if self.groups[o] == g]
            members.append([group[i] for i in rng.permutation(len(group))])
        count = rare_object_count(self.config)
        chosen = []
        for depth in range(max(len(m) for m in members)):
            for group in members:
                if len(chosen) < count and depth < len(group) - 1:
                    chosen.append(group[depth])
        return [o for o in self.objects if o in chosen]

    def _embeddings(self):
        rng = functions.make_rng(self.seed, "embeddings")
        norm = self.config.embedding_norm
        vectors = OrderedDict()
        for verb in self.verbs:
            vectors[verb] = norm * _unit(rng, PRIOR_HALF_DIM)
        centroids = [_unit(rng, PRIOR_HALF_DIM) for _ in range(self.config.groups_per_verb)]
        scale = self.config.embedding_noise / np.sqrt(PRIOR_HALF_DIM)
        for obj, group in self.groups.items():
            v = centroids[group] + scale * rng.normal(size=PRIOR_HALF_DIM)
            vectors[obj] = norm * v / np.linalg.norm(v)
        return EmbeddingTable(vectors, PRIOR_HALF_DIM)

    def _prototypes(self):
        """Entries of an informative prototype have mean square signal**2; other streams are zero."""
        rng = functions.make_rng(self.seed, "prototypes")
        prototypes = OrderedDict()
        for v, verb in enumerate(self.verbs):
            shared = {}
            for g in range(self.config.groups_per_verb):
                layout = self.layouts[(verb, g)]
                common = shared_streams(v, layout)
                streams = OrderedDict()
                for stream, dim in self.dims.items():
                    direction = self.config.signal * np.sqrt(dim) * _unit(rng, dim)
                    if stream not in layout:
                        streams[stream] = np.zeros(dim)
                    elif stream in common:
                        streams[stream] = shared.setdefault((layout, stream), direction)
                    else:
                        streams[stream] = direction
                prototypes[(verb, g)] = streams
        return prototypes

    def features(self, rng, prototype=None):
        """Prototype (or background) plus per-entry Gaussian noise for every stream."""
        out = OrderedDict()
        for stream, dim in self.dims.items():
            base = prototype[stream] if prototype is not None else np.zeros(dim)
            if self.config.noise > 0:
                out[stream] = base + self.config.noise * rng.normal(size=dim)
            else:
                out[stream] = base.copy()
        return out

    def negative_features(self, rng, obj):
        """Background, or with probability confuser_fraction the prototype of a random verb for another group."""
        groups = self.config.groups_per_verb
        if groups > 1 and rng.uniform() < self.config.confuser_fraction:
            verb = self.verbs[int(rng.integers(len(self.verbs)))]
            other = (self.groups[obj] + 1 + int(rng.integers(groups - 1))) % groups
            return self.features(rng, self.prototypes[(verb, other)])
        return self.features(rng)
    def scene_boxes(self, rng, count):
        """A human box and count object boxes inside the image."""
        width, height = self.config.image_size
        hw = rng.uniform(0.15, 0.35) * width
        hh = rng.uniform(0.35, 0.7) * height
        hx = rng.uniform(0, width - hw)
        hy = rng.uniform(0, height - hh)
        human = Box(hx, hy, hx + hw, hy + hh)
        boxes = []
        for _ in range(count):
            ow = rng.uniform(0.05, 0.3) * width
            oh = rng.uniform(0.05, 0.3) * height
            ox = rng.uniform(0, width - ow)
            oy = rng.uniform(0, height - oh)
            boxes.append(Box(ox, oy, ox + ow, oy + oh))
        return human, boxes

    def detect(self, rng, box):
        """A detection of box at a sampled IoU, scored by localization quality plus noise."""
        width, height = self.config.image_size
        low, high = self.config.iou_range
        target = rng.uniform(low, high)
        grow = rng.uniform() < 0.5
        scaled = functions.scale_box(box, 1.0 / np.sqrt(target)) if grow else functions.scale_box(box, np.sqrt(target))
        if functions.clamp_box(scaled, width, height) != tuple(scaled):
            scaled = functions.scale_box(box, np.sqrt(target))
        detected = Box(*functions.clamp_box(scaled, width, height))
        score = float(np.clip(functions.iou(detected, box) + rng.normal(0.0, 0.05), 0.01, 1.0))
        return detected, score

    def make_pair(self, image_id, human, obj_instance, feats, verbs):
        return PairSample(
            image_id=image_id,
            image_size=tuple(float(v) for v in self.config.image_size),
            human=human,
            object=obj_instance,
            h_app=feats["H"],
            o_app=feats["O"],
            spatial=feats["S"],
            pose=feats["P"],
            union_app=feats.get("U"),
            interactiveness=1.0,
            positive_verbs=tuple(verbs),
        )

    def train_image(self, index, verb, obj):
        """One annotated positive and negative_ratio negatives on common objects, same human, exact boxes."""
        rng = functions.make_rng(self.seed, "train", index)
        image_id = "train%06d" % index
        human_box, boxes = self.scene_boxes(rng, 1 + self.config.negative_ratio)
        human = Instance(human_box, HUMAN_CATEGORY, 1.0)
        group = self.groups[obj]
        pairs = [self.make_pair(image_id, human, Instance(boxes[0], obj, 1.0),
                                self.features(rng, self.prototypes[(verb, group)]), [verb])]
        for box in boxes[1:]:
            other = self.common[int(rng.integers(len(self.common)))]
            pairs.append(self.make_pair(image_id, human, Instance(box, other, 1.0),
                                        self.negative_features(rng, other), []))
        truths = [GroundTruth(image_id, verb, obj, human_box, boxes[0])]
        return pairs, truths

    def test_image(self, split, index, verb, obj, distractor_pool):
        """Detector-style scene: perturbed boxes with scores, distractors, low-score junk, proposals filtered."""
        rng = functions.make_rng(self.seed, split, index)
        image_id = "%s%06d" % (split, index)
        extra = self.config.distractors_per_image + self.config.junk_per_image
        human_box, boxes = self.scene_boxes(rng, 1 + extra)
        det_human, human_score = self.detect(rng, human_box)
        detections = [Instance(det_human, HUMAN_CATEGORY, human_score)]
        det_obj, obj_score = self.detect(rng, boxes[0])
        detections.append(Instance(det_obj, obj, obj_score))
        roles = {id(detections[1]): "positive"}
        for i, box in enumerate(boxes[1:]):
            category = distractor_pool[int(rng.integers(len(distractor_pool)))]
            if i < self.config.distractors_per_image:
                det_box, score = self.detect(rng, box)
                role = "distractor"
            else:
                det_box, score = box, float(rng.uniform(0.0, 0.02))
                role = "junk"
            detections.append(Instance(det_box, category, score))
            roles[id(detections[-1])] = role
        kept = filter_proposals(detections)
        pairs = []
        for h, o in pair_proposals(kept):
            role = roles[id(o)]
            if role == "positive":
                feats = self.features(rng, self.prototypes[(verb, self.groups[obj])])
                verbs = [verb]
            elif role == "distractor":
                feats = self.negative_features(rng, o.category)
                verbs = []
            else:
                feats = self.features(rng)
                verbs = []
            pairs.append(self.make_pair(image_id, h, o, feats, verbs))
        truths = [GroundTruth(image_id, verb, obj, human_box, boxes[0])]
        return pairs, truths




def _rare_categories(config, rare_objects, categories, seed):
    """Every category of a rare object, with its number of training images."""
    rng = functions.make_rng(seed, "rare-counts")
    limit = min(config.rare_train_max, config.train_per_category)
    rare = OrderedDict()
    for category in categories:
        if category[1] in rare_objects:
            rare[category] = int(rng.integers(1, limit + 1))
    return rare


def generate_synthetic(config, seed, out_dir=None):
    """
        generate_synthetic(
                SynthConfig     config
                int             seed
                str             out_dir     when given, the benchmark files are written there
                )

        Returns a SyntheticBenchmark. The result (and any written file) depends only on (config, seed); every image
        draws from its own derived seed.
    """
    config = validate_config(config)
    gen = _Generator(config, seed)
    vocabulary = VerbObjectTable(OrderedDict((v, list(gen.objects)) for v in gen.verbs))
    full_vocabulary = VerbObjectTable(OrderedDict((v, list(gen.objects) + list(gen.unseen)) for v in gen.verbs))
    categories = vocabulary.categories()
    rare = _rare_categories(config, gen.rare_objects, categories, seed)

    def build(split, plan, maker):
        pairs, truths = [], []
        for index, (verb, obj) in enumerate(plan):
            p, t = maker(split, index, verb, obj)
            pairs.extend(p)
            truths.extend(t)
        return pairs, truths

    train_plan = []
    for category in categories:
        train_plan.extend([category] * rare.get(category, config.train_per_category))
    train_pairs, train_truths = build("train", train_plan, lambda s, i, v, o: gen.train_image(i, v, o))
    test_plan = [c for c in categories for _ in range(config.test_per_category)]
    test_pairs, test_truths = build("test", test_plan,
                                    lambda s, i, v, o: gen.test_image(s, i, v, o, gen.objects))
    # unseen objects also appear as distractors, so unseen categories meet confusers
    unseen_pool = list(gen.objects) + list(gen.unseen)
    unseen_plan = [(v, o) for v in gen.verbs for o in gen.unseen for _ in range(config.test_per_category)]
    unseen_pairs, unseen_truths = build("unseen", unseen_plan,
                                        lambda s, i, v, o: gen.test_image(s, i, v, o, unseen_pool))

    benchmark = SyntheticBenchmark(
        config=config,
        seed=seed,
        embeddings=gen.embeddings,
        vocabulary=vocabulary,
        full_vocabulary=full_vocabulary,
        train=Dataset(train_pairs, train_truths, vocabulary),
        test=Dataset(test_pairs, test_truths, vocabulary),
        unseen=Dataset(unseen_pairs, unseen_truths, full_vocabulary),
        groups=gen.groups,
        layouts=gen.layouts,
        prototypes=gen.prototypes,
        rare_objects=list(gen.rare_objects),
        rare_categories=list(rare),
    )
    logger.info("synthetic benchmark: %d train pairs, %d test pairs, %d unseen pairs, %d rare objects "
                "(%d rare categories)", len(train_pairs), len(test_pairs), len(unseen_pairs), len(gen.rare_objects),
                len(rare))
    if out_dir is not None:
        write_benchmark(benchmark, out_dir)
    return benchmark


def describe(benchmark):
    """The generative record written as generator.json."""
    config = benchmark.config._asdict()
    for key in ("iou_range", "image_size"):
        config[key] = list(config[key])
    return OrderedDict([
        ("seed", benchmark.seed),
        ("config", config),
        ("streams", list(STREAMS) + (["U"] if benchmark.config.union_stream else [])),
        ("groups", OrderedDict((o, int(g)) for o, g in benchmark.groups.items())),
        ("layouts", [[verb, int(g), list(layout)] for (verb, g), layout in benchmark.layouts.items()]),
        ("rare_objects", list(benchmark.rare_objects)),
        ("rare_categories", [list(c) for c in benchmark.rare_categories]),
        ("unseen_objects", [o for o in benchmark.full_vocabulary.objects if o not in benchmark.vocabulary.objects]),
    ])


def write_benchmark(benchmark, out_dir):
    if not os.path.isdir(out_dir):
        os.makedirs(out_dir)
    save_table(benchmark.embeddings, os.path.join(out_dir, "embeddings.txt"))
    save_vocabulary(benchmark.vocabulary, os.path.join(out_dir, "vocabulary.json"))
    save_vocabulary(benchmark.full_vocabulary, os.path.join(out_dir, "vocabulary_full.json"))
    for split in ("train", "test", "unseen"):
        dataset = getattr(benchmark, split)
        save_dataset(dataset, os.path.join(out_dir, split + ".jsonl"), os.path.join(out_dir, split + "_gt.jsonl"))
    with io.open(os.path.join(out_dir, "generator.json"), "w", encoding="utf-8", newline="\n") as f:
        f.write(json.dumps(describe(benchmark), indent=2))
        f.write("\n")


def load_rare_categories(path):
    """Rare categories recorded in a generator.json."""
    with io.open(path, "r", encoding="utf-8") as f:
        return [tuple(c) for c in json.load(f)["rare_categories"]]
