#
# Copyright (C) 2026 pdnet contributors. See LICENSE file for terms.
#
"""
Helper methods for tests, and test configuration information.
"""
import os as _os
import shutil as _shutil
import tempfile as _tempfile
import unittest as _unittest
from collections import OrderedDict as _OrderedDict

import numpy as _np

from pdnet.clustering import VerbObjectTable, build_cluster_model, build_index
from pdnet.embeddings import EmbeddingTable
from pdnet.features import Box, Instance, PairSample, encode_spatial, encode_pose
from pdnet.network import AblationConfig, default_streams, init_model
from pdnet.synthetic import SynthConfig

# PLEASE MODIFY this flag (or set PDNET_BENCHMARK=1) to run the slow end-to-end benchmark tests, which train several
# models on the default synthetic benchmark.
run_benchmark_tests = _os.environ.get("PDNET_BENCHMARK") == "1"

# objects per verb in the 15-verb verb-polysemy benchmark; CSP gives it 83 classifier slots
HOI_VP_OBJECT_COUNTS = [49, 8, 4, 229, 218, 196, 8, 7, 4, 22, 10, 29, 5, 18, 29]
HOI_VP_CSP_SLOTS = 83

# the large benchmark vocabulary
BENCH_VERBS = 117
BENCH_OBJECTS = 80
BENCH_CATEGORIES = 600

# appearance width and vocabulary of the toy model
K_A = 8
TOY_TOKENS = ["hold", "ride", "cup", "knife", "fork", "spoon", "horse", "bike", "mug"]

# small enough to train in a few seconds
TINY_SYNTH = SynthConfig(num_verbs=2, objects_per_verb=4, groups_per_verb=2, k_a=8, train_per_category=6,
                         test_per_category=2, rare_fraction=0.25, unseen_objects=2, noise=0.3,
                         distractors_per_image=1, junk_per_image=1)


class TestFailAndError(Exception):
    pass


class TestError(Exception):
    pass


def toy_embeddings(tokens, dim=300, seed=0):
    rng = _np.random.default_rng(seed)
    return EmbeddingTable(dict((t, rng.normal(size=dim)) for t in tokens), dim)


def toy_table(spec):
    """VerbObjectTable from {'verb': ['obj', ...]}."""
    return VerbObjectTable(spec)


def toy_pair(obj="cup", verbs=(), k_a=8, seed=0, image_id="img0", union=False, interactiveness=1.0):
    rng = _np.random.default_rng(seed)
    human = Instance(Box(100, 50, 220, 400), "person", 0.9)
    thing = Instance(Box(200, 200, 300, 280), obj, 0.8)
    keypoints = _np.column_stack([rng.uniform(100, 220, 17), rng.uniform(50, 400, 17), rng.uniform(0, 1, 17)])
    return PairSample(
        image_id=image_id,
        image_size=(640.0, 480.0),
        human=human,
        object=thing,
        h_app=rng.normal(size=k_a),
        o_app=rng.normal(size=k_a),
        spatial=encode_spatial(human.box, thing.box, 640, 480),
        pose=encode_pose(keypoints, human.box, thing.box, 640, 480),
        union_app=rng.normal(size=k_a) if union else None,
        interactiveness=interactiveness,
        positive_verbs=tuple(verbs),
    )


class PdNetTest(_unittest.TestCase):
    def make_tempdir(self):
        path = _tempfile.mkdtemp(prefix="pdnet-test-")
        self.addCleanup(_shutil.rmtree, path, True)
        return path

    def run_snippet_and_count_problems(self, cases, fn):
        """Runs fn on every named case; returned strings count as failures, exceptions as errors."""
        errors = []
        failures = []
        for name, case in cases.items():
            try:
                result = fn(case)
                if result is not None:
                    failures.append((name, result))
            except Exception as e:
                errors.append((name, e))
        # format the errors and failure messages for printing:
        errors = ", ".join(["%s (%r)" % e for e in errors])
        failures = ", ".join(["%s (%s)" % f for f in failures])
        if failures and errors:
            raise TestFailAndError("cases error'd: %s\nand cases failed: %s" % (errors, failures))
        elif errors:
            raise TestError("cases error'd: %s" % errors)
        else:
            self.assertEqual(len(failures), 0, "Cases failed: %s" % failures)


def benchmark_sized_table():
    """117 verbs over 80 objects, 600 categories."""
    objects = ["object%02d" % i for i in range(BENCH_OBJECTS)]
    spec = _OrderedDict()
    for i in range(BENCH_VERBS):
        count = 5 + (1 if i < BENCH_CATEGORIES - 5 * BENCH_VERBS else 0)
        spec["verb%03d" % i] = [objects[(7 * i + j) % BENCH_OBJECTS] for j in range(count)]
    return VerbObjectTable(spec)


def toy_model(scheme="CSP", ablation=None, seed=0, jitter=0.1):
    """
    A model over hold: {cup, knife, fork, spoon} and ride: {horse, bike}, with 'mug' embedded but unseen. Returns
    (model, table).
    """
    table = VerbObjectTable(_OrderedDict([("hold", ["cup", "knife", "fork", "spoon"]), ("ride", ["horse", "bike"])]))
    embeddings = toy_embeddings(TOY_TOKENS)
    clusters = build_cluster_model(table, embeddings, seed=0)
    ablation = (ablation or AblationConfig())._replace(scheme=scheme)
    index = build_index(scheme, table, clusters)
    model = init_model(default_streams(K_A), K_A, index.num_slots, seed, ablation, index, embeddings, clusters)
    # nonzero biases so every path carries signal
    rng = _np.random.default_rng(seed + 100)
    params = _OrderedDict((k, v + rng.normal(scale=jitter, size=v.shape) if k.endswith(".b") else v)
                          for k, v in model.params.items())
    return model.with_params(params), table
