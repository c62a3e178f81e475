#
# Copyright (C) 2026 pdnet contributors. See LICENSE file for terms.
#
"""
Per-verb object clusters over word embeddings, and the classifier-slot index for the SH, SP and CSP schemes.

SH gives every verb one classifier shared by all its objects, SP gives every (verb, object) category its own, and CSP
gives one classifier per (verb, object cluster). Objects never seen in training reach a CSP classifier through
route_unseen.
"""
from __future__ import division
from collections import namedtuple, OrderedDict
import hashlib
import io
import json
import logging
import math

import numpy as np

from pdnet.constants import CLASSIFIER_SCHEMES, NORM_EPS, enum_member
from pdnet.embeddings import lookup
from pdnet.errors import (ClusteringError, InvalidSchemeError, MissingClusterError, UnknownVerbError,
                          InvalidCategoryError, ManifestFormatError)
from pdnet.functions import derive_seed

logger = logging.getLogger(__name__)

MANIFEST_FORMAT = "pdnet-clusters"
MANIFEST_VERSION = 1
MAX_ITERATIONS = 300


class VerbObjectTable(object):
    """The valid (verb, object) categories: for each verb, its ordered object list O_v."""

    def __init__(self, objects_per_verb):
        self._objects = OrderedDict()
        for verb, objects in objects_per_verb.items():
            objects = tuple(objects)
            if len(set(objects)) != len(objects):
                raise ClusteringError("verb '%s' lists an object twice" % verb)
            if not objects:
                raise ClusteringError("verb '%s' has no objects" % verb)
            self._objects[verb] = objects

    @classmethod
    def from_pairs(cls, pairs):
        """Builds a table from (verb, object) pairs; verbs and objects come out sorted, repeats are merged."""
        grouped = {}
        for verb, obj in pairs:
            grouped.setdefault(verb, set()).add(obj)
        return cls(OrderedDict((verb, sorted(grouped[verb])) for verb in sorted(grouped)))

    @property
    def verbs(self):
        return list(self._objects)

    @property
    def objects(self):
        """Every object that appears with some verb, sorted."""
        return sorted(set(o for objects in self._objects.values() for o in objects))

    def objects_of(self, verb):
        try:
            return self._objects[verb]
        except KeyError:
            raise UnknownVerbError("unknown verb '%s'" % verb)

    def verbs_for(self, obj):
        """Verbs valid for an object, in table order."""
        return [verb for verb, objects in self._objects.items() if obj in objects]

    def categories(self):
        return [(verb, obj) for verb, objects in self._objects.items() for obj in objects]

    def __contains__(self, category):
        verb, obj = category
        return verb in self._objects and obj in self._objects[verb]

    def __len__(self):
        return sum(len(objects) for objects in self._objects.values())

    def to_dict(self):
        return OrderedDict((verb, list(objects)) for verb, objects in self._objects.items())


def cluster_count(n_objects):
    """C_v = max(1, floor(sqrt(n_objects)))."""
    if n_objects < 1:
        raise ClusteringError("a verb needs at least one object, got %d" % n_objects)
    n = int(n_objects)
    root = int(math.sqrt(n))
    while root * root > n:
        root -= 1
    while (root + 1) * (root + 1) <= n:
        root += 1
    return max(1, root)


KMeansResult = namedtuple("KMeansResult", ["assignments", "centroids", "objective_history", "iterations"])


def _unit_rows(points):
    points = np.asarray(points, dtype=np.float64)
    if points.ndim != 2 or points.shape[0] == 0:
        raise ClusteringError("expected a non-empty (n, d) array of embeddings, got shape %s" % (points.shape,))
    norms = np.linalg.norm(points, axis=1, keepdims=True)
    if np.any(norms < NORM_EPS):
        raise ClusteringError("embeddings must be nonzero; row %d is zero" % int(np.argmin(norms[:, 0])))
    return points / norms


def distinct_count(points):
    """Number of distinct directions among the rows of points."""
    return np.unique(np.round(_unit_rows(points), 12), axis=0).shape[0]


def _seed_centroids(x, k, rng):
    """k-means++ on cosine distance."""
    n = x.shape[0]
    chosen = [int(rng.integers(n))]
    distance = np.clip(1.0 - np.dot(x, x[chosen[0]]), 0.0, None)
    while len(chosen) < k:
        total = distance.sum()
        if total <= 0:
            candidate = int(np.argmax(distance))
        else:
            candidate = int(rng.choice(n, p=distance / total))
        chosen.append(candidate)
        distance = np.minimum(distance, np.clip(1.0 - np.dot(x, x[candidate]), 0.0, None))
    return x[chosen].copy()


def _objective(x, centroids, assignments):
    return float(np.sum(1.0 - np.einsum("ij,ij->i", x, centroids[assignments])))


def kmeans_cosine(embeddings, k, seed, max_iterations=MAX_ITERATIONS):
    """
        kmeans_cosine(
                array       embeddings      (n, d), rows nonzero
                int         k               1 <= k <= distinct rows
                int         seed
                )

        Spherical k-means: rows are unit-normalized, assignment is by highest cosine similarity (lowest index wins
        ties), centroids are normalized member means. Empty clusters take the point farthest from its own centroid.
        Returns KMeansResult; objective_history holds the summed cosine distance after every update.
    """
    x = _unit_rows(embeddings)
    k = int(k)
    distinct = np.unique(np.round(x, 12), axis=0).shape[0]
    if k < 1 or k > distinct:
        raise ClusteringError("k=%d must be between 1 and the number of distinct points (%d)" % (k, distinct))
    rng = np.random.default_rng(seed)
    centroids = _seed_centroids(x, k, rng)
    assignments = None
    history = []
    iterations = 0
    for iterations in range(1, max_iterations + 1):
        new_assignments = np.argmax(np.dot(x, centroids.T), axis=1)
        _repair_empty(x, centroids, new_assignments, k)
        for c in range(k):
            members = x[new_assignments == c]
            mean = members.sum(axis=0)
            norm = np.linalg.norm(mean)
            centroids[c] = mean / norm if norm > NORM_EPS else members[0]
        history.append(_objective(x, centroids, new_assignments))
        if assignments is not None and np.array_equal(assignments, new_assignments):
            assignments = new_assignments
            break
        assignments = new_assignments
    return KMeansResult(assignments.astype(int), centroids, history, iterations)


def _repair_empty(x, centroids, assignments, k):
    for c in range(k):
        if np.any(assignments == c):
            continue
        similarity = np.einsum("ij,ij->i", x, centroids[assignments])
        sizes = np.bincount(assignments, minlength=k)
        donors = sizes[assignments] > 1
        # farthest point among clusters that can spare one
        candidates = np.where(donors)[0]
        victim = candidates[np.argmin(similarity[candidates])]
        assignments[victim] = c
        centroids[c] = x[victim]


VerbClusters = namedtuple("VerbClusters", ["verb", "objects", "count", "assignments", "centroids"])


class ClusterModel(object):
    """Per-verb clusters: C_v, unit centroids and the object -> cluster assignment."""

    def __init__(self, clusters, seed=None):
        self._clusters = OrderedDict((c.verb, c) for c in clusters)
        self.seed = seed

    @property
    def verbs(self):
        return list(self._clusters)

    def __contains__(self, verb):
        return verb in self._clusters

    def clusters(self, verb):
        try:
            return self._clusters[verb]
        except KeyError:
            raise UnknownVerbError("unknown verb '%s'" % verb)

    def count(self, verb):
        return self.clusters(verb).count

    def cluster_of(self, verb, obj):
        assignments = self.clusters(verb).assignments
        if obj not in assignments:
            raise MissingClusterError("no cluster assignment for ('%s', '%s')" % (verb, obj))
        return assignments[obj]

    def members(self, verb, cluster):
        return [o for o, c in self.clusters(verb).assignments.items() if c == cluster]

    def total_clusters(self):
        return sum(c.count for c in self._clusters.values())

    def to_manifest(self):
        verbs = []
        for c in self._clusters.values():
            verbs.append(OrderedDict([
                ("verb", c.verb),
                ("objects", list(c.objects)),
                ("count", int(c.count)),
                ("assignments", OrderedDict((o, int(c.assignments[o])) for o in c.objects)),
                ("centroids", [[float(v) for v in row] for row in c.centroids]),
            ]))
        return OrderedDict([("format", MANIFEST_FORMAT), ("version", MANIFEST_VERSION), ("seed", self.seed),
                            ("verbs", verbs)])

    @classmethod
    def from_manifest(cls, manifest, source="<manifest>"):
        if not isinstance(manifest, dict) or manifest.get("format") != MANIFEST_FORMAT:
            raise ManifestFormatError("%s: not a %s manifest" % (source, MANIFEST_FORMAT))
        clusters = []
        try:
            for i, entry in enumerate(manifest["verbs"]):
                centroids = np.array(entry["centroids"], dtype=np.float64)
                count = int(entry["count"])
                assignments = OrderedDict((o, int(entry["assignments"][o])) for o in entry["objects"])
                if centroids.shape[0] != count or any(not 0 <= c < count for c in assignments.values()):
                    raise ManifestFormatError("%s: verb entry %d ('%s') is inconsistent" % (source, i, entry["verb"]))
                clusters.append(VerbClusters(entry["verb"], tuple(entry["objects"]), count, assignments, centroids))
        except (KeyError, TypeError, ValueError) as e:
            if isinstance(e, ManifestFormatError):
                raise
            raise ManifestFormatError("%s: malformed manifest (%s)" % (source, e))
        return cls(clusters, seed=manifest.get("seed"))

    def digest(self):
        """sha256 of the canonical manifest JSON."""
        canonical = json.dumps(self.to_manifest(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def build_cluster_model(table, embeddings, seed):
    """Clusters the objects of every verb into cluster_count(|O_v|) groups, each verb with its own sub-seed."""
    clusters = []
    for verb in table.verbs:
        objects = table.objects_of(verb)
        points = np.stack([lookup(embeddings, o) for o in objects])
        k = cluster_count(len(objects))
        distinct = distinct_count(points)
        if k > distinct:
            logger.warning("verb '%s': %d objects share %d distinct embeddings, using %d clusters",
                           verb, len(objects), distinct, distinct)
            k = distinct
        result = kmeans_cosine(points, k, derive_seed(seed, "kmeans", verb))
        assignments = OrderedDict((o, int(c)) for o, c in zip(objects, result.assignments))
        clusters.append(VerbClusters(verb, objects, k, assignments, result.centroids))
        logger.debug("verb '%s': %d objects -> %d clusters in %d iterations", verb, len(objects), k, result.iterations)
    return ClusterModel(clusters, seed=seed)


def save_manifest(model, path):
    with io.open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write(json.dumps(model.to_manifest(), indent=2))
        f.write("\n")


def load_manifest(path):
    try:
        with io.open(path, "r", encoding="utf-8") as f:
            manifest = json.load(f)
    except ValueError as e:
        raise ManifestFormatError("%s: invalid JSON (%s)" % (path, e))
    return ClusterModel.from_manifest(manifest, source=str(path))


class ClassifierIndex(object):
    """Maps each valid (verb, object) to a classifier slot in [0, num_slots)."""

    def __init__(self, scheme, slots, num_slots, verb_slots=None, cluster_slots=None):
        self.scheme = scheme
        self._slots = OrderedDict(slots)
        self.num_slots = int(num_slots)
        self._verb_slots = OrderedDict(verb_slots or {})
        self._cluster_slots = OrderedDict(cluster_slots or {})

    def __contains__(self, category):
        return tuple(category) in self._slots

    def categories(self):
        return list(self._slots)

    def slot(self, verb, obj):
        try:
            return self._slots[(verb, obj)]
        except KeyError:
            raise InvalidCategoryError("('%s', '%s') is not a valid HOI category" % (verb, obj))

    def verb_slot(self, verb):
        if self.scheme != "SH":
            raise InvalidSchemeError("verb slots exist only under SH, index is %s" % self.scheme)
        try:
            return self._verb_slots[verb]
        except KeyError:
            raise UnknownVerbError("unknown verb '%s'" % verb)

    def cluster_slot(self, verb, cluster):
        if self.scheme != "CSP":
            raise InvalidSchemeError("cluster slots exist only under CSP, index is %s" % self.scheme)
        try:
            return self._cluster_slots[(verb, cluster)]
        except KeyError:
            raise MissingClusterError("verb '%s' has no cluster %r" % (verb, cluster))

    def to_dict(self):
        return OrderedDict([
            ("scheme", self.scheme),
            ("num_slots", self.num_slots),
            ("slots", [[v, o, s] for (v, o), s in self._slots.items()]),
            ("verb_slots", [[v, s] for v, s in self._verb_slots.items()]),
            ("cluster_slots", [[v, c, s] for (v, c), s in self._cluster_slots.items()]),
        ])

    @classmethod
    def from_dict(cls, data):
        return cls(data["scheme"],
                   OrderedDict(((v, o), int(s)) for v, o, s in data["slots"]),
                   data["num_slots"],
                   OrderedDict((v, int(s)) for v, s in data.get("verb_slots", [])),
                   OrderedDict(((v, int(c)), int(s)) for v, c, s in data.get("cluster_slots", [])))

    def __eq__(self, other):
        return isinstance(other, ClassifierIndex) and self.to_dict() == other.to_dict()

    def __ne__(self, other):
        return not self == other


def build_index(scheme, table, cluster_model=None):
    """
        build_index(
                str                 scheme          SH | SP | CSP
                VerbObjectTable     table
                ClusterModel        cluster_model   required for CSP
                )

        Slots are numbered densely in table order: SH one per verb, SP one per category, CSP one per (verb, cluster).
    """
    try:
        scheme = enum_member(CLASSIFIER_SCHEMES, scheme, "classifier scheme")
    except ValueError as e:
        raise InvalidSchemeError(str(e))
    slots = OrderedDict()
    verb_slots = OrderedDict()
    cluster_slots = OrderedDict()
    if scheme == "SH":
        for verb in table.verbs:
            verb_slots[verb] = len(verb_slots)
            for obj in table.objects_of(verb):
                slots[(verb, obj)] = verb_slots[verb]
        num_slots = len(verb_slots)
    elif scheme == "SP":
        for category in table.categories():
            slots[category] = len(slots)
        num_slots = len(slots)
    else:
        if cluster_model is None:
            raise MissingClusterError("the CSP scheme needs a cluster model")
        num_slots = 0
        for verb in table.verbs:
            if verb not in cluster_model:
                raise MissingClusterError("no clusters for verb '%s'" % verb)
            base = num_slots
            count = cluster_model.count(verb)
            for c in range(count):
                cluster_slots[(verb, c)] = base + c
            for obj in table.objects_of(verb):
                slots[(verb, obj)] = base + cluster_model.cluster_of(verb, obj)
            num_slots += count
    return ClassifierIndex(scheme, slots, num_slots, verb_slots, cluster_slots)


def route_unseen(cluster_model, verb, object_embedding):
    """Nearest centroid of the verb under cosine distance; the lowest cluster index wins ties."""
    clusters = cluster_model.clusters(verb)
    vector = np.asarray(object_embedding, dtype=np.float64)
    norm = np.linalg.norm(vector)
    if norm < NORM_EPS:
        raise ClusteringError("cannot route a zero embedding")
    similarity = np.dot(clusters.centroids, vector / norm)
    best = similarity.max()
    return int(np.flatnonzero(similarity >= best - 1e-12)[0])


PolysemyRow = namedtuple("PolysemyRow", ["threshold", "verbs", "verb_ratio", "categories", "category_ratio"])


def polysemy_stats(table, thresholds=(9, 4, 2)):
    """For each threshold t: how many verbs have >= t objects, and how many categories those verbs cover."""
    counts = [len(table.objects_of(v)) for v in table.verbs]
    total_verbs = len(counts)
    total_categories = sum(counts)
    rows = []
    for t in thresholds:
        selected = [n for n in counts if n >= t]
        rows.append(PolysemyRow(t, len(selected), len(selected) / total_verbs if total_verbs else 0.0,
                                sum(selected), sum(selected) / total_categories if total_categories else 0.0))
    return rows


def polysemic_verbs(table, top=10):
    """(verb, object count) pairs, most objects first, ties by verb name."""
    ranked = sorted(((v, len(table.objects_of(v))) for v in table.verbs), key=lambda item: (-item[1], item[0]))
    return ranked[:top]
