#
# Copyright (C) 2026 pdnet contributors. See LICENSE file for terms.
#
"""
The pair classifier: language-prior channel attention (LPCA) on appearance streams, prior concatenation (LPFA) on
the spatial and pose streams, one block per stream with a slot-indexed output, prior-driven modal fusion (PAMF) and
the final detection score.

All rows of a batch are (pair, verb) combinations. For a row the prior is [verb embedding | object embedding], the
slot is picked by the ClassifierIndex, and

    S_PD = sigmoid( sum_i a_i * s_i )

where s_i is the slot output of stream i and a_i its PAMF attention (1 when PAMF is off).
"""
from __future__ import division
from collections import namedtuple, OrderedDict
import logging

import numpy as np

from pdnet.clustering import route_unseen
from pdnet.constants import (LPCA_VARIANTS, CLASSIFIER_SCHEMES, PRIOR_MODES, PRIOR_DIM, PRIOR_HALF_DIM, SPATIAL_DIM,
                             POSE_DIM, enum_member)
from pdnet.diffmath import ComputationGraph, grad_check
from pdnet.embeddings import lookup, make_prior
from pdnet.errors import (ModelConfigError, InvalidCategoryError, SlotOutOfRangeError, ScoreRangeError,
                          InvalidSchemeError, ConfigError)
from pdnet.functions import make_rng

logger = logging.getLogger(__name__)

PAMF_HIDDEN = 48
FEATURE_FIELDS = OrderedDict([("H", "h_app"), ("O", "o_app"), ("S", "spatial"), ("P", "pose"), ("U", "union_app")])

# variants that train S_au
VARIANTS_WITH_AU_LOSS = ("full", "no-C_att", "concat-DA")

StreamSpec = namedtuple("StreamSpec", ["name", "kind", "dim"])


def default_streams(k_a, union=False):
    """H and O appearance streams, S (42) and P (272) vector streams, and optionally the U appearance stream."""
    streams = [StreamSpec("H", "appearance", k_a), StreamSpec("O", "appearance", k_a),
               StreamSpec("S", "vector", SPATIAL_DIM), StreamSpec("P", "vector", POSE_DIM)]
    if union:
        streams.append(StreamSpec("U", "appearance", k_a))
    return streams


def validate_streams(streams, k_a):
    names = [s.name for s in streams]
    if len(set(names)) != len(names) or not streams:
        raise ModelConfigError("stream names must be unique and non-empty, got %s" % names)
    for s in streams:
        if s.name not in FEATURE_FIELDS:
            raise ModelConfigError("unknown stream '%s'" % s.name)
        expected_kind = "appearance" if s.name in ("H", "O", "U") else "vector"
        if s.kind != expected_kind:
            raise ModelConfigError("stream %s must be of kind %s" % (s.name, expected_kind))
        expected_dim = {"S": SPATIAL_DIM, "P": POSE_DIM}.get(s.name, k_a)
        if s.dim != expected_dim:
            raise ModelConfigError("stream %s must have dimension %d, got %d" % (s.name, expected_dim, s.dim))


AblationConfig = namedtuple("AblationConfig", ["lpca_variant", "lpfa", "pamf", "scheme", "prior",
                                               "use_interactiveness"])
AblationConfig.__new__.__defaults__ = ("full", True, True, "CSP", "verb-object", True)


def ablation_from_mapping(mapping):
    """AblationConfig from a flat mapping, canonicalizing variant, scheme and prior names."""
    unknown = set(mapping) - set(AblationConfig._fields)
    if unknown:
        raise ConfigError("unknown ablation keys: %s" % ", ".join(sorted(unknown)))
    values = AblationConfig()._asdict()
    values.update(mapping)
    variant = values["lpca_variant"]
    if variant is False or variant is None:
        # YAML reads a bare `off` as false
        variant = "off"
    return AblationConfig(
        lpca_variant=enum_member(LPCA_VARIANTS, variant, "LPCA variant"),
        lpfa=bool(values["lpfa"]),
        pamf=bool(values["pamf"]),
        scheme=enum_member(CLASSIFIER_SCHEMES, values["scheme"], "classifier scheme"),
        prior=enum_member(PRIOR_MODES, values["prior"], "prior mode"),
        use_interactiveness=bool(values["use_interactiveness"]),
    )


def _block_layers(stream):
    return 2 if stream.kind == "appearance" else 3


def block_input_dim(stream, ablation):
    if stream.kind == "vector" and ablation.lpfa:
        return stream.dim + PRIOR_DIM
    return stream.dim


def param_shapes(streams, k_a, k_c, ablation):
    """OrderedDict name -> shape of every parameter the configuration uses."""
    half = k_a // 2
    shapes = OrderedDict()

    def dense(prefix, fan_in, fan_out):
        shapes[prefix + ".W"] = (fan_in, fan_out)
        shapes[prefix + ".b"] = (fan_out,)

    variant = ablation.lpca_variant
    for s in streams:
        if s.kind != "appearance" or variant == "off":
            continue
        if variant != "plain-CA":
            dense("lpca.%s.P1" % s.name, PRIOR_DIM, half)
            dense("lpca.%s.P2" % s.name, half, k_a)
        if variant != "no-C_att":
            dense("lpca.%s.D1" % s.name, 2 * k_a if variant == "concat-DA" else k_a, half)
            dense("lpca.%s.D2" % s.name, half, k_a)
    for s in streams:
        width = block_input_dim(s, ablation)
        layers = _block_layers(s)
        for layer in range(1, layers):
            dense("block.%s.L%d" % (s.name, layer), width, width)
        dense("block.%s.L%d" % (s.name, layers), width, k_c)
    if ablation.pamf:
        dense("pamf.L1", PRIOR_DIM, PAMF_HIDDEN)
        dense("pamf.L2", PAMF_HIDDEN, len(streams))
    return shapes


class PdNetModel(object):
    """
    Parameters plus everything needed to turn a pair into graph inputs: stream specs, K_A, K_C, the ablation, the
    ClassifierIndex, the embedding table and (for CSP zero-shot routing) the cluster model.
    """

    def __init__(self, params, streams, k_a, k_c, ablation, index=None, embeddings=None, cluster_model=None):
        self.params = OrderedDict(params)
        self.streams = list(streams)
        self.k_a = k_a
        self.k_c = k_c
        self.ablation = ablation
        self.index = index
        self.embeddings = embeddings
        self.cluster_model = cluster_model
        self._priors = {}

    @property
    def stream_names(self):
        return [s.name for s in self.streams]

    def parameter_count(self):
        return int(sum(np.size(v) for v in self.params.values()))

    def with_params(self, params):
        """A model sharing everything but the parameter values."""
        return PdNetModel(params, self.streams, self.k_a, self.k_c, self.ablation, self.index, self.embeddings,
                          self.cluster_model)

    def prior(self, verb, obj):
        """The 600-valued prior for (verb, obj); the object half is zero under the verb-only prior."""
        key = (verb, obj)
        if key not in self._priors:
            if self.embeddings is None:
                raise ModelConfigError("the model has no embedding table to build priors from")
            vector = np.array(make_prior(self.embeddings, verb, obj).vector)
            if self.ablation.prior == "verb-only":
                vector[PRIOR_HALF_DIM:] = 0.0
            self._priors[key] = vector
        return self._priors[key]

    def slot(self, verb, obj, zero_shot=False):
        """Classifier slot for (verb, obj). In zero-shot mode an object outside the index is routed."""
        if self.index is None:
            raise ModelConfigError("the model has no classifier index")
        if (verb, obj) in self.index:
            return self.index.slot(verb, obj)
        if not zero_shot:
            raise InvalidCategoryError("('%s', '%s') is not a valid HOI category" % (verb, obj))
        scheme = self.index.scheme
        if scheme == "SH":
            return self.index.verb_slot(verb)
        if scheme == "CSP":
            if self.cluster_model is None:
                raise ModelConfigError("zero-shot routing under CSP needs the cluster model")
            cluster = route_unseen(self.cluster_model, verb, lookup(self.embeddings, obj))
            return self.index.cluster_slot(verb, cluster)
        raise InvalidSchemeError("the %s scheme has no slot for unseen object '%s'" % (scheme, obj))

    def verbs_for(self, obj, vocabulary=None):
        """Verbs to score for an object: from vocabulary when given, else from the classifier index."""
        if vocabulary is not None:
            return vocabulary.verbs_for(obj)
        return [v for v, o in self.index.categories() if o == obj]


def init_model(streams, k_a, k_c, seed, ablation=None, index=None, embeddings=None, cluster_model=None):
    """
        init_model(
                list            streams     StreamSpec per stream
                int             k_a         appearance width, even
                int             k_c         classifier slots, >= 1
                int             seed
                AblationConfig  ablation
                )

        Weights are uniform in +-1/sqrt(fan_in) from a per-parameter derived seed; biases are zero.
    """
    ablation = ablation or AblationConfig()
    if k_c is None or k_c < 1:
        raise ModelConfigError("K_C must be >= 1, got %r" % (k_c,))
    if k_a < 2 or k_a % 2:
        raise ModelConfigError("K_A must be an even number >= 2, got %r" % (k_a,))
    validate_streams(streams, k_a)
    if index is not None and index.num_slots != k_c:
        raise ModelConfigError("index has %d slots but K_C is %d" % (index.num_slots, k_c))
    params = OrderedDict()
    for name, shape in param_shapes(streams, k_a, k_c, ablation).items():
        if name.endswith(".b"):
            params[name] = np.zeros(shape)
        else:
            bound = 1.0 / np.sqrt(shape[0])
            params[name] = make_rng(seed, "init", name).uniform(-bound, bound, size=shape)
    model = PdNetModel(params, streams, k_a, k_c, ablation, index, embeddings, cluster_model)
    logger.debug("initialized model: %d parameters, K_A=%d, K_C=%d", model.parameter_count(), k_a, k_c)
    return model


# graph construction

def _dense(graph, x, prefix, shapes):
    return graph.affine(x, graph.param(prefix + ".W", shapes[prefix + ".W"]),
                        graph.param(prefix + ".b", shapes[prefix + ".b"]), name=prefix)


def _lpca_nodes(graph, name, feat, prior, variant, shapes):
    """Returns dict of the LPCA nodes for one appearance stream: refined, and when present l_a, l_b, c_att, s_au."""
    nodes = {}
    prefix = "lpca." + name
    if variant == "off":
        nodes["refined"] = feat
        return nodes
    if variant == "plain-CA":
        hidden = graph.relu(_dense(graph, feat, prefix + ".D1", shapes))
        nodes["c_att"] = graph.sigmoid(_dense(graph, hidden, prefix + ".D2", shapes), name=prefix + ".C_att")
        nodes["refined"] = graph.hadamard(feat, nodes["c_att"], name=prefix + ".refined")
        return nodes
    projected = _dense(graph, graph.relu(_dense(graph, prior, prefix + ".P1", shapes)), prefix + ".P2", shapes)
    nodes["l_a"] = graph.l2_normalize(projected, name=prefix + ".L_A")
    nodes["l_b"] = graph.hadamard(feat, nodes["l_a"], name=prefix + ".L_B")
    nodes["s_au"] = graph.sigmoid(graph.sum_elements(nodes["l_b"]), name=prefix + ".S_au")
    if variant == "no-C_att":
        nodes["refined"] = nodes["l_b"]
        return nodes
    attend = graph.concat([nodes["l_a"], feat]) if variant == "concat-DA" else nodes["l_b"]
    hidden = graph.relu(_dense(graph, attend, prefix + ".D1", shapes))
    nodes["c_att"] = graph.sigmoid(_dense(graph, hidden, prefix + ".D2", shapes), name=prefix + ".C_att")
    nodes["refined"] = graph.hadamard(feat, nodes["c_att"], name=prefix + ".refined")
    return nodes


def _block_nodes(graph, stream, x, shapes):
    layers = _block_layers(stream)
    h = x
    for layer in range(1, layers):
        h = graph.relu(_dense(graph, h, "block.%s.L%d" % (stream.name, layer), shapes))
    return _dense(graph, h, "block.%s.L%d" % (stream.name, layers), shapes)


def _pamf_nodes(graph, prior, shapes):
    hidden = graph.relu(_dense(graph, prior, "pamf.L1", shapes))
    return graph.sigmoid(_dense(graph, hidden, "pamf.L2", shapes), name="pamf.attention")


def build_graph(streams, k_a, k_c, ablation, training=False):
    """
    The batched pair graph. Inputs: prior (N, 600), feat.<stream> (N, dim), slot (N, K_C) one-hot, and when training
    labels and weights (N, 1). Outputs: s_pd, logits, attention (with PAMF), s_au.<stream>, and when training the
    loss and its components loss.pd and loss.au.<stream>.
    """
    shapes = param_shapes(streams, k_a, k_c, ablation)
    g = ComputationGraph()
    prior = g.input("prior", PRIOR_DIM)
    slot = g.input("slot", k_c)
    logits = []
    au_nodes = OrderedDict()
    for s in streams:
        feat = g.input("feat." + s.name, s.dim)
        if s.kind == "appearance":
            nodes = _lpca_nodes(g, s.name, feat, prior, ablation.lpca_variant, shapes)
            x = nodes["refined"]
            if training and ablation.lpca_variant in VARIANTS_WITH_AU_LOSS:
                au_nodes[s.name] = g.output("s_au." + s.name, nodes["s_au"])
        else:
            x = g.concat([feat, prior], name="lpfa." + s.name) if ablation.lpfa else feat
        out = _block_nodes(g, s, x, shapes)
        logits.append(g.sum_elements(g.hadamard(out, slot), name="logit." + s.name))
    stacked = g.output("logits", g.concat(logits, name="logits"))
    if ablation.pamf:
        attention = g.output("attention", _pamf_nodes(g, prior, shapes))
        fused = g.sum_elements(g.hadamard(attention, stacked), name="fused")
    else:
        fused = g.sum_elements(stacked, name="fused")
    s_pd = g.output("s_pd", g.sigmoid(fused, name="S_PD"))
    if training:
        labels = g.input("labels", 1)
        weights = g.input("weights", 1)
        terms = [g.output("loss.pd", g.bce(s_pd, labels, weights, name="bce.pd"))]
        for name, node in au_nodes.items():
            terms.append(g.output("loss.au." + name, g.bce(node, labels, weights, name="bce.au." + name)))
        g.output("loss", g.sum_elements(g.concat(terms), name="loss"))
    return g


# batching

Rows = namedtuple("Rows", ["bindings", "pair_indices", "verbs", "slots"])


def make_rows(model, pairs, zero_shot=False, vocabulary=None, labels=True):
    """
    Expands pairs into one row per (pair, verb to score) and builds the graph bindings. Each row's weight is one over
    the number of verbs scored for its pair, so a pair contributes the mean over its verbs.
    """
    priors, slots, feats, label_col, weight_col, pair_indices, verbs = [], [], OrderedDict(), [], [], [], []
    for s in model.streams:
        feats[s.name] = []
    for i, pair in enumerate(pairs):
        obj = pair.object.category
        pair_verbs = model.verbs_for(obj, vocabulary)
        if not pair_verbs:
            raise InvalidCategoryError("object '%s' has no valid verbs" % obj)
        positives = set(pair.positive_verbs)
        for verb in pair_verbs:
            priors.append(model.prior(verb, obj))
            slots.append(model.slot(verb, obj, zero_shot))
            label_col.append(1.0 if verb in positives else 0.0)
            weight_col.append(1.0 / len(pair_verbs))
            pair_indices.append(i)
            verbs.append(verb)
            for s in model.streams:
                feats[s.name].append(getattr(pair, FEATURE_FIELDS[s.name]))
    count = len(priors)
    onehot = np.zeros((count, model.k_c))
    if count:
        onehot[np.arange(count), slots] = 1.0
    bindings = {"prior": np.array(priors).reshape(count, PRIOR_DIM), "slot": onehot}
    for s in model.streams:
        values = feats[s.name]
        if any(v is None for v in values):
            raise ModelConfigError("stream %s needs %s on every pair" % (s.name, FEATURE_FIELDS[s.name]))
        bindings["feat." + s.name] = np.array(values).reshape(count, s.dim)
    if labels:
        bindings["labels"] = np.array(label_col).reshape(count, 1)
        bindings["weights"] = np.array(weight_col).reshape(count, 1)
    return Rows(bindings, pair_indices, verbs, slots)


def bind(model, rows):
    bindings = dict(model.params)
    bindings.update(rows.bindings)
    return bindings


def score_pairs(model, pairs, zero_shot=False, vocabulary=None, batch_size=512):
    """S_PD for every (pair, verb) row. Returns (pair_indices, verbs, scores) with scores in (0, 1)."""
    graph = build_graph(model.streams, model.k_a, model.k_c, model.ablation, training=False)
    pair_indices, verbs, scores = [], [], []
    for start in range(0, len(pairs), batch_size):
        chunk = pairs[start:start + batch_size]
        rows = make_rows(model, chunk, zero_shot, vocabulary, labels=False)
        if not rows.verbs:
            continue
        out = graph.evaluate(bind(model, rows), outputs=["s_pd"])
        pair_indices.extend(start + i for i in rows.pair_indices)
        verbs.extend(rows.verbs)
        scores.extend(float(v) for v in out["s_pd"][:, 0])
    return pair_indices, verbs, scores


# single-pair operations

LpcaResult = namedtuple("LpcaResult", ["refined", "s_au", "c_att", "l_a", "l_b"])


def lpca_forward(feature, prior, params, variant="full", stream="H"):
    """
    Refines one appearance vector with the stream's LPCA parameters:
        L_A = l2norm(P(prior)), L_B = F_A * L_A, S_au = sigmoid(sum(L_B)), C_att = sigmoid(D(L_B)), F~ = F_A * C_att
    Variants: plain-CA attends on F_A alone; no-C_att returns L_B; concat-DA attends on [L_A | F_A]; off returns F_A.
    """
    feature = np.asarray(feature, dtype=np.float64)
    prior = np.asarray(prior, dtype=np.float64)
    variant = enum_member(LPCA_VARIANTS, variant, "LPCA variant")
    if prior.shape != (PRIOR_DIM,):
        raise ModelConfigError("prior must have %d values, got %d" % (PRIOR_DIM, prior.size))
    k_a = feature.size
    shapes = param_shapes([StreamSpec(stream, "appearance", k_a)], k_a, 1,
                          AblationConfig(lpca_variant=variant, pamf=False))
    shapes = OrderedDict((k, v) for k, v in shapes.items() if k.startswith("lpca."))
    g = ComputationGraph()
    nodes = _lpca_nodes(g, stream, g.input("feat", k_a), g.input("prior", PRIOR_DIM), variant, shapes)
    for key, node in nodes.items():
        g.output(key, node)
    bindings = {k: params[k] for k in shapes}
    bindings.update({"feat": feature, "prior": prior})
    out = g.evaluate(bindings)
    s_au = out.get("s_au")
    return LpcaResult(out["refined"], float(s_au[0]) if s_au is not None else None, out.get("c_att"),
                      out.get("l_a"), out.get("l_b"))


def lpfa_augment(feature, prior):
    """[feature | prior]: 42 -> 642 for spatial, 272 -> 872 for pose."""
    prior = np.asarray(prior, dtype=np.float64)
    if prior.shape != (PRIOR_DIM,):
        raise ModelConfigError("prior must have %d values, got %d" % (PRIOR_DIM, prior.size))
    return np.concatenate([np.asarray(feature, dtype=np.float64).reshape(-1), prior])


def pamf_scores(prior, params, num_streams=None):
    """
    sigmoid(L2(relu(L1(prior)))): one attention score per stream, each in (0, 1). Without PAMF parameters every
    stream gets 1, which needs num_streams.
    """
    shapes = {k: np.shape(v) for k, v in params.items() if k.startswith("pamf.")}
    if not shapes:
        if num_streams is None:
            raise ModelConfigError("no PAMF parameters and no stream count given")
        return np.ones(num_streams)
    g = ComputationGraph()
    g.output("attention", _pamf_nodes(g, g.input("prior", PRIOR_DIM), shapes))
    bindings = {k: params[k] for k in shapes}
    bindings["prior"] = np.asarray(prior, dtype=np.float64)
    return g.evaluate(bindings)["attention"]


def stream_logit(model, stream, feature, slot):
    """
    Pre-sigmoid output of one stream's block at one slot. feature is the block input: the refined vector for an
    appearance stream, or the LPFA-augmented vector for a vector stream when LPFA is on.
    """
    if not 0 <= slot < model.k_c:
        raise SlotOutOfRangeError("slot %d is outside [0, %d)" % (slot, model.k_c))
    spec = [s for s in model.streams if s.name == stream]
    if not spec:
        raise ModelConfigError("model has no stream '%s'" % stream)
    spec = spec[0]
    shapes = {k: np.shape(v) for k, v in model.params.items() if k.startswith("block.%s." % stream)}
    g = ComputationGraph()
    g.output("out", _block_nodes(g, spec, g.input("x", block_input_dim(spec, model.ablation)), shapes))
    bindings = {k: model.params[k] for k in shapes}
    bindings["x"] = np.asarray(feature, dtype=np.float64)
    return float(g.evaluate(bindings)["out"][slot])


def classify_pair(pair, verb, model, zero_shot=False, vocabulary=None):
    """
    S_PD for one (pair, verb). The category must be valid for the model, unless zero_shot routes the pair's object
    to a classifier slot.
    """
    obj = pair.object.category
    if vocabulary is not None and (verb, obj) not in vocabulary:
        raise InvalidCategoryError("('%s', '%s') is not a valid HOI category" % (verb, obj))
    if not zero_shot and (verb, obj) not in model.index:
        raise InvalidCategoryError("('%s', '%s') is not a valid HOI category" % (verb, obj))
    graph = build_graph(model.streams, model.k_a, model.k_c, model.ablation, training=False)
    rows = make_rows(model, [pair._replace(positive_verbs=())], zero_shot, _SingleCategory(verb, obj), labels=False)
    return float(graph.evaluate(bind(model, rows), outputs=["s_pd"])["s_pd"][0, 0])


class _SingleCategory(object):
    """A vocabulary stand-in that offers exactly one verb for one object."""

    def __init__(self, verb, obj):
        self.verb = verb
        self.obj = obj

    def verbs_for(self, obj):
        return [self.verb] if obj == self.obj else []

    def __contains__(self, category):
        return tuple(category) == (self.verb, self.obj)


def score_hoi(s_h, s_o, s_pd, s_i=1.0):
    """S_h * S_o * S_PD * S_I; every factor must lie in [0, 1]."""
    for name, value in (("S_h", s_h), ("S_o", s_o), ("S_PD", s_pd), ("S_I", s_i)):
        if not 0.0 <= value <= 1.0:
            raise ScoreRangeError("%s = %r is outside [0, 1]" % (name, value))
    return s_h * s_o * s_pd * s_i


# gradient checks on composed graphs

def _random_bindings(graph_shapes, rng, rows, streams, k_c):
    bindings = OrderedDict()
    for name, shape in graph_shapes.items():
        if name.endswith(".W"):
            bindings[name] = rng.normal(scale=1.0 / np.sqrt(shape[0]), size=shape)
        else:
            bindings[name] = rng.normal(scale=0.1, size=shape)
    bindings["prior"] = rng.normal(scale=0.1, size=(rows, PRIOR_DIM))
    for s in streams:
        bindings["feat." + s.name] = rng.normal(size=(rows, s.dim))
    slots = rng.integers(k_c, size=rows)
    bindings["slot"] = np.eye(k_c)[slots]
    bindings["labels"] = rng.integers(2, size=(rows, 1)).astype(np.float64)
    bindings["weights"] = rng.uniform(0.5, 1.0, size=(rows, 1))
    return bindings


def composed_checks(seed=0, points=100, k_a=8, k_c=3, max_entries=2, tolerance=1e-4):
    """
    Gradient checks of the LPCA subgraph, the PAMF subgraph and the full training graph (K_A=8, K_C=3) at `points`
    seeded random points. Returns OrderedDict name -> worst GradCheckReport.
    """
    streams = default_streams(k_a)
    ablation = AblationConfig()
    shapes = param_shapes(streams, k_a, k_c, ablation)
    rng = np.random.default_rng(seed)
    graphs = OrderedDict()

    # LPCA alone: refined features projected onto a random direction, plus the S_au term
    g = ComputationGraph()
    nodes = _lpca_nodes(g, "H", g.input("feat.H", k_a), g.input("prior", PRIOR_DIM), "full", shapes)
    direction = g.input("direction", k_a)
    g.output("loss", g.sum_elements(g.concat([g.sum_elements(g.hadamard(nodes["refined"], direction)),
                                              g.bce(nodes["s_au"], g.input("labels", 1))])))
    graphs["lpca"] = (g, [k for k in shapes if k.startswith("lpca.H.")])

    g = ComputationGraph()
    attention = _pamf_nodes(g, g.input("prior", PRIOR_DIM), shapes)
    g.output("loss", g.sum_elements(g.hadamard(attention, g.input("direction", len(streams)))))
    graphs["pamf"] = (g, [k for k in shapes if k.startswith("pamf.")])

    graphs["classify_pair"] = (build_graph(streams, k_a, k_c, ablation, training=True), list(shapes))

    results = OrderedDict()
    for name, (graph, wrt) in graphs.items():
        worst = None
        for point in range(points):
            graph_shapes = OrderedDict((k, shapes[k]) for k in graph.param_names)
            bindings = _random_bindings(graph_shapes, rng, 2, streams, k_c)
            if name != "classify_pair":
                bindings = {k: (v[0] if k in ("prior", "feat.H", "labels") else v) for k, v in bindings.items()}
                bindings["direction"] = rng.normal(size=k_a if name == "lpca" else len(streams))
            report = grad_check(graph, bindings, "loss", wrt=wrt, tolerance=tolerance, max_entries=max_entries,
                                seed=point)
            if worst is None or report.max_rel_error > worst.max_rel_error:
                worst = report
        results[name] = worst
    return results
