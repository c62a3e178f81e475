#
# Copyright (C) 2026 pdnet contributors. See LICENSE file for terms.
#
"""
Adam training of a PdNetModel on the multi-task loss: for every verb scored on a pair, BCE on S_PD plus BCE on the
auxiliary score S_au of each appearance stream whose LPCA variant trains it. A pair contributes the mean over its
verbs and a batch the sum over its pairs. Checkpoints are the diffmath parameter file with a model header.
"""
from __future__ import division
from collections import namedtuple, OrderedDict
import csv
import io
import logging

import numpy as np

from pdnet.clustering import build_cluster_model, build_index, ClassifierIndex
from pdnet.diffmath import adam_step, init_adam, save_params, load_params
from pdnet.errors import EmptyDatasetError, CheckpointFormatError, CheckpointMismatchError, ConfigError
from pdnet.functions import derive_seed, make_rng
from pdnet.network import (AblationConfig, StreamSpec, PdNetModel, ablation_from_mapping, build_graph, make_rows,
                           bind, default_streams, init_model, param_shapes)

logger = logging.getLogger(__name__)

try:
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
except ImportError:
    plt = None

CHECKPOINT_KIND = "pdnet-model"


class TrainConfig(namedtuple("TrainConfig", ["epochs", "learning_rate", "batch_size", "seed", "negative_ratio",
                                             "loss_average", "ablation"])):
    """Training hyperparameters; the classifier scheme lives in the ablation."""
    __slots__ = ()

    @property
    def scheme(self):
        return self.ablation.scheme


TrainConfig.__new__.__defaults__ = (12, 1e-3, 32, 0, 3.0, True, AblationConfig())

TRAIN_KEYS = ("epochs", "learning_rate", "batch_size", "seed", "negative_ratio", "loss_average")


def train_config_from_mapping(mapping):
    """
    TrainConfig from a flat mapping. Training keys and ablation keys (lpca_variant, lpfa, pamf, scheme, prior,
    use_interactiveness) share one namespace; anything else is rejected.
    """
    train_values = dict((k, v) for k, v in mapping.items() if k in TRAIN_KEYS)
    ablation_values = dict((k, v) for k, v in mapping.items() if k in AblationConfig._fields)
    unknown = set(mapping) - set(train_values) - set(ablation_values)
    if unknown:
        raise ConfigError("unknown training keys: %s" % ", ".join(sorted(unknown)))
    config = TrainConfig(ablation=ablation_from_mapping(ablation_values), **train_values)
    if int(config.epochs) < 1:
        raise ConfigError("epochs must be >= 1, got %r" % config.epochs)
    if config.negative_ratio < 0:
        raise ConfigError("negative_ratio must be >= 0, got %r" % config.negative_ratio)
    if int(config.batch_size) < 1:
        raise ConfigError("batch_size must be >= 1, got %r" % config.batch_size)
    if config.learning_rate < 0:
        raise ConfigError("learning_rate must be >= 0, got %r" % config.learning_rate)
    return config._replace(epochs=int(config.epochs), batch_size=int(config.batch_size))


EpochStats = namedtuple("EpochStats", ["epoch", "mean_loss", "loss_pd", "loss_au", "pairs", "steps"])


class TrainLog(object):
    """Per-epoch mean loss and its components (S_PD term, one S_au term per trained appearance stream)."""

    def __init__(self, au_streams=()):
        self.au_streams = list(au_streams)
        self.epochs = []

    def __len__(self):
        return len(self.epochs)

    def append(self, stats):
        self.epochs.append(stats)

    @property
    def mean_losses(self):
        return [e.mean_loss for e in self.epochs]

    def header(self):
        return ["epoch", "mean_loss", "loss_pd"] + ["loss_au_" + s for s in self.au_streams] + ["pairs", "steps"]

    def rows(self):
        for e in self.epochs:
            yield [e.epoch, repr(e.mean_loss), repr(e.loss_pd)] + [repr(e.loss_au[s]) for s in self.au_streams] + \
                [e.pairs, e.steps]


def write_train_log(log, path):
    with io.open(path, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(log.header())
        for row in log.rows():
            writer.writerow(row)
    return len(log)


def plot_train_log(log, path):
    """Draws the loss curves to path. Returns False when matplotlib is not installed."""
    if plt is None:
        logger.info("matplotlib not found; skipping %s", path)
        return False
    epochs = [e.epoch for e in log.epochs]
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(epochs, log.mean_losses, marker="o", label="mean loss")
    ax.plot(epochs, [e.loss_pd for e in log.epochs], linestyle="--", label="S_PD term")
    for s in log.au_streams:
        ax.plot(epochs, [e.loss_au[s] for e in log.epochs], linestyle=":", label="S_au %s term" % s)
    ax.set_xlabel("epoch")
    ax.set_ylabel("loss per pair")
    ax.legend()
    fig.tight_layout()
    # fixed metadata keeps the file reproducible
    fig.savefig(path, metadata={"Software": None})
    plt.close(fig)
    return True


def prepare_model(dataset, config, embeddings, cluster_model=None, streams=None):
    """
    Builds the classifier index for the configured scheme over the dataset vocabulary (clustering the objects when
    CSP needs it and no cluster model is given) and initializes a model from the config seed.
    """
    if len(dataset) == 0:
        raise EmptyDatasetError("cannot train on an empty dataset")
    scheme = config.ablation.scheme
    if scheme == "CSP" and cluster_model is None:
        cluster_model = build_cluster_model(dataset.vocabulary, embeddings, derive_seed(config.seed, "clusters"))
    index = build_index(scheme, dataset.vocabulary, cluster_model)
    streams = streams or default_streams(dataset.k_a, dataset.has_union)
    return init_model(streams, dataset.k_a, index.num_slots, derive_seed(config.seed, "init"), config.ablation,
                      index=index, embeddings=embeddings, cluster_model=cluster_model)


def _rows_for(model, pairs, config):
    rows = make_rows(model, pairs)
    if not config.loss_average:
        rows.bindings["weights"] = np.ones_like(rows.bindings["weights"])
    return rows


def pair_loss(pair, model, ablation=None, loss_average=True):
    """The loss of one pair: per scored verb, BCE(S_PD) plus the trained S_au terms, averaged over verbs."""
    ablation = ablation or model.ablation
    graph = build_graph(model.streams, model.k_a, model.k_c, ablation, training=True)
    rows = _rows_for(model, [pair], TrainConfig(loss_average=loss_average, ablation=ablation))
    return float(graph.evaluate(bind(model, rows), outputs=["loss"])["loss"][0])


def select_pairs(dataset, negative_ratio, rng):
    """All positive pairs plus at most negative_ratio negatives per positive, shuffled."""
    positives = [i for i, p in enumerate(dataset.pairs) if p.positive_verbs]
    negatives = [i for i, p in enumerate(dataset.pairs) if not p.positive_verbs]
    if positives:
        keep = min(len(negatives), int(np.floor(negative_ratio * len(positives))))
        if keep < len(negatives):
            negatives = sorted(rng.choice(negatives, size=keep, replace=False).tolist())
    return [int(i) for i in rng.permutation(positives + negatives)]


def train(dataset, config, embeddings=None, cluster_model=None, model=None):
    """
        train(
                Dataset         dataset
                TrainConfig     config
                EmbeddingTable  embeddings      needed unless model is given
                ClusterModel    cluster_model   optional, built from the dataset for CSP otherwise
                PdNetModel      model           optional starting point
                )

        Returns (model, TrainLog). Each epoch reshuffles and resamples negatives from its own derived seed and
        applies one Adam step per batch, so equal inputs give bit-identical parameters.
    """
    if len(dataset) == 0:
        raise EmptyDatasetError("cannot train on an empty dataset")
    if model is None:
        model = prepare_model(dataset, config, embeddings, cluster_model)
    graph = build_graph(model.streams, model.k_a, model.k_c, model.ablation, training=True)
    au_streams = [name[len("loss.au."):] for name in graph.outputs if name.startswith("loss.au.")]
    component_names = ["loss.pd"] + ["loss.au." + s for s in au_streams]
    params = OrderedDict(model.params)
    state = init_adam(params, learning_rate=config.learning_rate)
    log = TrainLog(au_streams)
    for epoch in range(1, config.epochs + 1):
        rng = make_rng(config.seed, "epoch", epoch)
        order = select_pairs(dataset, config.negative_ratio, rng)
        totals = OrderedDict((name, 0.0) for name in ["loss"] + component_names)
        steps = 0
        for start in range(0, len(order), config.batch_size):
            batch = [dataset.pairs[i] for i in order[start:start + config.batch_size]]
            rows = _rows_for(model, batch, config)
            bindings = dict(params)
            bindings.update(rows.bindings)
            out = graph.evaluate(bindings, outputs=["loss"] + component_names)
            grads = graph.backward("loss")
            params, state = adam_step(params, grads, state)
            for name in totals:
                totals[name] += float(out[name][0])
            steps += 1
        count = max(1, len(order))
        stats = EpochStats(epoch, totals["loss"] / count, totals["loss.pd"] / count,
                           OrderedDict((s, totals["loss.au." + s] / count) for s in au_streams), len(order), steps)
        log.append(stats)
        logger.info("epoch %d/%d: mean loss %.6f over %d pairs (%d steps)", epoch, config.epochs, stats.mean_loss,
                    stats.pairs, steps)
    return model.with_params(params), log


# checkpoints

def model_header(model):
    return OrderedDict([
        ("kind", CHECKPOINT_KIND),
        ("k_a", model.k_a),
        ("k_c", model.k_c),
        ("streams", [[s.name, s.kind, s.dim] for s in model.streams]),
        ("ablation", OrderedDict(model.ablation._asdict())),
        ("index", model.index.to_dict() if model.index is not None else None),
        ("cluster_digest", model.cluster_model.digest() if model.cluster_model is not None else None),
    ])


def save_checkpoint(model, path):
    """Writes parameters and the model header; equal models give byte-identical files."""
    save_params(path, model.params, meta=model_header(model))


def load_checkpoint(path, embeddings=None, cluster_model=None, scheme=None):
    """
    Restores a model. A given cluster_model must match the digest stored at save time, and a given scheme must match
    the checkpoint's; either mismatch raises CheckpointMismatchError.
    """
    params, header = load_params(path)
    if header.get("kind") != CHECKPOINT_KIND:
        raise CheckpointFormatError("%s: not a model checkpoint" % path)
    try:
        ablation = ablation_from_mapping(header["ablation"])
        streams = [StreamSpec(name, kind, int(dim)) for name, kind, dim in header["streams"]]
        k_a, k_c = int(header["k_a"]), int(header["k_c"])
        index = ClassifierIndex.from_dict(header["index"]) if header.get("index") else None
    except (KeyError, TypeError, ValueError) as e:
        raise CheckpointFormatError("%s: malformed model header (%s)" % (path, e))
    if scheme is not None and scheme != ablation.scheme:
        raise CheckpointMismatchError("%s was trained with scheme %s, not %s" % (path, ablation.scheme, scheme))
    stored_digest = header.get("cluster_digest")
    if cluster_model is not None and stored_digest is not None and cluster_model.digest() != stored_digest:
        raise CheckpointMismatchError("%s was trained with a different cluster manifest" % path)
    expected = param_shapes(streams, k_a, k_c, ablation)
    if set(expected) != set(params):
        raise CheckpointFormatError("%s: parameter names do not match the header" % path)
    for name, shape in expected.items():
        if tuple(params[name].shape) != tuple(shape):
            raise CheckpointFormatError("%s: parameter '%s' has shape %s, expected %s"
                                        % (path, name, params[name].shape, shape))
    ordered = OrderedDict((name, params[name]) for name in expected)
    return PdNetModel(ordered, streams, k_a, k_c, ablation, index, embeddings, cluster_model)
