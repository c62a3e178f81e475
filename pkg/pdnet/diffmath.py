#
# Copyright (C) 2026 pdnet contributors. See LICENSE file for terms.
#
"""
Reverse-mode differentiation over dense float64 vectors and matrices.

A ComputationGraph is declared once (define-then-run) from leaves and eight primitives, then evaluated against named
bindings and differentiated from a scalar loss node. Rank-2 tensors carry one row per example; every primitive works
along the last axis, so a single graph scores a whole batch.
"""
from __future__ import division
from collections import namedtuple, OrderedDict
import io
import json
import logging
import zipfile

import numpy as np

from pdnet.constants import NORM_EPS, PROB_CLAMP
from pdnet.errors import (ShapeMismatchError, NonFiniteError, NotScalarError, UnboundInputError, GraphStateError,
                          CheckpointFormatError, ConfigError)

logger = logging.getLogger(__name__)

LEAF_KINDS = ("input", "param", "constant")
PRIMITIVE_KINDS = ("affine", "sigmoid", "relu", "hadamard", "concat", "sum-elements", "l2-normalize",
                   "binary-cross-entropy")

PARAMS_FORMAT = "pdnet-params"
PARAMS_VERSION = 1
_ZIP_DATE = (1980, 1, 1, 0, 0, 0)


def as_tensor(value, what="tensor"):
    """Converts value to a rank 1 or rank 2 float64 array."""
    array = np.asarray(value, dtype=np.float64)
    if array.ndim == 0:
        array = array.reshape(1)
    if array.ndim not in (1, 2):
        raise ShapeMismatchError("%s must have rank 1 or 2, got shape %s" % (what, array.shape))
    return array


class Node(object):
    __slots__ = ("id", "kind", "parents", "name", "value", "shape")

    def __init__(self, node_id, kind, parents=(), name=None, value=None, shape=None):
        self.id = node_id
        self.kind = kind
        self.parents = tuple(parents)
        self.name = name
        self.value = value
        self.shape = shape

    def describe(self):
        if self.name:
            return "node %d (%s '%s')" % (self.id, self.kind, self.name)
        return "node %d (%s)" % (self.id, self.kind)


class ComputationGraph(object):
    """
    An acyclic graph of leaves (inputs, params, constants) and primitives. Nodes are appended in evaluation order, so
    parents always precede children. Each parameter name maps to exactly one node.
    """

    def __init__(self):
        self.nodes = []
        self._params = OrderedDict()
        self._inputs = OrderedDict()
        self._outputs = OrderedDict()
        self._cache = None
        self._bound = {}
        self._grads = None
        self._dependents_memo = {}

    # leaves

    def input(self, name, shape=None):
        """A named value bound at evaluate time. shape, if given, is the required trailing width."""
        if name in self._inputs:
            return self._inputs[name]
        node_id = self._append("input", (), name=name, shape=shape)
        self._inputs[name] = node_id
        return node_id

    def param(self, name, shape=None):
        """A named learnable value bound at evaluate time. Declaring the same name twice returns the same node."""
        if name in self._params:
            return self._params[name]
        if name in self._inputs:
            raise ConfigError("'%s' is already declared as an input" % name)
        node_id = self._append("param", (), name=name, shape=tuple(shape) if shape is not None else None)
        self._params[name] = node_id
        return node_id

    def constant(self, value, name=None):
        """A fixed tensor detached from differentiation; its gradient is reported as zero."""
        return self._append("constant", (), name=name, value=as_tensor(value, "constant"))

    # primitives

    def affine(self, x, weight, bias, name=None):
        """x @ weight + bias, applied row-wise."""
        return self._append("affine", (x, weight, bias), name=name)

    def sigmoid(self, x, name=None):
        return self._append("sigmoid", (x,), name=name)

    def relu(self, x, name=None):
        return self._append("relu", (x,), name=name)

    def hadamard(self, a, b, name=None):
        return self._append("hadamard", (a, b), name=name)

    def concat(self, parts, name=None):
        """Concatenates along the last axis."""
        if not parts:
            raise ShapeMismatchError("concat needs at least one part")
        return self._append("concat", tuple(parts), name=name)

    def sum_elements(self, x, name=None):
        """Sums the last axis, keeping it as width 1."""
        return self._append("sum-elements", (x,), name=name)

    def l2_normalize(self, x, name=None):
        """Divides each row by max(norm, 1e-12)."""
        return self._append("l2-normalize", (x,), name=name)

    def bce(self, probabilities, labels, weights=None, name=None):
        """
        Weighted binary cross-entropy summed into a width-1 scalar. Probabilities are clamped to [1e-7, 1 - 1e-7]
        before the logarithms. Omitted weights count every entry once.
        """
        if weights is None:
            weights = self.constant(1.0)
        return self._append("binary-cross-entropy", (probabilities, labels, weights), name=name)

    # bookkeeping

    def output(self, name, node_id):
        self._check_id(node_id)
        self._outputs[name] = node_id
        return node_id

    @property
    def outputs(self):
        return OrderedDict(self._outputs)

    @property
    def param_names(self):
        return list(self._params)

    @property
    def input_names(self):
        return list(self._inputs)

    def node(self, node_id):
        self._check_id(node_id)
        return self.nodes[node_id]

    def node_by_name(self, name):
        for node in self.nodes:
            if node.name == name:
                return node.id
        raise KeyError(name)

    def _append(self, kind, parents, name=None, value=None, shape=None):
        for parent in parents:
            self._check_id(parent)
        node_id = len(self.nodes)
        self.nodes.append(Node(node_id, kind, parents, name=name, value=value, shape=shape))
        return node_id

    def _check_id(self, node_id):
        if not isinstance(node_id, (int, np.integer)) or not 0 <= node_id < len(self.nodes):
            raise ConfigError("%r is not a node of this graph" % (node_id,))

    def _ancestors(self, roots):
        needed = set()
        stack = list(roots)
        while stack:
            node_id = stack.pop()
            if node_id in needed:
                continue
            needed.add(node_id)
            stack.extend(self.nodes[node_id].parents)
        return needed

    # forward

    def evaluate(self, bindings, outputs=None):
        """
        Computes every node needed by the requested outputs (default: all declared outputs, or every node when none
        are declared) and returns the named outputs as a dict. Recomputes from scratch on every call.
        """
        if outputs is None:
            targets = list(self._outputs.values()) or list(range(len(self.nodes)))
        else:
            targets = [self._outputs[key] if not isinstance(key, (int, np.integer)) else key for key in outputs]
        needed = self._ancestors(targets)
        cache = {}
        for node in self.nodes:
            if node.id not in needed:
                continue
            if node.kind in ("input", "param"):
                if node.name not in bindings:
                    raise UnboundInputError("%s is not bound" % node.describe())
                value = as_tensor(bindings[node.name], node.describe())
                if node.kind == "param" and node.shape is not None and value.shape != node.shape:
                    raise ShapeMismatchError("%s expects shape %s, got %s" % (node.describe(), node.shape, value.shape))
                if node.kind == "input" and node.shape is not None and value.shape[-1] != node.shape:
                    raise ShapeMismatchError("%s expects width %d, got shape %s"
                                             % (node.describe(), node.shape, value.shape))
            elif node.kind == "constant":
                value = node.value
            else:
                value = _forward(node, [cache[p] for p in node.parents])
            if not np.all(np.isfinite(value)):
                raise NonFiniteError("%s produced a non-finite value" % node.describe())
            cache[node.id] = value
        self._cache = cache
        self._bound = dict((name, as_tensor(bindings[name]).shape) for name in self._params if name in bindings)
        self._grads = None
        result = OrderedDict()
        for name, node_id in self._outputs.items():
            if node_id in cache:
                result[name] = cache[node_id]
        if outputs is not None:
            for key in outputs:
                if isinstance(key, (int, np.integer)):
                    result[key] = cache[key]
        return result

    def value(self, node_id):
        """The cached forward value of a node from the last evaluate."""
        if self._cache is None or node_id not in self._cache:
            raise GraphStateError("%s has not been evaluated" % self.nodes[node_id].describe())
        return self._cache[node_id]

    def _dependents(self, names):
        """Ids of the named inputs or params and of every node downstream of them, in graph order."""
        key = (frozenset(names), len(self.nodes))
        if key in self._dependents_memo:
            return self._dependents_memo[key]
        dirty = set(n.id for n in self.nodes if n.kind in ("input", "param") and n.name in names)
        for node in self.nodes:
            if node.id not in dirty and any(p in dirty for p in node.parents):
                dirty.add(node.id)
        self._dependents_memo[key] = sorted(dirty)
        return self._dependents_memo[key]

    def reevaluate(self, cache, overrides, target):
        """
        Value of node target with the named inputs or params replaced by overrides, recomputing only the nodes that
        depend on them on top of cache (a snapshot of a previous evaluate, left unmodified). Returns (value, changed)
        where changed maps every recomputed node id to its new value. The graph state is not touched.
        """
        changed = {}
        for node_id in self._dependents(set(overrides)):
            if node_id not in cache:
                continue
            node = self.nodes[node_id]
            if node.kind in ("input", "param"):
                value = as_tensor(overrides[node.name], node.describe())
                if value.shape != cache[node_id].shape:
                    raise ShapeMismatchError("%s expects shape %s, got %s"
                                             % (node.describe(), cache[node_id].shape, value.shape))
            else:
                value = _forward(node, [changed[p] if p in changed else cache[p] for p in node.parents])
                if not np.all(np.isfinite(value)):
                    raise NonFiniteError("%s produced a non-finite value" % node.describe())
            changed[node_id] = value
        return changed.get(target, cache[target]), changed

    # reverse

    def backward(self, loss):
        """
        Returns d(loss)/d(param) for every parameter (zeros for parameters the loss does not reach) and a zero
        gradient for every named constant. evaluate must have run with the loss among the computed nodes.
        """
        if isinstance(loss, str):
            loss = self._outputs[loss]
        if self._cache is None or loss not in self._cache:
            raise GraphStateError("evaluate must run before backward")
        loss_value = self._cache[loss]
        if loss_value.size != 1:
            raise NotScalarError("%s has shape %s; backward needs a scalar loss"
                                 % (self.nodes[loss].describe(), loss_value.shape))
        needed = self._ancestors([loss])
        grads = {loss: np.ones_like(loss_value)}
        for node_id in range(loss, -1, -1):
            if node_id not in needed or node_id not in grads:
                continue
            node = self.nodes[node_id]
            if node.kind in LEAF_KINDS:
                continue
            upstream = grads[node_id]
            parent_values = [self._cache[p] for p in node.parents]
            for parent, grad in zip(node.parents, _backward(node, parent_values, self._cache[node_id], upstream)):
                if self.nodes[parent].kind == "constant":
                    continue
                if parent in grads:
                    grads[parent] = grads[parent] + grad
                else:
                    grads[parent] = grad
        result = OrderedDict()
        for name, node_id in self._params.items():
            if node_id in grads:
                grad = grads[node_id]
                if not np.all(np.isfinite(grad)):
                    raise NonFiniteError("gradient of %s is non-finite" % self.nodes[node_id].describe())
                result[name] = grad
            elif name in self._bound:
                result[name] = np.zeros(self._bound[name])
        for node in self.nodes:
            if node.kind == "constant" and node.name:
                result[node.name] = np.zeros_like(node.value)
        self._grads = result
        return result


def evaluate(graph, inputs, outputs=None):
    return graph.evaluate(inputs, outputs=outputs)


def backward(graph, loss):
    return graph.backward(loss)


def _stable_sigmoid(x):
    out = np.empty_like(x)
    positive = x >= 0
    out[positive] = 1.0 / (1.0 + np.exp(-x[positive]))
    e = np.exp(x[~positive])
    out[~positive] = e / (1.0 + e)
    return out


def _mismatch(node, message):
    return ShapeMismatchError("%s: %s" % (node.describe(), message))


def _forward(node, values):
    kind = node.kind
    if kind == "affine":
        x, w, b = values
        if w.ndim != 2:
            raise _mismatch(node, "weight must be rank 2, got shape %s" % (w.shape,))
        if x.shape[-1] != w.shape[0]:
            raise _mismatch(node, "input width %d does not match weight rows %d" % (x.shape[-1], w.shape[0]))
        if b.shape != (w.shape[1],):
            raise _mismatch(node, "bias shape %s does not match weight columns %d" % (b.shape, w.shape[1]))
        return np.dot(x, w) + b
    if kind == "sigmoid":
        return _stable_sigmoid(values[0])
    if kind == "relu":
        return np.maximum(values[0], 0.0)
    if kind == "hadamard":
        a, b = values
        if a.shape != b.shape:
            raise _mismatch(node, "operand shapes %s and %s differ" % (a.shape, b.shape))
        return a * b
    if kind == "concat":
        ranks = set(v.ndim for v in values)
        if len(ranks) != 1 or (values[0].ndim == 2 and len(set(v.shape[0] for v in values)) != 1):
            raise _mismatch(node, "parts have incompatible shapes %s" % ([v.shape for v in values],))
        return np.concatenate(values, axis=-1)
    if kind == "sum-elements":
        return np.sum(values[0], axis=-1, keepdims=True)
    if kind == "l2-normalize":
        x = values[0]
        norm = np.sqrt(np.sum(x * x, axis=-1, keepdims=True))
        return x / np.maximum(norm, NORM_EPS)
    if kind == "binary-cross-entropy":
        p, labels, weights = values
        if labels.shape != p.shape:
            raise _mismatch(node, "labels shape %s does not match probabilities %s" % (labels.shape, p.shape))
        if weights.shape != p.shape and weights.size != 1:
            raise _mismatch(node, "weights shape %s does not match probabilities %s" % (weights.shape, p.shape))
        pc = np.clip(p, PROB_CLAMP, 1.0 - PROB_CLAMP)
        terms = -(labels * np.log(pc) + (1.0 - labels) * np.log(1.0 - pc))
        return np.array([np.sum(weights * terms)])
    raise _mismatch(node, "unknown primitive")


def _backward(node, values, out, upstream):
    kind = node.kind
    if kind == "affine":
        x, w, _ = values
        gx = np.dot(upstream, w.T)
        if x.ndim == 1:
            gw = np.outer(x, upstream)
            gb = upstream
        else:
            gw = np.dot(x.T, upstream)
            gb = np.sum(upstream, axis=0)
        return gx, gw, gb
    if kind == "sigmoid":
        return (upstream * out * (1.0 - out),)
    if kind == "relu":
        return (upstream * (values[0] > 0),)
    if kind == "hadamard":
        a, b = values
        return upstream * b, upstream * a
    if kind == "concat":
        grads = []
        start = 0
        for v in values:
            width = v.shape[-1]
            grads.append(upstream[..., start:start + width])
            start += width
        return tuple(grads)
    if kind == "sum-elements":
        return (np.broadcast_to(upstream, values[0].shape).copy(),)
    if kind == "l2-normalize":
        x = values[0]
        norm = np.sqrt(np.sum(x * x, axis=-1, keepdims=True))
        safe = np.maximum(norm, NORM_EPS)
        projected = upstream - out * np.sum(upstream * out, axis=-1, keepdims=True)
        # below the floor the op is a plain scaling
        return (np.where(norm > NORM_EPS, projected, upstream) / safe,)
    if kind == "binary-cross-entropy":
        p, labels, weights = values
        g = upstream.reshape(()) if upstream.size == 1 else upstream
        pc = np.clip(p, PROB_CLAMP, 1.0 - PROB_CLAMP)
        inside = (p >= PROB_CLAMP) & (p <= 1.0 - PROB_CLAMP)
        gp = g * weights * (-labels / pc + (1.0 - labels) / (1.0 - pc)) * inside
        gl = g * weights * -(np.log(pc) - np.log(1.0 - pc))
        terms = -(labels * np.log(pc) + (1.0 - labels) * np.log(1.0 - pc))
        gw = g * terms
        if weights.size == 1 and weights.shape != p.shape:
            gw = np.sum(gw).reshape(weights.shape)
        return gp, np.broadcast_to(gl, labels.shape).copy(), gw
    raise _mismatch(node, "unknown primitive")


# Adam

AdamState = namedtuple("AdamState", ["first_moment", "second_moment", "step", "learning_rate", "beta1", "beta2",
                                     "epsilon"])
AdamState.__new__.__defaults__ = (0, 1e-3, 0.9, 0.999, 1e-8)


def init_adam(params, learning_rate=1e-3, beta1=0.9, beta2=0.999, epsilon=1e-8):
    """Fresh Adam accumulators (zeros, step 0) shaped like params."""
    if learning_rate < 0:
        raise ConfigError("learning rate must be >= 0, got %r" % learning_rate)
    zeros = OrderedDict((name, np.zeros_like(np.asarray(value, dtype=np.float64))) for name, value in params.items())
    return AdamState(first_moment=zeros, second_moment=OrderedDict((k, v.copy()) for k, v in zeros.items()),
                     step=0, learning_rate=learning_rate, beta1=beta1, beta2=beta2, epsilon=epsilon)


def adam_step(params, grads, state):
    """
        adam_step(
                dict            params      name -> array
                dict            grads       name -> array, missing names count as zero gradient
                AdamState       state
                )

        One bias-corrected Adam update. Returns (new_params, new_state); the inputs are not modified.
    """
    step = state.step + 1
    b1, b2 = state.beta1, state.beta2
    correction1 = 1.0 - b1 ** step
    correction2 = 1.0 - b2 ** step
    new_params = OrderedDict()
    new_m = OrderedDict()
    new_v = OrderedDict()
    for name in sorted(params):
        value = np.asarray(params[name], dtype=np.float64)
        if name not in state.first_moment:
            raise ShapeMismatchError("no Adam accumulator for parameter '%s'" % name)
        m = state.first_moment[name]
        v = state.second_moment[name]
        grad = grads.get(name)
        if grad is None:
            grad = np.zeros_like(value)
        grad = np.asarray(grad, dtype=np.float64)
        if grad.shape != value.shape or m.shape != value.shape:
            raise ShapeMismatchError("parameter '%s' has shape %s but gradient %s / accumulator %s"
                                     % (name, value.shape, grad.shape, m.shape))
        m = b1 * m + (1.0 - b1) * grad
        v = b2 * v + (1.0 - b2) * grad * grad
        update = state.learning_rate * (m / correction1) / (np.sqrt(v / correction2) + state.epsilon)
        new_params[name] = value - update
        new_m[name] = m
        new_v[name] = v
    return new_params, state._replace(first_moment=new_m, second_moment=new_v, step=step)


# gradient checking

GradCheckEntry = namedtuple("GradCheckEntry", ["name", "max_rel_error", "checked", "skipped", "detached", "passed"])
GradCheckReport = namedtuple("GradCheckReport", ["entries", "max_rel_error", "tolerance", "passed"])


def relative_error(analytic, numeric, floor=1e-5):
    return abs(analytic - numeric) / max(abs(analytic), abs(numeric), floor)


def grad_check(graph, bindings, loss, wrt=None, h=1e-5, tolerance=1e-4, max_entries=None, seed=0):
    """
    Compares backward() against central finite differences for each parameter in wrt (default: all). Entries whose
    perturbation flips a relu input across zero are skipped. max_entries caps the number of checked entries per
    parameter, chosen with a seeded generator. Named constants are listed as detached with zero gradient.

    Each perturbed loss recomputes only the dependents of the perturbed parameter.
    """
    if isinstance(loss, str):
        loss = graph.outputs[loss]
    base = {k: as_tensor(v) for k, v in bindings.items()}
    graph.evaluate(base, outputs=[loss])
    analytic = graph.backward(loss)
    base_cache = dict(graph._cache)
    relu_inputs = [n.parents[0] for n in graph.nodes if n.kind == "relu" and n.parents[0] in base_cache]
    names = list(wrt) if wrt is not None else graph.param_names
    rng = np.random.default_rng(seed)

    def loss_at(name, value):
        out, changed = graph.reevaluate(base_cache, {name: value}, loss)
        flipped = any(not np.array_equal(changed[r] > 0, base_cache[r] > 0) for r in relu_inputs if r in changed)
        return float(out.reshape(-1)[0]), flipped

    entries = []
    for name in names:
        value = base[name]
        flat_count = value.size
        indices = np.arange(flat_count)
        if max_entries is not None and flat_count > max_entries:
            indices = np.sort(rng.choice(flat_count, size=max_entries, replace=False))
        work = value.copy()
        flat = work.reshape(-1)
        worst = 0.0
        checked = 0
        skipped = 0
        for index in indices:
            original = flat[index]
            flat[index] = original + h
            f_plus, flipped_plus = loss_at(name, work)
            flat[index] = original - h
            f_minus, flipped_minus = loss_at(name, work)
            flat[index] = original
            if flipped_plus or flipped_minus:
                skipped += 1
                continue
            numeric = (f_plus - f_minus) / (2.0 * h)
            worst = max(worst, relative_error(float(analytic[name].reshape(-1)[index]), numeric))
            checked += 1
        entries.append(GradCheckEntry(name, worst, checked, skipped, False, worst <= tolerance))
    for node in graph.nodes:
        if node.kind == "constant" and node.name:
            entries.append(GradCheckEntry(node.name, 0.0, 0, 0, True, bool(np.all(analytic[node.name] == 0))))
    overall = max([e.max_rel_error for e in entries] or [0.0])
    passed = all(e.passed for e in entries)
    logger.debug("grad_check: %d entries, max relative error %.3g", len(entries), overall)
    return GradCheckReport(entries, overall, tolerance, passed)


def _primitive_graph(kind, rng):
    """A small rank-1 graph exercising one primitive, reduced to a scalar through a random projection."""
    g = ComputationGraph()
    bindings = {}

    def p(name, value):
        bindings[name] = np.asarray(value, dtype=np.float64)
        return g.param(name, bindings[name].shape)

    width = 4
    if kind == "binary-cross-entropy":
        loss = g.bce(p("p", rng.uniform(0.05, 0.95, size=width)), p("labels", rng.uniform(size=width)),
                     p("weights", rng.uniform(0.5, 1.5, size=width)))
        return g, bindings, g.output("loss", loss)
    if kind == "affine":
        out = g.affine(p("x", rng.normal(size=width)), p("W", rng.normal(size=(width, 3))), p("b", rng.normal(size=3)))
    elif kind == "sigmoid":
        out = g.sigmoid(p("x", rng.normal(scale=2.0, size=width)))
    elif kind == "relu":
        out = g.relu(p("x", rng.normal(size=width)))
    elif kind == "hadamard":
        out = g.hadamard(p("a", rng.normal(size=width)), p("b", rng.normal(size=width)))
    elif kind == "concat":
        out = g.concat([p("a", rng.normal(size=2)), p("b", rng.normal(size=3))])
    elif kind == "sum-elements":
        out = g.sum_elements(p("x", rng.normal(size=width)))
    elif kind == "l2-normalize":
        out = g.l2_normalize(p("x", rng.normal(size=width)))
    else:
        raise ConfigError("unknown primitive %r" % kind)
    projection = g.constant(rng.normal(size={"affine": 3, "concat": 5, "sum-elements": 1}.get(kind, width)))
    return g, bindings, g.output("loss", g.sum_elements(g.hadamard(out, projection)))


def primitive_checks(seed=0, points=100, h=1e-5, tolerance=1e-4):
    """
    Checks each primitive's analytic Jacobian-vector product against central finite differences at `points` seeded
    random points. Returns an OrderedDict primitive -> GradCheckReport of the worst point.
    """
    results = OrderedDict()
    for kind in PRIMITIVE_KINDS:
        rng = np.random.default_rng([seed, PRIMITIVE_KINDS.index(kind)])
        worst = None
        for _ in range(points):
            graph, bindings, loss = _primitive_graph(kind, rng)
            report = grad_check(graph, bindings, loss, h=h, tolerance=tolerance)
            if worst is None or report.max_rel_error > worst.max_rel_error or not report.passed:
                worst = report
        results[kind] = worst
    return results


# parameter files

def save_params(path, params, meta=None):
    """
    Writes named tensors to a zip container: header.json (format, version, shapes, meta) plus one .npy member per
    tensor. Member order and timestamps are fixed, so equal inputs give byte-identical files.
    """
    names = sorted(params)
    header = OrderedDict([
        ("format", PARAMS_FORMAT),
        ("version", PARAMS_VERSION),
        ("tensors", OrderedDict((name, list(np.shape(params[name]))) for name in names)),
        ("meta", meta if meta is not None else {}),
    ])
    with zipfile.ZipFile(path, "w", compression=zipfile.ZIP_STORED) as archive:
        _write_member(archive, "header.json", json.dumps(header, indent=2, sort_keys=False).encode("utf-8"))
        for name in names:
            buffer = io.BytesIO()
            np.lib.format.write_array(buffer, np.ascontiguousarray(params[name], dtype=np.float64),
                                      allow_pickle=False)
            _write_member(archive, "tensors/%s.npy" % name, buffer.getvalue())


def _write_member(archive, member, payload):
    info = zipfile.ZipInfo(member, date_time=_ZIP_DATE)
    info.external_attr = 0o644 << 16
    archive.writestr(info, payload)


def load_params(path):
    """Reads a file written by save_params. Returns (params, meta)."""
    try:
        with zipfile.ZipFile(path, "r") as archive:
            header = json.loads(archive.read("header.json").decode("utf-8"))
            if header.get("format") != PARAMS_FORMAT:
                raise CheckpointFormatError("%s: not a %s file" % (path, PARAMS_FORMAT))
            if header.get("version") != PARAMS_VERSION:
                raise CheckpointFormatError("%s: unsupported version %r" % (path, header.get("version")))
            params = OrderedDict()
            for name, shape in header["tensors"].items():
                array = np.lib.format.read_array(io.BytesIO(archive.read("tensors/%s.npy" % name)),
                                                 allow_pickle=False)
                if list(array.shape) != list(shape):
                    raise CheckpointFormatError("%s: tensor '%s' has shape %s, header says %s"
                                                % (path, name, array.shape, shape))
                params[name] = array
    except (zipfile.BadZipFile, KeyError, ValueError, EOFError) as e:
        if isinstance(e, CheckpointFormatError):
            raise
        raise CheckpointFormatError("%s: unreadable parameter file (%s)" % (path, e))
    return params, header.get("meta", {})
