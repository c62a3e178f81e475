#
# Copyright (C) 2026 pdnet contributors. See LICENSE file for terms.
#
"""
Word-embedding tables and the 600-valued (verb, object) language prior.

Tables are read from the plain text format: one line per token, `token v1 v2 ... vD`, space separated, UTF-8.
"""
from __future__ import division
from collections import namedtuple, OrderedDict
import io
import logging
import re

import numpy as np

from pdnet.constants import PRIOR_HALF_DIM
from pdnet.errors import EmbeddingFormatError, UnknownTokenError

logger = logging.getLogger(__name__)

LanguagePrior = namedtuple("LanguagePrior", ["vector", "verb", "object"])

_SPLIT = re.compile(r"[_\s]+")


class EmbeddingTable(object):
    """Immutable token -> vector mapping with one shared dimension."""

    def __init__(self, vectors, dimension=None):
        self._vectors = OrderedDict()
        for token, vector in vectors.items():
            array = np.array(vector, dtype=np.float64)
            array.setflags(write=False)
            if dimension is None:
                dimension = array.shape[0]
            if array.shape != (dimension,):
                raise EmbeddingFormatError("token '%s' has dimension %d, expected %d"
                                           % (token, array.size, dimension))
            self._vectors[token] = array
        self.dimension = dimension

    def __len__(self):
        return len(self._vectors)

    def __contains__(self, token):
        return token in self._vectors

    def __iter__(self):
        return iter(self._vectors)

    def tokens(self):
        return list(self._vectors)

    def vector(self, token):
        """Exact-token vector, no phrase handling."""
        return self._vectors[token]


def parse_table(lines, source="<embeddings>"):
    """Parses text-format lines into an EmbeddingTable. Errors name the source and 1-based line number."""
    vectors = OrderedDict()
    dimension = None
    for number, line in enumerate(lines, start=1):
        line = line.strip()
        if not line:
            continue
        fields = line.split(" ")
        token, values = fields[0], fields[1:]
        if not values:
            raise EmbeddingFormatError("%s line %d: token '%s' has no values" % (source, number, token))
        try:
            vector = np.array([float(v) for v in values], dtype=np.float64)
        except ValueError:
            raise EmbeddingFormatError("%s line %d: values for '%s' are not decimal floats" % (source, number, token))
        if not np.all(np.isfinite(vector)):
            raise EmbeddingFormatError("%s line %d: non-finite value for '%s'" % (source, number, token))
        if dimension is None:
            dimension = vector.size
        elif vector.size != dimension:
            raise EmbeddingFormatError("%s line %d: dimension mismatch, '%s' has %d values, expected %d"
                                       % (source, number, token, vector.size, dimension))
        if token in vectors:
            raise EmbeddingFormatError("%s line %d: duplicate token '%s'" % (source, number, token))
        vectors[token] = vector
    if not vectors:
        raise EmbeddingFormatError("%s: no embeddings" % source)
    return EmbeddingTable(vectors, dimension)


def load_table(path):
    """
        load_table(
                str         path    text-format embedding file
                )

        Returns an EmbeddingTable. The result does not depend on line order.
    """
    with io.open(path, "r", encoding="utf-8") as f:
        table = parse_table(f, source=str(path))
    logger.info("loaded %d embeddings of dimension %d from %s", len(table), table.dimension, path)
    return table


def save_table(table, path):
    """Writes a table in the text format, tokens sorted, floats in repr form so a reload is value-exact."""
    with io.open(path, "w", encoding="utf-8", newline="\n") as f:
        for token in sorted(table.tokens()):
            f.write(token + " " + " ".join(repr(float(v)) for v in table.vector(token)) + "\n")


def lookup(table, token):
    """
    Exact hit returns the stored vector. Otherwise the token is split on '_' and whitespace and the mean of the
    constituents present in the table is returned.
    """
    if token in table:
        return table.vector(token)
    found = [table.vector(part) for part in _SPLIT.split(token.strip()) if part and part in table]
    if not found:
        raise UnknownTokenError("unknown token '%s'" % token)
    return np.mean(np.stack(found), axis=0)


def make_prior(table, verb, obj):
    """LanguagePrior for (verb, obj): verb embedding in positions 0-299, object embedding in 300-599."""
    verb_vector = lookup(table, verb)
    object_vector = lookup(table, obj)
    if verb_vector.size != PRIOR_HALF_DIM:
        raise EmbeddingFormatError("language priors need %d-d embeddings, table has %d"
                                   % (PRIOR_HALF_DIM, verb_vector.size))
    vector = np.concatenate([verb_vector, object_vector])
    vector.setflags(write=False)
    return LanguagePrior(vector, verb, obj)
