#
# Copyright (C) 2026 pdnet contributors. See LICENSE file for terms.
#
from __future__ import division
import zlib

import numpy as np


def box_area(box):
    """
        box_area(
                sequence        box     (x1, y1, x2, y2)
                )

        Returns the area of a box; degenerate boxes have area 0.
    """
    x1, y1, x2, y2 = box[:4]
    return max(0.0, x2 - x1) * max(0.0, y2 - y1)


def box_size(box, floor=0.0):
    """Returns (width, height) of a box, each clamped from below at floor."""
    x1, y1, x2, y2 = box[:4]
    return max(floor, x2 - x1), max(floor, y2 - y1)


def box_center(box):
    x1, y1, x2, y2 = box[:4]
    return (x1 + x2) / 2.0, (y1 + y2) / 2.0


def union_box(a, b):
    """The smallest box enclosing both a and b."""
    return (min(a[0], b[0]), min(a[1], b[1]), max(a[2], b[2]), max(a[3], b[3]))


def intersection_area(a, b):
    w = min(a[2], b[2]) - max(a[0], b[0])
    h = min(a[3], b[3]) - max(a[1], b[1])
    if w <= 0 or h <= 0:
        return 0.0
    return w * h


def iou(a, b):
    """
        iou(
                sequence        a       (x1, y1, x2, y2)
                sequence        b       (x1, y1, x2, y2)
                )

        Intersection area over union area, in [0, 1].
    """
    inter = intersection_area(a, b)
    if inter <= 0:
        return 0.0
    union = box_area(a) + box_area(b) - inter
    if union <= 0:
        return 0.0
    return min(1.0, inter / union)


def edge_gap(a, b):
    """Euclidean length of the separation between two boxes; 0 when they touch or overlap."""
    gx = max(0.0, max(a[0], b[0]) - min(a[2], b[2]))
    gy = max(0.0, max(a[1], b[1]) - min(a[3], b[3]))
    return float(np.hypot(gx, gy))


def clamp_box(box, width, height):
    """Clips a box to the image [0, width] x [0, height]."""
    x1, y1, x2, y2 = box[:4]
    return (min(max(x1, 0.0), width), min(max(y1, 0.0), height),
            min(max(x2, 0.0), width), min(max(y2, 0.0), height))


def scale_box(box, factor):
    """Scales a box about its center."""
    cx, cy = box_center(box)
    w, h = box_size(box)
    return (cx - w * factor / 2.0, cy - h * factor / 2.0, cx + w * factor / 2.0, cy + h * factor / 2.0)


def derive_seed(seed, *names):
    """
    Fans one top-level seed out into a named sub-seed. The same (seed, names) always gives the same value, and
    distinct names give independent streams.
    """
    keys = [int(seed) & 0xFFFFFFFF]
    for name in names:
        keys.append(zlib.crc32(str(name).encode("utf-8")) & 0xFFFFFFFF)
    return int(np.random.SeedSequence(keys).generate_state(1)[0])


def make_rng(seed, *names):
    """A numpy Generator seeded from derive_seed(seed, *names)."""
    return np.random.default_rng(derive_seed(seed, *names))
