#
# Copyright (C) 2026 pdnet contributors. See LICENSE file for terms.
#
"""
Defines the fixed dimensions, names and enumerations shared across the pdnet modules.
Enumerations map member names to their position, in the order they are listed here.
"""
from pdnet.errors import ConfigError


def make_enum(members):
    """All enums with no specific values follow the pattern 0, 1, 2... in the order they are listed."""
    enum = {}
    for i, member in enumerate(members):
        keys = [member]
        if isinstance(member, tuple):
            # this member has multiple names!
            keys = member
        for key in keys:
            enum[key] = i
    return enum


def enum_member(enum, name, kind):
    """Validate that name is a member of enum, returning the canonical (first) name for its position."""
    try:
        position = enum[name]
    except (KeyError, TypeError):
        raise ConfigError("%r is not a known %s; expected one of %s" % (name, kind, ", ".join(sorted(enum))))
    for key, value in enum.items():
        if value == position:
            return key
    return name


# Dimensions of the pair-level inputs.
PRIOR_HALF_DIM = 300
PRIOR_DIM = 2 * PRIOR_HALF_DIM
SPATIAL_DIM = 42
POSE_KEYPOINTS = 17
POSE_PER_KEYPOINT = 16
POSE_DIM = POSE_KEYPOINTS * POSE_PER_KEYPOINT

# Stream names, in the order their logits are concatenated for fusion.
STREAMS = ("H", "O", "S", "P")

# Proposal filtering defaults.
DEFAULT_TOP_K = 10
DEFAULT_SCORE_THRESHOLD = 0.01
DEFAULT_IOU_THRESHOLD = 0.5
HUMAN_CATEGORY = "person"

# Numerical constants.
PROB_CLAMP = 1e-7
NORM_EPS = 1e-12
SIZE_FLOOR = 1.0

CLASSIFIER_SCHEMES = make_enum([
    "SH",
    "SP",
    "CSP",
])

LPCA_VARIANTS = make_enum([
    ("off", "none"),
    "full",
    "plain-CA",
    "no-S_au",
    "no-C_att",
    ("concat-DA", "concat"),
])

PRIOR_MODES = make_enum([
    "verb-object",
    "verb-only",
])

EVAL_MODES = make_enum([
    "DT",
    "KO",
])

REPORT_FORMATS = make_enum([
    ("csv", "CSV"),
    ("markdown", "md"),
])

# Human-body keypoints, in the order pose features are laid out.
KEYPOINT_NAMES = (
    "nose", "left_eye", "right_eye", "left_ear", "right_ear",
    "left_shoulder", "right_shoulder", "left_elbow", "right_elbow",
    "left_wrist", "right_wrist", "left_hip", "right_hip",
    "left_knee", "right_knee", "left_ankle", "right_ankle",
)
