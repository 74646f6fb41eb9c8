"""Belief-tracking surprise scoring, surprise-weighted frame sampling and evaluation."""

import json
import os

from ._core import (
    CapabilityError,
    InvalidInput,
    InvalidParameter,
    ProtocolError,
    RewardParseError,
    RunError,
    ShapeError,
    SurpriseError,
    TransportError,
    accuracy_at_delta,
    belief_loss,
    budget_for_duration,
    distribution_from_nll,
    jsd,
    kl_divergence,
    normalize_advantages,
    parse_reward,
    segment_probabilities,
    spearman,
    surprise,
    temporal_iou,
)
from . import _core

__all__ = [
    "CapabilityError",
    "InvalidInput",
    "InvalidParameter",
    "ProtocolError",
    "RewardParseError",
    "RunError",
    "ShapeError",
    "SurpriseError",
    "TransportError",
    "accuracy_at_delta",
    "belief_loss",
    "budget_for_duration",
    "distribution_from_nll",
    "jsd",
    "kl_divergence",
    "normalize_advantages",
    "parse_reward",
    "run_cli",
    "sample",
    "score",
    "segment_probabilities",
    "spearman",
    "surprise",
    "temporal_iou",
]


def score(manifest, config_path):
    """Score a video. `manifest` is a dict or a path to a manifest file."""
    if isinstance(manifest, (str, os.PathLike)):
        with open(manifest, encoding="utf-8") as f:
            manifest = json.load(f)
    return json.loads(_core.score_json(json.dumps(manifest), os.fspath(config_path)))


def sample(timeline, frame_budget=64, tau_s=0.7, seed=42, normalize="auto", distinct=False):
    """Surprise-weighted frame plan for a timeline dict."""
    return json.loads(
        _core.sample_json(json.dumps(timeline), frame_budget, tau_s, seed, normalize, distinct)
    )


def run_cli(*args):
    """Run the command-line tool in-process; returns (exit_code, stdout, stderr)."""
    return _core.run_cli([os.fspath(a) for a in args])
