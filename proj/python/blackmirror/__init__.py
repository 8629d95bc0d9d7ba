# Copyright (C) 2026 The BlackMirror Authors
# SPDX-License-Identifier: Apache-2.0
"""Black-box backdoor detection for text-to-image services."""

import json

from . import _core
from ._core import (
    SCHEMA_VERSION,
    TAU_GRID,
    InvalidArgument,
    build_dataset,
    majority_vote,
    presence_probability,
    run_cli,
    stability_lost,
    stability_new,
)

__all__ = [
    "SCHEMA_VERSION",
    "TAU_GRID",
    "InvalidArgument",
    "build_dataset",
    "compute_metrics",
    "detect_sim",
    "majority_vote",
    "presence_probability",
    "run_cli",
    "stability_lost",
    "stability_new",
]


def detect_sim(prompt, attack="objrep", k=5, n=5, tau=0.999, seed=0, noiseless=False):
    """Runs the detector against the in-process simulator and returns the verdict as a dict."""
    return json.loads(_core.detect_sim_json(prompt, attack, k, n, tau, seed, noiseless))


def compute_metrics(verdicts, labels):
    """Confusion counts plus precision, recall, F1 and false-positive rate."""
    return json.loads(_core.compute_metrics_json(list(verdicts), list(labels)))
