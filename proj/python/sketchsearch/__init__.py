"""Python access to the sketch extractor, synthetic prover and search engines."""

import json

from ._core import (
    ProofLine,
    ProofScript,
    SearchSummary,
    Sketch,
    SketchSearchError,
    SketchSet,
    audit_trace,
    extract_sketches,
    flatten_proof,
    parse_script,
    reconstruct,
    render_prompt,
    render_training_example,
    search,
    serialize_script,
    synthetic_ground_truth,
)

__all__ = [
    "ProofLine",
    "ProofScript",
    "SearchSummary",
    "Sketch",
    "SketchSearchError",
    "SketchSet",
    "audit_trace",
    "extract_sketches",
    "flatten_proof",
    "parse_script",
    "reconstruct",
    "render_prompt",
    "render_training_example",
    "run_suite",
    "search",
    "serialize_script",
    "synthetic_ground_truth",
]


def run_suite(config):
    """Run a suite from `key=value` config text or a dict; returns the report as a dict."""
    if isinstance(config, dict):
        config = "\n".join(f"{k}={v}" for k, v in config.items())
    from ._core import run_suite_json

    return json.loads(run_suite_json(config))
