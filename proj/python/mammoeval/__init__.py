"""Evaluation harness primitives for breast-cancer screening classifiers."""

from mammoeval._core import (
    __version__,
    apply_horizontal_flip,
    auc_pr,
    auc_roc,
    bootstrap_ci,
    canonical_metadata_text,
    parse_metadata_text,
    pr_curve,
    rescale_to_16bit,
    roc_curve,
    score_breast_csv,
    score_image_csv,
)

__all__ = [
    "__version__",
    "apply_horizontal_flip",
    "auc_pr",
    "auc_roc",
    "bootstrap_ci",
    "canonical_metadata_text",
    "parse_metadata_text",
    "pr_curve",
    "rescale_to_16bit",
    "roc_curve",
    "score_breast_csv",
    "score_image_csv",
]
