"""Failure-driven rule induction: cluster failures, reflect, validate rules."""

from .clustering import FailureCluster, cluster_failures, dbscan_labels, select_reflection_examples
from .distance import (
    cluster_weights,
    edit_distance,
    mean_pairwise_edit_distance,
    normalized_distance,
    similarity,
)
from .induction import (
    InductionResult,
    ReflectionOutput,
    RuleValidation,
    induce_rule,
    parse_reflection,
    reflect,
    sample_cluster,
    transform_to_rules,
    validate_rules,
)

__all__ = [
    "FailureCluster",
    "InductionResult",
    "ReflectionOutput",
    "RuleValidation",
    "cluster_failures",
    "cluster_weights",
    "dbscan_labels",
    "edit_distance",
    "induce_rule",
    "mean_pairwise_edit_distance",
    "normalized_distance",
    "parse_reflection",
    "reflect",
    "sample_cluster",
    "select_reflection_examples",
    "similarity",
    "transform_to_rules",
    "validate_rules",
]
