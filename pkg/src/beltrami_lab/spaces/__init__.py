"""Function-space machinery: dyadic partitions, quasi-norms, exponent arithmetic."""

from .differences import difference_norm, iterated_difference
from .exponents import (
    Criticality,
    QThreshold,
    SobolevIndex,
    Verdict,
    admissible_q_threshold,
    classify,
    corollary_exponents,
    embedding_holds,
    extremal_exponent,
)
from .norms import NormReport, besov_norm, tl_norm
from .partition import DyadicPartition, build_partition, default_band_count

__all__ = [
    "Criticality",
    "DyadicPartition",
    "NormReport",
    "QThreshold",
    "SobolevIndex",
    "Verdict",
    "admissible_q_threshold",
    "besov_norm",
    "build_partition",
    "classify",
    "corollary_exponents",
    "default_band_count",
    "difference_norm",
    "embedding_holds",
    "extremal_exponent",
    "iterated_difference",
    "tl_norm",
]
