"""Triebel-Lizorkin and Besov quasi-norms from a dyadic partition."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field

import numpy as np
from ..grid import GridField
from ..spectral import fft2, ifft2
from .exponents import SobolevIndex
from .partition import DyadicPartition, build_partition

__all__ = ["NormReport", "band_fields", "tl_norm", "besov_norm", "TRUNCATION_SHARE"]

TRUNCATION_SHARE = 0.05


@dataclass
class NormReport:
    index: SobolevIndex
    kind: str
    total: float
    band_contributions: list = field(default_factory=list)
    truncation_flag: bool = False

    @property
    def mass(self) -> float:
        """Sum of the band contributions (q-th power level)."""
        return float(sum(v for _, v in self.band_contributions))

    def as_dict(self) -> dict:
        q = self.index.q
        return {
            "kind": self.kind,
            "s": float(self.index.s),
            "p": float(self.index.p),
            "q": "inf" if math.isinf(float(q)) else float(q),
            "total": self.total,
            "bands": [[int(j), float(v)] for j, v in self.band_contributions],
            "truncation_flag": bool(self.truncation_flag),
        }

    def to_json(self) -> str:
        return json.dumps(self.as_dict(), sort_keys=True)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["kind", "s", "p", "q", "band", "contribution", "total", "truncation_flag"])
        d = self.as_dict()
        for j, v in d["bands"]:
            w.writerow([d["kind"], d["s"], d["p"], d["q"], j, repr(v), repr(d["total"]),
                        int(d["truncation_flag"])])
        return buf.getvalue()


def band_fields(field: GridField, partition: DyadicPartition) -> list[np.ndarray]:
    """``(psi_j f^)`` inverse-transformed, one array per band."""
    if partition.grid != field.grid:
        raise ValueError("partition and field live on different grids")
    spec = fft2(field.values)
    return [ifft2(spec * w) for w in partition.windows]


def _truncated(contribs: list[float]) -> bool:
    total = sum(contribs)
    if total <= 0:
        return False
    return sum(contribs[-2:]) > TRUNCATION_SHARE * total


def _resolve(field, partition):
    return build_partition(field.grid) if partition is None else partition


def tl_norm(field: GridField, index: SobolevIndex, partition: DyadicPartition | None = None) -> NormReport:
    """``|| ( sum_j |2^{sj} band_j|^q )^{1/q} ||_{L^p}``.

    Each band contribution is ``||2^{sj} band_j||_{L^p}^q``, the q-th power of
    the norm the band would have on its own.
    """
    p, q = float(index.p), float(index.q)
    if math.isinf(p):
        raise ValueError("Triebel-Lizorkin norm requires p < inf")
    if math.isinf(q):
        raise ValueError("Triebel-Lizorkin norm with q = inf is not supported")
    partition = _resolve(field, partition)
    s = float(index.s)
    w = field.grid.cell_area
    acc = np.zeros(field.values.shape)
    contribs = []
    for j, b in enumerate(band_fields(field, partition)):
        a = np.abs(b) * 2.0 ** (s * j)
        aq = a**q
        acc += aq
        contribs.append(float(np.sum(a**p) * w) ** (q / p))
    total = float(np.sum(acc ** (p / q)) * w) ** (1.0 / p)
    return NormReport(index, "triebel-lizorkin", total, list(enumerate(contribs)), _truncated(contribs))


def besov_norm(field: GridField, index: SobolevIndex, partition: DyadicPartition | None = None) -> NormReport:
    """``|| { 2^{sj} ||band_j||_{L^p} } ||_{l^q}``; ``q = inf`` takes the max over bands."""
    p, q = float(index.p), float(index.q)
    if math.isinf(p):
        raise ValueError("Besov norm requires p < inf")
    partition = _resolve(field, partition)
    s = float(index.s)
    w = field.grid.cell_area
    norms = []
    for j, b in enumerate(band_fields(field, partition)):
        norms.append(2.0 ** (s * j) * float(np.sum(np.abs(b) ** p) * w) ** (1.0 / p))
    if math.isinf(q):
        total = max(norms)
        contribs = norms
    else:
        contribs = [v**q for v in norms]
        total = float(sum(contribs)) ** (1.0 / q)
    return NormReport(index, "besov", total, list(enumerate(contribs)), _truncated(contribs))
