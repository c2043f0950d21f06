"""Behavioral fingerprints and divergence between synthesizer families.

A fingerprint is the normalized (tribal, sycophantic, truthful) disposition
of one family in the synthesizer seat. Divergences are computed in bits
(base-2 logs); the square root of the symmetric divergence is the metric
used for pair classification.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .core import ArmStatistics, Fingerprint, ModelFamily

PAIR_KINSHIP = "kinship"
PAIR_STRANGER = "stranger"
DEFAULT_BOUNDARY = 0.1


def build_fingerprint(
    stats: Sequence[ArmStatistics],
    family: ModelFamily,
    configs: Sequence[str] | None = None,
) -> Fingerprint:
    """Aggregate a family's synthesizer-seat rows into a fingerprint.

    Components are unweighted means of (tribalism, sycophancy, 1 - mu) over
    the selected rows, normalized on construction. By default every row whose
    synthesizer letter matches the family is used; pass explicit configs to
    narrow the selection.
    """
    if configs is not None:
        wanted = set(configs)
        rows = [s for s in stats if s.config in wanted]
    else:
        rows = [s for s in stats if s.config[2] == family.id]
    for row in rows:
        if row.config[2] != family.id:
            raise ValueError(f"config {row.config!r} does not have {family.id!r} as synthesizer")
    if not rows:
        raise ValueError(f"no synthesizer rows for family {family.id!r}")
    k = len(rows)
    return Fingerprint(
        family=family,
        p_tribal=sum(r.tribalism for r in rows) / k,
        p_syco=sum(r.sycophancy for r in rows) / k,
        p_truth=sum(1.0 - r.mu for r in rows) / k,
    )


def _check_distribution(name: str, dist: Sequence[float]) -> tuple[float, ...]:
    values = tuple(float(x) for x in dist)
    if any(v < 0 or math.isnan(v) for v in values):
        raise ValueError(f"{name} has negative or NaN components: {values}")
    if abs(sum(values) - 1.0) > 1e-9:
        raise ValueError(f"{name} must sum to 1 within 1e-9, got {sum(values)!r}")
    return values


def kl_divergence(p: Sequence[float], q: Sequence[float]) -> float:
    """KL divergence in bits. Zero p-components contribute nothing; a zero
    q-component under positive p mass is a support mismatch and raises."""
    p = _check_distribution("p", p)
    q = _check_distribution("q", q)
    if len(p) != len(q):
        raise ValueError(f"length mismatch: {len(p)} vs {len(q)}")
    total = 0.0
    for pi, qi in zip(p, q):
        if pi == 0.0:
            continue
        if qi == 0.0:
            raise ValueError("support mismatch: p has mass where q is zero")
        total += pi * math.log2(pi / qi)
    return total


def jsd(p: Sequence[float], q: Sequence[float]) -> float:
    """Jensen-Shannon divergence in bits: always defined, symmetric, in [0, 1]."""
    p = _check_distribution("p", p)
    q = _check_distribution("q", q)
    if len(p) != len(q):
        raise ValueError(f"length mismatch: {len(p)} vs {len(q)}")
    mid = tuple((a + b) / 2.0 for a, b in zip(p, q))
    return 0.5 * kl_divergence(p, mid) + 0.5 * kl_divergence(q, mid)


def classify_pair(jsd_value: float, boundary: float = DEFAULT_BOUNDARY) -> str:
    """Label a family pair by divergence: above the boundary they are strangers."""
    if math.isnan(jsd_value) or jsd_value < 0:
        raise ValueError(f"jsd_value must be non-negative, got {jsd_value!r}")
    return PAIR_STRANGER if jsd_value > boundary else PAIR_KINSHIP


def binary_architectural_distance(jsd_value: float, boundary: float = DEFAULT_BOUNDARY) -> int:
    """Binarized distance: 1 for stranger pairs, 0 for kinship pairs."""
    return 1 if classify_pair(jsd_value, boundary) == PAIR_STRANGER else 0


@dataclass(frozen=True)
class DistanceMatrix:
    """Pairwise divergences between fingerprinted families."""

    families: tuple[str, ...]
    jsd_values: np.ndarray

    def __post_init__(self) -> None:
        n = len(self.families)
        if self.jsd_values.shape != (n, n):
            raise ValueError(f"matrix shape {self.jsd_values.shape} does not match {n} families")

    @property
    def js_distance(self) -> np.ndarray:
        return np.sqrt(self.jsd_values)

    def pair(self, a: str, b: str) -> float:
        i, j = self.families.index(a), self.families.index(b)
        return float(self.jsd_values[i, j])

    def to_csv(self, metric: str = "jsd") -> str:
        """Square CSV with family-letter headers. metric: 'jsd' or 'js_distance'."""
        if metric == "jsd":
            values = self.jsd_values
        elif metric == "js_distance":
            values = self.js_distance
        else:
            raise ValueError(f"unknown metric {metric!r}")
        out = io.StringIO()
        out.write("family," + ",".join(self.families) + "\n")
        for name, row in zip(self.families, values):
            out.write(name + "," + ",".join(f"{v:.6f}" for v in row) + "\n")
        return out.getvalue()


def distance_matrix(fingerprints: Sequence[Fingerprint]) -> DistanceMatrix:
    """All pairwise divergences, in fingerprint order."""
    if len(fingerprints) < 2:
        raise ValueError("need at least two fingerprints")
    letters = tuple(fp.family.id for fp in fingerprints)
    if len(set(letters)) != len(letters):
        raise ValueError(f"duplicate families in fingerprint list: {letters}")
    n = len(fingerprints)
    values = np.zeros((n, n))
    for i in range(n):
        for j in range(i + 1, n):
            d = jsd(fingerprints[i].as_tuple(), fingerprints[j].as_tuple())
            values[i, j] = values[j, i] = d
    return DistanceMatrix(families=letters, jsd_values=values)
