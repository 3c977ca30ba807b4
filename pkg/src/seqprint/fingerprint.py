"""Fixed-layout multi-scale fingerprint vectors.

Layout version 1 stores five features per pattern length, in ``m_set`` order::

    [H / H_max, max_prob, distinct_fraction, repeated_window_fraction,
     mean_recurrence / total_windows]
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Sequence

from .errors import IncompatibleFingerprintError, IncompatibleProfileError, InvalidArgumentError
from .extract import PatternProfile
from .metrics import StructuralMetrics, concentration_stats

LAYOUT_VERSION = 1
FEATURES_PER_SCALE = 5
FEATURE_NAMES = (
    "normalized_entropy",
    "max_prob",
    "distinct_fraction",
    "repeated_window_fraction",
    "normalized_mean_recurrence",
)
PROVENANCES = ("sequence", "corpus")


@dataclass(frozen=True)
class Fingerprint:
    m_set: tuple
    features: tuple
    provenance: str = "sequence"
    layout_version: int = LAYOUT_VERSION

    @property
    def d(self) -> int:
        return len(self.features)

    def feature_names(self) -> list:
        return [f"m{m}.{name}" for m in self.m_set for name in FEATURE_NAMES]

    def to_dict(self) -> dict:
        return {
            "layout_version": self.layout_version,
            "m_set": list(self.m_set),
            "provenance": self.provenance,
            "d": self.d,
            "features": list(self.features),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"

    @classmethod
    def from_dict(cls, d: dict) -> "Fingerprint":
        if d.get("layout_version") != LAYOUT_VERSION:
            raise IncompatibleFingerprintError(f"unsupported layout version {d.get('layout_version')!r}")
        fp = cls(
            m_set=tuple(int(m) for m in d["m_set"]),
            features=tuple(float(x) for x in d["features"]),
            provenance=d.get("provenance", "sequence"),
        )
        if fp.d != FEATURES_PER_SCALE * len(fp.m_set):
            raise IncompatibleFingerprintError("feature count does not match m_set")
        return fp

    @classmethod
    def from_json(cls, text: str) -> "Fingerprint":
        return cls.from_dict(json.loads(text))


def features_from_metrics(s: StructuralMetrics) -> list:
    norm_h = s.entropy_bits / s.entropy_max_bits if s.entropy_max_bits > 0 else 0.0
    return [
        norm_h,
        s.max_prob,
        s.distinct_fraction,
        s.repeated_window_fraction,
        s.mean_recurrence / s.total_windows,
    ]


def compute_fingerprint(
    profiles: Sequence[PatternProfile],
    m_set: Sequence[int] = None,
    provenance: str = "sequence",
) -> Fingerprint:
    """Map one profile per pattern length to the layout-1 feature vector.

    Without ``m_set`` the profiles' own order defines it.
    """
    if provenance not in PROVENANCES:
        raise InvalidArgumentError(f"provenance must be one of {PROVENANCES}")
    profiles = list(profiles)
    if not profiles:
        raise IncompatibleProfileError("no profiles given")
    by_m = {}
    for p in profiles:
        if p.m in by_m:
            raise IncompatibleProfileError(f"duplicate profile for m={p.m}")
        by_m[p.m] = p
    order = [p.m for p in profiles] if m_set is None else [int(m) for m in m_set]
    if len(set(order)) != len(order) or set(order) != set(by_m):
        raise IncompatibleProfileError(f"profiles cover m={sorted(by_m)}, expected {order}")
    features = []
    for m in order:
        features.extend(features_from_metrics(concentration_stats(by_m[m])))
    return Fingerprint(tuple(order), tuple(features), provenance)


def fingerprint_distance(a: Fingerprint, b: Fingerprint) -> float:
    if a.m_set != b.m_set or a.d != b.d or a.layout_version != b.layout_version:
        raise IncompatibleFingerprintError("fingerprints have different shapes")
    return math.dist(a.features, b.features)
