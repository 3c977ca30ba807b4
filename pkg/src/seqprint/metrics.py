"""Structural metrics over pattern profiles and distributions."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from .extract import Distribution, PatternProfile, normalize
from .errors import EmptyWindowError, IncompatibleProfileError

RECURRENCE_BINS = ("0", "1", "2", "3", "4+")


@dataclass(frozen=True)
class StructuralMetrics:
    m: int
    total_windows: int
    distinct_count: int
    entropy_bits: float
    entropy_max_bits: float
    max_prob: float
    distinct_fraction: float
    repeated_window_fraction: float
    mean_recurrence: float

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class RecurrenceHistogram:
    m: int
    bins: tuple  # frequencies for recurrence 0, 1, 2, 3, 4+

    def to_dict(self) -> dict:
        return {"m": self.m, "bins": dict(zip(RECURRENCE_BINS, self.bins))}


_MATCH_CHUNK = 1 << 22


def _sorted(d: Distribution):
    v = d.values
    if v.size < 2 or bool(np.all(v[1:] > v[:-1])):
        return v, d.probs, d.counts
    order = np.argsort(v, kind="stable")
    return v[order], d.probs[order], None if d.counts is None else d.counts[order]


def _shared(va: np.ndarray, vb: np.ndarray):
    """Index pairs (ia, ib) of values present in both sorted arrays.

    Works in chunks of ``va`` so no temporary is as large as the inputs; the
    full-size profiles at m = 32 hold tens of millions of entries.
    """
    ia, ib = [], []
    if vb.size == 0:
        return np.empty(0, np.int64), np.empty(0, np.int64)
    for lo in range(0, va.size, _MATCH_CHUNK):
        chunk = va[lo:lo + _MATCH_CHUNK]
        idx = np.searchsorted(vb, chunk)
        np.minimum(idx, vb.size - 1, out=idx)
        hit = np.flatnonzero(vb[idx] == chunk)
        ia.append(hit + lo)
        ib.append(idx[hit])
    if not ia:
        return np.empty(0, np.int64), np.empty(0, np.int64)
    return np.concatenate(ia), np.concatenate(ib)


def deviation_score(a: Distribution, b: Distribution) -> float:
    """L1 distance between two pattern distributions, in [0, 2].

    Patterns seen on only one side contribute that side's probability.
    With integer counts on both sides the sum is evaluated exactly as
    sum |ca*Wb - cb*Wa| / (Wa*Wb).
    """
    if a.m != b.m:
        raise IncompatibleProfileError(f"pattern lengths differ: {a.m} vs {b.m}")
    va, pa, ca = _sorted(a)
    vb, pb, cb = _sorted(b)
    ia, ib = _shared(va, vb)
    if ca is not None and cb is not None:
        wa, wb = int(a.total), int(b.total)
        if wa * wb < 1 << 62:
            ma, mb = ca[ia], cb[ib]
            only_a = int(ca.sum()) - int(ma.sum())
            only_b = int(cb.sum()) - int(mb.sum())
            num = only_a * wb + only_b * wa + int(np.abs(ma * wb - mb * wa).sum())
            return num / (wa * wb)
    ma, mb = pa[ia], pb[ib]
    only_a = float(pa.sum()) - float(ma.sum())
    only_b = float(pb.sum()) - float(mb.sum())
    return only_a + only_b + float(np.abs(ma - mb).sum())


def pattern_entropy(p: Distribution) -> float:
    """Plug-in entropy in bits; absent patterns contribute nothing."""
    if p.counts is not None:
        # log2(W) - sum(c log2 c) / W is exact when every count is 1
        c = p.counts.astype(np.float64)
        h = math.log2(p.total) - float(np.sum(c * np.log2(c))) / p.total
        return max(h, 0.0)
    probs = p.probs[p.probs > 0]
    return float(np.sum(-probs * np.log2(probs))) + 0.0


def entropy_upper_bound(m: int, total_windows: int) -> float:
    return min(float(m), math.log2(total_windows))


def recurrence_histogram(profile: PatternProfile) -> RecurrenceHistogram:
    """Share of distinct patterns recurring 0, 1, 2, 3 or 4+ times.

    A pattern that occurs ``c`` times has recurrence ``c - 1``.
    """
    if profile.total_windows < 1 or profile.distinct == 0:
        raise EmptyWindowError("recurrence histogram of an empty profile")
    rec = np.minimum(profile.counts - 1, 4)
    hist = np.bincount(rec, minlength=5) / float(profile.distinct)
    return RecurrenceHistogram(profile.m, tuple(hist.tolist()))


def concentration_stats(profile: PatternProfile) -> StructuralMetrics:
    if profile.total_windows < 1 or profile.distinct == 0:
        raise EmptyWindowError("concentration statistics of an empty profile")
    w = profile.total_windows
    k = profile.distinct
    h_max = entropy_upper_bound(profile.m, w)
    # rounding may push H a few ulps past its bound
    h = min(pattern_entropy(normalize(profile)), h_max)
    repeated = int(profile.counts[profile.counts >= 2].sum())
    return StructuralMetrics(
        m=profile.m,
        total_windows=w,
        distinct_count=k,
        entropy_bits=h,
        entropy_max_bits=h_max,
        max_prob=int(profile.counts.max()) / w,
        distinct_fraction=k / w,
        repeated_window_fraction=repeated / w,
        mean_recurrence=(w - k) / k,
    )
