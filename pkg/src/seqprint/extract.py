"""Sliding-window substring counting over packed bit sequences.

A pattern of length ``m`` is encoded as the unsigned integer whose binary
expansion (MSB first) is the pattern, so ``"0110"`` is ``6``. Windows advance
one bit at a time and may overlap.

Profiles keep their counts as two parallel arrays sorted by pattern value.
For ``m <= 16`` counting goes through a dense ``2**m`` table, above that
through a sort-based sparse reduction; both yield identical profiles.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping, Union

import numpy as np

from .errors import EmptyWindowError, IncompatibleProfileError, InvalidArgumentError
from .seqgen import BitSequence

MAX_PATTERN_LENGTH = 64
DENSE_MAX_M = 16


def check_pattern_length(m) -> int:
    if isinstance(m, bool) or not isinstance(m, (int, np.integer)) or not 1 <= m <= MAX_PATTERN_LENGTH:
        raise InvalidArgumentError(f"pattern length must be an integer in [1, 64], got {m!r}")
    return int(m)


def _readonly(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class PatternProfile:
    """Occurrence counts of every observed ``m``-bit pattern.

    ``values`` is sorted ascending and holds only patterns with a nonzero
    count; ``counts[i]`` is the number of windows equal to ``values[i]``.
    """

    m: int
    total_windows: int
    values: np.ndarray
    counts: np.ndarray

    @classmethod
    def from_arrays(cls, m: int, values, counts) -> "PatternProfile":
        m = check_pattern_length(m)
        values = np.asarray(values, dtype=np.uint64)
        counts = np.asarray(counts, dtype=np.int64)
        if values.shape != counts.shape or values.ndim != 1:
            raise InvalidArgumentError("values and counts must be parallel 1-d arrays")
        order = np.argsort(values, kind="stable")
        values, counts = values[order], counts[order]
        if values.size and (np.any(values[1:] == values[:-1])):
            raise InvalidArgumentError("duplicate pattern values")
        if np.any(counts <= 0):
            raise InvalidArgumentError("counts must be positive")
        if m < 64 and values.size and values[-1] >> np.uint64(m):
            raise InvalidArgumentError(f"pattern value does not fit {m} bits")
        return cls(m, int(counts.sum()), _readonly(values), _readonly(counts))

    @classmethod
    def from_dict(cls, m: int, counts: Mapping) -> "PatternProfile":
        items = {_pattern_key(k, m): int(v) for k, v in counts.items() if int(v)}
        return cls.from_arrays(m, list(items), list(items.values()))

    @property
    def distinct(self) -> int:
        return int(self.values.size)

    def __len__(self) -> int:
        return self.distinct

    def __getitem__(self, pattern) -> int:
        v = _pattern_key(pattern, self.m)
        i = int(np.searchsorted(self.values, np.uint64(v)))
        if i < self.values.size and int(self.values[i]) == v:
            return int(self.counts[i])
        return 0

    def get(self, pattern, default: int = 0) -> int:
        return self[pattern] or default

    def as_dict(self) -> dict:
        return dict(zip(self.values.tolist(), self.counts.tolist()))

    def __eq__(self, other) -> bool:
        if not isinstance(other, PatternProfile):
            return NotImplemented
        return (
            self.m == other.m
            and self.total_windows == other.total_windows
            and np.array_equal(self.values, other.values)
            and np.array_equal(self.counts, other.counts)
        )

    def __repr__(self) -> str:
        return f"PatternProfile(m={self.m}, total_windows={self.total_windows}, distinct={self.distinct})"


@dataclass(frozen=True, eq=False)
class Distribution:
    """Normalized pattern frequencies; zero-probability patterns are absent.

    When built by :func:`normalize`, the integer counts and window total are
    kept alongside so deviation scores can be computed exactly.
    """

    m: int
    values: np.ndarray
    probs: np.ndarray
    counts: Union[np.ndarray, None] = None
    total: Union[int, None] = None

    @classmethod
    def from_dict(cls, m: int, probs: Mapping) -> "Distribution":
        m = check_pattern_length(m)
        items = sorted((_pattern_key(k, m), float(p)) for k, p in probs.items() if p)
        values = np.array([k for k, _ in items], dtype=np.uint64)
        p = np.array([v for _, v in items], dtype=np.float64)
        if np.any(p < 0) or abs(p.sum() - 1.0) > 1e-12:
            raise InvalidArgumentError("probabilities must be non-negative and sum to 1")
        if values.size and np.any(values[1:] == values[:-1]):
            raise InvalidArgumentError("duplicate pattern values")
        return cls(m, _readonly(values), _readonly(p))

    def as_dict(self) -> dict:
        return dict(zip(self.values.tolist(), self.probs.tolist()))

    def __len__(self) -> int:
        return int(self.values.size)


def _pattern_key(pattern, m: int) -> int:
    """Accept either an int pattern value or a '0'/'1' string of length m."""
    if isinstance(pattern, str):
        if len(pattern) != m or set(pattern) - {"0", "1"}:
            raise InvalidArgumentError(f"{pattern!r} is not a {m}-bit pattern string")
        return int(pattern, 2)
    v = int(pattern)
    if not 0 <= v < 1 << m:
        raise InvalidArgumentError(f"pattern value {v} does not fit {m} bits")
    return v


def pattern_bits(value: int, m: int) -> str:
    return format(int(value), f"0{m}b")


# ---------------------------------------------------------------------------
# window extraction


def window_values(packed: np.ndarray, length_bits: int, m: int) -> np.ndarray:
    """All ``n - m + 1`` window values of each packed row.

    ``packed`` is ``(rows, ceil(n/8))`` octets (or a single 1-d row); the
    result is ``(rows, n - m + 1)`` uint64.
    """
    m = check_pattern_length(m)
    packed = np.asarray(packed, dtype=np.uint8)
    squeeze = packed.ndim == 1
    if squeeze:
        packed = packed[None, :]
    if m > length_bits:
        raise EmptyWindowError(f"pattern length {m} exceeds sequence length {length_bits}")
    rows, nbytes = packed.shape
    n_windows = length_bits - m + 1

    # 64-bit big-endian word starting at every octet, plus the following octet
    padded = np.zeros((rows, nbytes + 9), dtype=np.uint64)
    padded[:, :nbytes] = packed
    word = np.zeros((rows, nbytes), dtype=np.uint64)
    for k in range(8):
        word |= padded[:, k:k + nbytes] << np.uint64(56 - 8 * k)
    nxt = padded[:, 8:8 + nbytes]

    out = np.empty((rows, nbytes, 8), dtype=np.uint64)
    drop = np.uint64(64 - m)
    out[:, :, 0] = word >> drop
    for r in range(1, 8):
        w = (word << np.uint64(r)) | (nxt >> np.uint64(8 - r))
        out[:, :, r] = w >> drop
    res = out.reshape(rows, 8 * nbytes)[:, :n_windows]
    return res[0] if squeeze else res


def _packed_of(sequence: BitSequence) -> np.ndarray:
    return np.frombuffer(sequence.data, dtype=np.uint8)


def count_occurrences(pattern, sequence: BitSequence) -> int:
    """Number of (possibly overlapping) start positions where ``pattern`` occurs.

    ``pattern`` is a '0'/'1' string or a :class:`BitSequence`.
    """
    if isinstance(pattern, BitSequence):
        pattern = str(pattern)
    if not isinstance(pattern, str) or not pattern:
        raise InvalidArgumentError("pattern must be a non-empty bit string")
    m = len(pattern)
    if m > sequence.length_bits:
        raise EmptyWindowError(f"pattern length {m} exceeds sequence length {sequence.length_bits}")
    target = np.uint64(_pattern_key(pattern, check_pattern_length(m)))
    return int(np.count_nonzero(window_values(_packed_of(sequence), sequence.length_bits, m) == target))


def profile_from_windows(windows: np.ndarray, m: int, method: str = "auto") -> PatternProfile:
    """Count an arbitrary array of window values into a profile."""
    flat = np.asarray(windows, dtype=np.uint64).reshape(-1)
    if method == "auto":
        method = "dense" if m <= DENSE_MAX_M else "sparse"
    if method == "dense":
        if m > 24:
            raise InvalidArgumentError("dense counting is limited to m <= 24")
        table = np.bincount(flat.astype(np.int64), minlength=1 << m)
        values = np.flatnonzero(table).astype(np.uint64)
        counts = table[values.astype(np.int64)].astype(np.int64)
    elif method == "sparse":
        values, counts = np.unique(flat, return_counts=True)
        counts = counts.astype(np.int64)
    else:
        raise InvalidArgumentError(f"unknown counting method {method!r}")
    return PatternProfile(m, int(flat.size), _readonly(values), _readonly(counts))


def extract_profile(sequence: BitSequence, m: int, method: str = "auto") -> PatternProfile:
    m = check_pattern_length(m)
    if m > sequence.length_bits:
        raise EmptyWindowError(f"pattern length {m} exceeds sequence length {sequence.length_bits}")
    windows = window_values(_packed_of(sequence), sequence.length_bits, m)
    return profile_from_windows(windows, m, method)


def merge_profiles(profiles: Iterable[PatternProfile]) -> PatternProfile:
    """Pattern-wise sum of counts; the result does not depend on input order."""
    profiles = list(profiles)
    if not profiles:
        raise InvalidArgumentError("cannot merge an empty list of profiles")
    m = profiles[0].m
    if any(p.m != m for p in profiles):
        raise IncompatibleProfileError(f"mixed pattern lengths {sorted({p.m for p in profiles})}")
    if len(profiles) == 1:
        return profiles[0]
    values = np.concatenate([p.values for p in profiles])
    counts = np.concatenate([p.counts for p in profiles])
    order = np.argsort(values, kind="stable")
    values, counts = values[order], counts[order]
    if values.size == 0:
        return PatternProfile(m, 0, _readonly(values), _readonly(counts))
    starts = np.flatnonzero(np.r_[True, values[1:] != values[:-1]])
    merged = np.add.reduceat(counts, starts)
    return PatternProfile(
        m,
        sum(p.total_windows for p in profiles),
        _readonly(values[starts].copy()),
        _readonly(merged.astype(np.int64)),
    )


def normalize(profile: PatternProfile) -> Distribution:
    if profile.total_windows < 1:
        raise EmptyWindowError("cannot normalize a profile with no windows")
    probs = profile.counts / float(profile.total_windows)
    return Distribution(profile.m, profile.values, _readonly(probs), profile.counts, profile.total_windows)
