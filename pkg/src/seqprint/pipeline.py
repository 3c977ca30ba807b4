"""Corpus analysis, permutation null baselines and two-corpus comparison.

Deviation scores and every table-shaped output use pooled counts: windows of
all sequences in a corpus are summed before normalizing. Entropy is reported
both pooled and as the mean/std of per-sequence values.

Parallel work only produces integer counts (or per-sequence values whose
computation does not depend on the schedule), and floating-point metrics are
derived once from the reduced integers, so results are identical for any
``SEQPRINT_THREADS`` setting.
"""

from __future__ import annotations

import hashlib
import json
import math
import os
import struct
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Optional, Sequence

import numpy as np
import scipy.sparse as sp

from .errors import (
    CorpusFormatError,
    EmptyWindowError,
    IncompatibleAnalysisError,
    InvalidArgumentError,
)
from .extract import (
    DENSE_MAX_M,
    PatternProfile,
    check_pattern_length,
    normalize,
    window_values,
)
from .fingerprint import Fingerprint, compute_fingerprint, fingerprint_distance
from .metrics import (
    RecurrenceHistogram,
    StructuralMetrics,
    concentration_stats,
    deviation_score,
    recurrence_histogram,
)
from .seqgen import Corpus

THREADS_ENV = "SEQPRINT_THREADS"
ANALYSIS_SCHEMA_VERSION = 1
REPORT_SCHEMA_VERSION = 1
PROFILE_MAGIC = b"SBFP"
PROFILE_VERSION = 1

_CHUNK_ROWS = 256


def resolve_threads(threads: Optional[int] = None) -> int:
    """Worker count: explicit argument, else ``SEQPRINT_THREADS``, else CPU count."""
    if threads is None:
        raw = os.environ.get(THREADS_ENV)
        if raw is None or raw == "":
            return max(1, min(8, os.cpu_count() or 1))
        try:
            threads = int(raw)
        except ValueError:
            raise InvalidArgumentError(f"{THREADS_ENV} must be a positive integer, got {raw!r}") from None
    if threads < 1:
        raise InvalidArgumentError(f"thread count must be positive, got {threads}")
    return threads


def _map_chunks(fn, n_rows: int, threads: int) -> list:
    bounds = [(lo, min(lo + _CHUNK_ROWS, n_rows)) for lo in range(0, n_rows, _CHUNK_ROWS)]
    if threads == 1 or len(bounds) == 1:
        return [fn(lo, hi) for lo, hi in bounds]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(lambda b: fn(*b), bounds))


def _row_runs(windows: np.ndarray):
    """Sort each row and return its runs as (row, value, length) arrays."""
    k, w = windows.shape
    s = np.sort(windows, axis=1)
    new = np.ones((k, w), dtype=bool)
    new[:, 1:] = s[:, 1:] != s[:, :-1]
    starts = np.flatnonzero(new.ravel())
    lengths = np.diff(np.append(starts, k * w))
    return starts // w, s.ravel()[starts], lengths


def _row_entropies(rows: np.ndarray, lengths: np.ndarray, k: int, w: int) -> np.ndarray:
    c = lengths.astype(np.float64)
    acc = np.bincount(rows, weights=c * np.log2(c), minlength=k)
    return np.maximum(math.log2(w) - acc / w, 0.0)


def _sorted_runs(flat: np.ndarray):
    flat.sort()
    starts = np.flatnonzero(np.r_[True, flat[1:] != flat[:-1]])
    counts = np.diff(np.append(starts, flat.size)).astype(np.int64)
    return flat[starts].copy(), counts


def _pooled_scan(packed: np.ndarray, length_bits: int, m: int, threads: int, with_entropy: bool):
    """Pooled profile over all rows and, optionally, per-row entropies."""
    n_rows = packed.shape[0]
    n_win = length_bits - m + 1
    dense = m <= DENSE_MAX_M
    entropies = np.empty(n_rows) if with_entropy else None
    table = None
    allwin = None if dense else np.empty((n_rows, n_win), dtype=np.uint64)

    def work(lo, hi):
        win = window_values(packed[lo:hi], length_bits, m)
        if with_entropy:
            rows, _, lengths = _row_runs(win)
            entropies[lo:hi] = _row_entropies(rows, lengths, hi - lo, n_win)
        if dense:
            return np.bincount(win.ravel().astype(np.int64), minlength=1 << m)
        allwin[lo:hi] = win
        return None

    parts = _map_chunks(work, n_rows, threads)
    if dense:
        table = np.zeros(1 << m, dtype=np.int64)
        for t in parts:
            table += t
        values = np.flatnonzero(table).astype(np.uint64)
        counts = table[values.astype(np.int64)]
    else:
        values, counts = _sorted_runs(allwin.reshape(-1))
        del allwin
    values.setflags(write=False)
    counts.setflags(write=False)
    profile = PatternProfile(m, n_rows * n_win, values, counts)
    return profile, entropies


def _repeated_values(packed: np.ndarray, length_bits: int, m: int, threads: int) -> np.ndarray:
    """Sorted pattern values occurring at least twice across all rows."""
    n_rows = packed.shape[0]
    if m <= DENSE_MAX_M:
        tables = _map_chunks(
            lambda lo, hi: np.bincount(
                window_values(packed[lo:hi], length_bits, m).ravel().astype(np.int64),
                minlength=1 << m,
            ),
            n_rows, threads,
        )
        return np.flatnonzero(sum(tables) >= 2).astype(np.uint64)
    allwin = np.empty((n_rows, length_bits - m + 1), dtype=np.uint64)

    def fill(lo, hi):
        allwin[lo:hi] = window_values(packed[lo:hi], length_bits, m)

    _map_chunks(fill, n_rows, threads)
    flat = allwin.reshape(-1)
    flat.sort()
    dup = flat[1:][flat[1:] == flat[:-1]]
    del allwin, flat
    if dup.size == 0:
        return dup
    return dup[np.r_[True, dup[1:] != dup[:-1]]]


# ---------------------------------------------------------------------------
# corpus analysis


@dataclass(frozen=True, eq=False)
class ScaleAnalysis:
    m: int
    profile: PatternProfile
    metrics: StructuralMetrics
    recurrence: RecurrenceHistogram
    seq_entropy_mean: float
    seq_entropy_std: float


@dataclass(eq=False)
class CorpusAnalysis:
    identity: dict
    m_set: tuple
    scales: dict
    fingerprint: Fingerprint

    @property
    def length_bits(self) -> int:
        return int(self.identity["length_bits"])

    @property
    def count(self) -> int:
        return int(self.identity["count"])

    def __getitem__(self, m: int) -> ScaleAnalysis:
        return self.scales[m]

    def __eq__(self, other) -> bool:
        if not isinstance(other, CorpusAnalysis):
            return NotImplemented
        if (self.identity, self.m_set, self.fingerprint) != (other.identity, other.m_set, other.fingerprint):
            return False
        for m in self.m_set:
            x, y = self.scales[m], other.scales[m]
            if (x.profile != y.profile or x.metrics != y.metrics or x.recurrence != y.recurrence
                    or (x.seq_entropy_mean, x.seq_entropy_std) != (y.seq_entropy_mean, y.seq_entropy_std)):
                return False
        return True


def _check_m_set(m_set: Sequence[int], length_bits: int) -> tuple:
    m_set = tuple(check_pattern_length(m) for m in m_set)
    if not m_set:
        raise InvalidArgumentError("m_set must not be empty")
    if len(set(m_set)) != len(m_set):
        raise InvalidArgumentError(f"duplicate pattern lengths in {m_set}")
    if max(m_set) > length_bits:
        raise EmptyWindowError(f"pattern length {max(m_set)} exceeds sequence length {length_bits}")
    return m_set


def analyze_corpus(corpus: Corpus, m_set: Sequence[int] = (8, 16, 32), threads: Optional[int] = None) -> CorpusAnalysis:
    m_set = _check_m_set(m_set, corpus.length_bits)
    threads = resolve_threads(threads)
    scales = {}
    for m in m_set:
        profile, ent = _pooled_scan(corpus.packed, corpus.length_bits, m, threads, with_entropy=True)
        scales[m] = ScaleAnalysis(
            m=m,
            profile=profile,
            metrics=concentration_stats(profile),
            recurrence=recurrence_histogram(profile),
            seq_entropy_mean=float(np.mean(ent)),
            seq_entropy_std=float(np.std(ent, ddof=1)) if ent.size > 1 else 0.0,
        )
    fp = compute_fingerprint([scales[m].profile for m in m_set], m_set, provenance="corpus")
    return CorpusAnalysis(corpus.identity(), m_set, scales, fp)


# ---------------------------------------------------------------------------
# null baseline


@dataclass(frozen=True)
class NullBaseline:
    """Moments of the deviation score under random re-partition of sequences.

    ``mode`` is ``"split"`` (equal halves of one reference corpus) or
    ``"pooled"`` (both compared corpora pooled and re-split at their original
    sizes, i.e. a two-sample permutation test).
    """

    m: int
    shuffle_count: int
    d_mean: float
    d_std: float
    seed: int
    mode: str = "split"
    group_sizes: tuple = (0, 0)

    def to_dict(self) -> dict:
        return {
            "m": self.m,
            "mode": self.mode,
            "shuffle_count": self.shuffle_count,
            "seed": self.seed,
            "group_sizes": list(self.group_sizes),
            "d_mean": self.d_mean,
            "d_std": self.d_std,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "NullBaseline":
        return cls(
            m=int(d["m"]),
            shuffle_count=int(d["shuffle_count"]),
            d_mean=float(d["d_mean"]),
            d_std=float(d["d_std"]),
            seed=int(d["seed"]),
            mode=d["mode"],
            group_sizes=tuple(d["group_sizes"]),
        )


class _PartitionIndex:
    """Per-sequence pattern counts arranged for fast re-partition scoring.

    Patterns that occur exactly once across all rows contribute ``1/W`` of
    whichever side holds them, so only their per-row tally is kept; every
    other pattern becomes a column of a sparse ``rows x patterns`` matrix.
    """

    def __init__(self, packed: np.ndarray, length_bits: int, m: int, threads: int):
        self.rows = packed.shape[0]
        self.windows_per_row = length_bits - m + 1
        repeated = _repeated_values(packed, length_bits, m, threads)
        n_rep = repeated.size

        def work(lo, hi):
            win = window_values(packed[lo:hi], length_bits, m)
            rows, vals, lengths = _row_runs(win)
            idx = np.searchsorted(repeated, vals)
            hit = np.zeros(vals.size, dtype=bool)
            if n_rep:
                hit = repeated[np.minimum(idx, n_rep - 1)] == vals
            singles = np.bincount(rows[~hit], minlength=hi - lo)
            mat = sp.csr_matrix(
                (lengths[hit].astype(np.int32), (rows[hit], idx[hit])),
                shape=(hi - lo, n_rep),
            )
            return mat, singles

        parts = _map_chunks(work, self.rows, threads)
        # chunk blocks are kept as-is: stacking or transposing them would
        # briefly need two copies of the largest structure in the run
        self.blocks = [(lo, p[0]) for lo, p in zip(range(0, self.rows, _CHUNK_ROWS), parts)]
        self.singles = np.concatenate([p[1] for p in parts]).astype(np.int64)
        del parts
        self.col_totals = self._column_counts(np.ones(self.rows, dtype=np.int32))

    def _column_counts(self, x: np.ndarray) -> np.ndarray:
        """Per-pattern occurrence totals over the rows selected by 0/1 ``x``."""
        out = None
        for lo, block in self.blocks:
            xs = x[lo:lo + block.shape[0]]
            if not xs.any():
                continue
            # int32 throughout: a column total is at most rows * windows_per_row
            part = block.T @ xs
            out = part if out is None else out + part
        if out is None:
            return np.zeros(self.blocks[0][1].shape[1], dtype=np.int64)
        return out.astype(np.int64)

    def deviation(self, side_a: np.ndarray, side_b: np.ndarray) -> float:
        """Deviation between the pooled distributions of two disjoint row sets."""
        wa = side_a.size * self.windows_per_row
        wb = side_b.size * self.windows_per_row
        xa = np.zeros(self.rows, dtype=np.int32)
        xa[side_a] = 1
        ca = self._column_counts(xa)
        if side_a.size + side_b.size == self.rows:
            cb = self.col_totals - ca
        else:
            xb = np.zeros(self.rows, dtype=np.int32)
            xb[side_b] = 1
            cb = self._column_counts(xb)
        sa = int(self.singles[side_a].sum())
        sb = int(self.singles[side_b].sum())
        if wa * wb < 1 << 62:
            num = int(np.abs(ca * wb - cb * wa).sum()) + sa * wb + sb * wa
            return num / (wa * wb)
        return float(np.abs(ca / wa - cb / wb).sum()) + sa / wa + sb / wb


def _run_shuffles(index: _PartitionIndex, sizes: tuple, shuffle_count: int, seed: int) -> tuple:
    rng = np.random.default_rng(seed)
    na, nb = sizes
    scores = np.empty(shuffle_count)
    for i in range(shuffle_count):
        perm = rng.permutation(index.rows)
        scores[i] = index.deviation(perm[:na], perm[na:na + nb])
    return float(scores.mean()), float(scores.std(ddof=1))


def null_baseline(
    reference: Corpus,
    m: int,
    shuffle_count: int = 100,
    seed: int = 0,
    other: Optional[Corpus] = None,
    threads: Optional[int] = None,
) -> NullBaseline:
    """Deviation-score moments under ``shuffle_count`` seeded random splits.

    With only ``reference``, its sequences are split into two equal halves.
    With ``other`` as well, the two corpora are pooled and re-split at their
    original sizes, which is the permutation null for comparing exactly those
    two corpora.
    """
    m = check_pattern_length(m)
    if shuffle_count < 2:
        raise InvalidArgumentError("shuffle_count must be at least 2")
    threads = resolve_threads(threads)
    if other is None:
        if reference.count < 4:
            raise InvalidArgumentError("the reference corpus needs at least 4 sequences")
        packed, length_bits = reference.packed, reference.length_bits
        half = reference.count // 2
        sizes, mode = (half, half), "split"
    else:
        if other.length_bits != reference.length_bits:
            raise IncompatibleAnalysisError("corpora have different sequence lengths")
        if reference.count + other.count < 4:
            raise InvalidArgumentError("pooled corpora need at least 4 sequences")
        packed = np.concatenate([reference.packed, other.packed])
        length_bits = reference.length_bits
        sizes, mode = (reference.count, other.count), "pooled"
    if m > length_bits:
        raise EmptyWindowError(f"pattern length {m} exceeds sequence length {length_bits}")
    index = _PartitionIndex(packed, length_bits, m, threads)
    d_mean, d_std = _run_shuffles(index, sizes, shuffle_count, seed)
    return NullBaseline(m, shuffle_count, d_mean, d_std, int(seed), mode, sizes)


# ---------------------------------------------------------------------------
# comparison


@dataclass(frozen=True)
class ComparisonRow:
    m: int
    deviation: float
    z: Optional[float]
    null: Optional[NullBaseline]
    metrics_a: StructuralMetrics
    metrics_b: StructuralMetrics
    seq_entropy_a: tuple
    seq_entropy_b: tuple
    recurrence_a: tuple
    recurrence_b: tuple


@dataclass(frozen=True)
class ComparisonReport:
    identity_a: dict
    identity_b: dict
    m_set: tuple
    rows: tuple
    fingerprint_distance: float

    def row(self, m: int) -> ComparisonRow:
        for r in self.rows:
            if r.m == m:
                return r
        raise KeyError(m)


def z_score(d: float, null: Optional[NullBaseline]) -> Optional[float]:
    if null is None:
        return None
    if null.d_std > 0:
        return (d - null.d_mean) / null.d_std
    if d > null.d_mean:
        return math.inf
    if d < null.d_mean:
        return -math.inf
    return 0.0


def compare(
    a: CorpusAnalysis,
    b: CorpusAnalysis,
    null: Optional[Mapping[int, NullBaseline]] = None,
) -> ComparisonReport:
    """Per-scale deviation, z-score and side-by-side metrics of ``a`` vs ``b``.

    ``a`` plays the cipher column and ``b`` the reference column of the tables.
    """
    if a.m_set != b.m_set:
        raise IncompatibleAnalysisError(f"m_set differs: {a.m_set} vs {b.m_set}")
    if a.length_bits != b.length_bits:
        raise IncompatibleAnalysisError(
            f"sequence lengths differ: {a.length_bits} vs {b.length_bits}"
        )
    null = dict(null or {})
    rows = []
    for m in a.m_set:
        sa, sb = a[m], b[m]
        d = deviation_score(normalize(sa.profile), normalize(sb.profile))
        nb = null.get(m)
        if nb is not None and nb.m != m:
            raise IncompatibleAnalysisError(f"null baseline for m={nb.m} filed under m={m}")
        rows.append(ComparisonRow(
            m=m,
            deviation=d,
            z=z_score(d, nb),
            null=nb,
            metrics_a=sa.metrics,
            metrics_b=sb.metrics,
            seq_entropy_a=(sa.seq_entropy_mean, sa.seq_entropy_std),
            seq_entropy_b=(sb.seq_entropy_mean, sb.seq_entropy_std),
            recurrence_a=sa.recurrence.bins,
            recurrence_b=sb.recurrence.bins,
        ))
    return ComparisonReport(
        a.identity, b.identity, a.m_set, tuple(rows),
        fingerprint_distance(a.fingerprint, b.fingerprint),
    )


# ---------------------------------------------------------------------------
# analysis serialization


def _write_sidecar(analysis: CorpusAnalysis, path: Path) -> str:
    """Stream the pooled profiles to ``path``; returns the sha256 hex digest."""
    h = hashlib.sha256()
    with open(path, "wb") as f:
        def put(chunk):
            h.update(chunk)
            f.write(chunk)

        put(PROFILE_MAGIC + struct.pack(">HH", PROFILE_VERSION, len(analysis.m_set)))
        for m in analysis.m_set:
            p = analysis[m].profile
            put(struct.pack(">BQQ", m, p.total_windows, p.distinct))
            put(p.values.astype(">u8"))
            put(p.counts.astype(">u8"))
    return h.hexdigest()


def _read_sidecar(path: Path) -> tuple:
    """Parse a profile sidecar without holding a second copy of its arrays.

    Returns ``(profiles by m, sha256 hex digest)``.
    """
    h = hashlib.sha256()
    size = path.stat().st_size
    with open(path, "rb") as f:
        def take(n):
            b = f.read(n)
            if len(b) != n:
                raise CorpusFormatError("truncated profile sidecar")
            h.update(b)
            return b

        def take_u64(k):
            arr = np.empty(k, dtype=">u8")
            if f.readinto(memoryview(arr).cast("B")) != 8 * k:
                raise CorpusFormatError("truncated profile sidecar")
            h.update(arr)
            return arr.byteswap(inplace=True).view(arr.dtype.newbyteorder("="))

        if take(4) != PROFILE_MAGIC:
            raise CorpusFormatError("bad profile sidecar magic")
        version, n = struct.unpack(">HH", take(4))
        if version != PROFILE_VERSION:
            raise CorpusFormatError(f"unsupported profile sidecar version {version}")
        out = {}
        for _ in range(n):
            m, total, k = struct.unpack(">BQQ", take(17))
            if 16 * k > size - f.tell():
                raise CorpusFormatError("truncated profile sidecar")
            values = take_u64(k)
            counts = take_u64(k).view(np.int64)
            values.setflags(write=False)
            counts.setflags(write=False)
            out[m] = PatternProfile(m, total, values, counts)
        if f.read(1):
            raise CorpusFormatError("trailing bytes in profile sidecar")
    return out, h.hexdigest()


def sidecar_path(path) -> Path:
    path = Path(path)
    return path.with_name(path.stem + ".profiles")


def analysis_to_dict(analysis: CorpusAnalysis, sidecar_name: str, sidecar_digest: str) -> dict:
    return {
        "schema": "seqprint.analysis",
        "schema_version": ANALYSIS_SCHEMA_VERSION,
        "corpus": analysis.identity,
        "m_set": list(analysis.m_set),
        "aggregation": {"profiles": "pooled", "sequence_entropy": "per-sequence mean and std"},
        "scales": [
            {
                "m": m,
                "metrics": analysis[m].metrics.to_dict(),
                "recurrence": analysis[m].recurrence.to_dict()["bins"],
                "sequence_entropy": {
                    "mean": analysis[m].seq_entropy_mean,
                    "std": analysis[m].seq_entropy_std,
                },
            }
            for m in analysis.m_set
        ],
        "fingerprint": analysis.fingerprint.to_dict(),
        "profiles_file": sidecar_name,
        "profiles_sha256": sidecar_digest,
    }


def write_analysis(analysis: CorpusAnalysis, path) -> Path:
    """Write the JSON document at ``path`` plus its ``.profiles`` sidecar."""
    path = Path(path)
    side = sidecar_path(path)
    digest = _write_sidecar(analysis, side)
    doc = analysis_to_dict(analysis, side.name, digest)
    path.write_text(json.dumps(doc, indent=2) + "\n")
    return side


def read_analysis(path) -> CorpusAnalysis:
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise CorpusFormatError(f"{path} is not a JSON analysis document") from exc
    if doc.get("schema") != "seqprint.analysis" or doc.get("schema_version") != ANALYSIS_SCHEMA_VERSION:
        raise CorpusFormatError(f"{path} is not a version-{ANALYSIS_SCHEMA_VERSION} analysis document")
    profiles, digest = _read_sidecar(path.parent / doc["profiles_file"])
    if digest != doc["profiles_sha256"]:
        raise CorpusFormatError("profile sidecar digest mismatch")
    m_set = tuple(doc["m_set"])
    scales = {}
    for block in doc["scales"]:
        m = block["m"]
        scales[m] = ScaleAnalysis(
            m=m,
            profile=profiles[m],
            metrics=StructuralMetrics(**block["metrics"]),
            recurrence=RecurrenceHistogram(m, tuple(block["recurrence"].values())),
            seq_entropy_mean=block["sequence_entropy"]["mean"],
            seq_entropy_std=block["sequence_entropy"]["std"],
        )
    if set(scales) != set(m_set) or set(profiles) != set(m_set):
        raise CorpusFormatError("analysis scales do not match m_set")
    return CorpusAnalysis(doc["corpus"], m_set, scales, Fingerprint.from_dict(doc["fingerprint"]))
