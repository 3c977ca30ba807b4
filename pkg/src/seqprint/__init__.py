"""Substring-statistics fingerprinting of generator bit sequences."""

from .errors import (
    CorpusFormatError,
    EmptyWindowError,
    IncompatibleAnalysisError,
    IncompatibleFingerprintError,
    IncompatibleProfileError,
    InvalidArgumentError,
    InvalidSpecError,
    SeqprintError,
)
from .extract import (
    Distribution,
    PatternProfile,
    count_occurrences,
    extract_profile,
    merge_profiles,
    normalize,
)
from .fingerprint import Fingerprint, compute_fingerprint, fingerprint_distance
from .metrics import (
    RecurrenceHistogram,
    StructuralMetrics,
    concentration_stats,
    deviation_score,
    pattern_entropy,
    recurrence_histogram,
)
from .pipeline import (
    ComparisonReport,
    CorpusAnalysis,
    NullBaseline,
    analyze_corpus,
    compare,
    null_baseline,
)
from .seqgen import (
    ArxKeystream,
    BiasedBits,
    BitSequence,
    Corpus,
    Lcg,
    UniformRef,
    arx_block,
    generate_corpus,
    generate_sequence,
    read_corpus,
    write_corpus,
)

__version__ = "0.1.0"
