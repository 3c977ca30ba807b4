"""Acceptance suite.

Each test carries a ``criterion`` marker; the conftest summary prints one
PASS/FAIL line per criterion at the end of the run.  Criteria 5 and 6 run the
full-size CLI pipeline (two corpora of 10,000 x 4096 bits) and take minutes.
"""

import json
import os
import time

import numpy as np
import pytest
from cryptography.hazmat.primitives.ciphers import Cipher, algorithms

from seqprint.cli import main
from seqprint.extract import Distribution, extract_profile, normalize
from seqprint.metrics import deviation_score, entropy_upper_bound, pattern_entropy
from seqprint.pipeline import analyze_corpus, compare, null_baseline
from seqprint.seqgen import BiasedBits, BitSequence, UniformRef, arx_block, generate_corpus

import oracles

C1 = pytest.mark.criterion(1, "counting oracle equivalence")
C2 = pytest.mark.criterion(2, "metric property suite")
C3 = pytest.mark.criterion(3, "ARX block function vs published test vectors")
C4 = pytest.mark.criterion(4, "distinguisher sanity (1000 x 4096, m=8, 100 shuffles)")
C5 = pytest.mark.criterion(5, "full-size table reproduction (10000 x 4096, m=8,16,32)")
C6 = pytest.mark.criterion(6, "determinism across SEQPRINT_THREADS=1 and 8")


# --- 1


@C1
def test_counting_matches_naive_rescan():
    rng = np.random.default_rng(20240601)
    t0 = time.perf_counter()
    cases = 0
    while cases < 1200:
        n = int(rng.integers(1, 257))
        m = int(rng.integers(1, min(16, n) + 1))
        # mix of fair and heavily skewed inputs so repeats are common too
        p = rng.choice([0.5, 0.1, 0.9])
        s = "".join("1" if b else "0" for b in rng.random(n) < p)
        prof = extract_profile(BitSequence.from_bits(s), m)
        assert prof.as_dict() == oracles.naive_profile(s, m), (s, m)
        assert prof.total_windows == n - m + 1
        cases += 1
    assert time.perf_counter() - t0 < 10


# --- 2


def _random_distribution(rng, m):
    k = int(rng.integers(1, 2**m + 1))
    support = np.sort(rng.choice(2**m, size=k, replace=False))
    w = rng.random(k) ** 3 + 1e-12
    return Distribution(m, support.astype(np.uint64), w / w.sum())


@C2
def test_deviation_metric_axioms():
    rng = np.random.default_rng(7)
    for _ in range(600):
        m = int(rng.integers(1, 9))
        a, b, c = (_random_distribution(rng, m) for _ in range(3))
        dab, dba = deviation_score(a, b), deviation_score(b, a)
        assert deviation_score(a, a) == 0.0
        assert dab >= 0.0 and abs(dab - dba) <= 1e-12
        assert deviation_score(a, c) <= dab + deviation_score(b, c) + 1e-9


@C2
def test_entropy_bounds_random_sequences():
    rng = np.random.default_rng(11)
    for _ in range(600):
        n = int(rng.integers(1, 2049))
        m = int(rng.integers(1, min(32, n) + 1))
        bits = (rng.random(n) < rng.choice([0.5, 0.2, 0.02])).astype(np.uint8)
        p = extract_profile(BitSequence.from_bits(bits.tolist()), m)
        h = pattern_entropy(normalize(p))
        assert -1e-12 <= h <= entropy_upper_bound(m, p.total_windows) + 1e-9


@C2
@pytest.mark.parametrize("k", [3, 4, 8])
def test_de_bruijn_entropy(k):
    s = oracles.de_bruijn_linear(k)
    assert abs(pattern_entropy(normalize(extract_profile(BitSequence.from_bits(s), k))) - k) <= 1e-9


# --- 3

# RFC 7539 section 2.3.2 and appendix A.1 block function vectors
RFC_VECTORS = [
    (bytes(range(32)), bytes.fromhex("000000090000004a00000000"), 1,
     "10f1e7e4d13b5915500fdd1fa32071c4c7d1f4c733c068030422aa9ac3d46c4e"
     "d2826446079faa0914c2d705d98b02a2b5129cd1de164eb9cbd083e8a2503c4e"),
    (bytes(32), bytes(12), 0,
     "76b8e0ada0f13d90405d6ae55386bd28bdd219b8a08ded1aa836efcc8b770dc7"
     "da41597c5157488d7724e03fb8d84a376a43b8f41518a11cc387b669b2ee6586"),
    (bytes(32), bytes(12), 1,
     "9f07e7be5551387a98ba977c732d080dcb0f29a048e3656912c6533e32ee7aed"
     "29b721769ce64e43d57133b074d839d531ed1f28510afb45ace10a1f4b794d6f"),
    (bytes(31) + b"\x01", bytes(12), 1,
     "3aeb5224ecf849929b9d828db1ced4dd832025e8018b8160b82284f3c949aa5a"
     "8eca00bbb4a73bdad192b5c42f73f2fd4e273644c8b36125a64addeb006c13a0"),
    (b"\x00\xff" + bytes(30), bytes(12), 2,
     "72d54dfbf12ec44b362692df94137f328fea8da73990265ec1bbbea1ae9af0ca"
     "13b25aa26cb4a648cb9b9d1be65b2c0924a66c54d545ec1b7374f4872e99f096"),
    (bytes(32), bytes(11) + b"\x02", 0,
     "c2c64d378cd536374ae204b9ef933fcd1a8b2288b3dfa49672ab765b54ee27c7"
     "8a970e0e955c14f3a88e741b97c286f75f8fc299e8148362fa198a39531bed6d"),
]


@C3
@pytest.mark.parametrize("key,nonce,counter,expected", RFC_VECTORS)
def test_arx_published_vectors(key, nonce, counter, expected):
    assert arx_block(key, nonce, counter, 20) == bytes.fromhex(expected)


@C3
def test_arx_matches_independent_implementation():
    rng = np.random.default_rng(3)
    for _ in range(200):
        key, nonce = rng.bytes(32), rng.bytes(12)
        counter = int(rng.integers(0, 1 << 32))
        enc = Cipher(algorithms.ChaCha20(key, counter.to_bytes(4, "little") + nonce), mode=None).encryptor()
        assert arx_block(key, nonce, counter, 20) == enc.update(bytes(64))


# --- 4


def _z_cross(spec_a, seed_a, spec_b, seed_b):
    a = generate_corpus(spec_a, seed_a, 1000, 4096)
    b = generate_corpus(spec_b, seed_b, 1000, 4096)
    ra, rb = analyze_corpus(a, [8], threads=1), analyze_corpus(b, [8], threads=1)
    null = null_baseline(a, 8, shuffle_count=100, seed=0, other=b, threads=1)
    return compare(ra, rb, {8: null}).rows[0]


@pytest.fixture(scope="module")
def distinguisher_runs():
    t0 = time.perf_counter()
    biased = _z_cross(BiasedBits(0.55), 1, UniformRef(), 2)
    same = _z_cross(UniformRef(), 2, UniformRef(), 3)
    return biased, same, time.perf_counter() - t0


@C4
def test_biased_is_detected(distinguisher_runs):
    biased, _, _ = distinguisher_runs
    print(f"biased vs uniform: D={biased.deviation:.6f} z={biased.z:.2f}")
    assert biased.z > 5


@C4
def test_same_source_is_not_detected(distinguisher_runs):
    _, same, _ = distinguisher_runs
    print(f"uniform vs uniform: D={same.deviation:.6f} z={same.z:.2f}")
    assert abs(same.z) < 4


@C4
def test_distinguisher_runtime(distinguisher_runs):
    assert distinguisher_runs[2] < 60


# --- 5 and 6


def _pipeline(workdir, threads):
    """Full-size CLI run into workdir; returns wall seconds."""
    old = os.environ.get("SEQPRINT_THREADS")
    os.environ["SEQPRINT_THREADS"] = str(threads)
    try:
        t0 = time.perf_counter()
        steps = [
            ["generate", "--gen", "arx", "--rounds", "20", "--seed", "1", "--out", workdir / "cipher.sbfc"],
            ["generate", "--gen", "uniform", "--seed", "2", "--out", workdir / "reference.sbfc"],
            ["analyze", workdir / "cipher.sbfc", "--m", "8,16,32", "--out", workdir / "cipher.json"],
            ["analyze", workdir / "reference.sbfc", "--m", "8,16,32", "--out", workdir / "reference.json"],
            ["compare", workdir / "cipher.json", workdir / "reference.json", "--out-dir", workdir / "report",
             "--corpus-a", workdir / "cipher.sbfc", "--corpus-b", workdir / "reference.sbfc", "--figures"],
        ]
        for argv in steps:
            assert main([str(a) for a in argv]) == 0, argv
        return time.perf_counter() - t0
    finally:
        if old is None:
            del os.environ["SEQPRINT_THREADS"]
        else:
            os.environ["SEQPRINT_THREADS"] = old


@pytest.fixture(scope="module")
def full_run(tmp_path_factory):
    out = tmp_path_factory.mktemp("threads1")
    return out, _pipeline(out, 1)


@pytest.fixture(scope="module")
def full_run_8(tmp_path_factory):
    out = tmp_path_factory.mktemp("threads8")
    return out, _pipeline(out, 8)


def _csv(path):
    lines = path.read_text().splitlines()
    return lines[0].split(","), [line.split(",") for line in lines[1:]]


@C5
@pytest.mark.slow
def test_full_size_runtime(full_run):
    print(f"pipeline wall time {full_run[1]:.1f}s")
    assert full_run[1] < 600


@C5
@pytest.mark.slow
def test_full_size_table_shapes(full_run, capsys):
    report = full_run[0] / "report"
    for name in ("deviation.csv", "entropy.csv", "concentration.csv", "recurrence.csv"):
        header, rows = _csv(report / name)
        assert [r[0] for r in rows] == ["8", "16", "32"], name
        assert all(len(r) == len(header) for r in rows)
    header, _ = _csv(report / "recurrence.csv")
    bins = ["r0", "r1", "r2", "r3", "r4plus"]
    assert header[1:] == [f"cipher_{b}" for b in bins] + [f"reference_{b}" for b in bins]
    doc = json.loads((report / "report.json").read_text())
    assert doc["cipher"]["length_bits"] == 4096 and doc["cipher"]["count"] == 10000
    assert doc["reference"]["count"] == 10000
    for name in ("deviation.png", "entropy.png", "recurrence.png"):
        assert (report / name).stat().st_size > 0
    with capsys.disabled():
        print()
        for name in ("concentration.csv", "deviation.csv", "entropy.csv"):
            print((report / name).read_text())


@C5
@pytest.mark.slow
def test_full_size_deviation_nonzero(full_run):
    _, rows = _csv(full_run[0] / "report" / "deviation.csv")
    assert all(float(r[1]) > 0 for r in rows)


@C5
@pytest.mark.slow
@pytest.mark.parametrize("m", [8, 16, 32])
def test_full_size_deviation_small(full_run, m):
    _, rows = _csv(full_run[0] / "report" / "deviation.csv")
    d = {int(r[0]): float(r[1]) for r in rows}[m]
    print(f"m={m} D={d!r}")
    assert d < 0.5


@C6
@pytest.mark.slow
def test_outputs_identical_across_thread_counts(full_run, full_run_8):
    a, b = full_run[0], full_run_8[0]
    files_a = sorted(p.relative_to(a) for p in a.rglob("*") if p.is_file())
    files_b = sorted(p.relative_to(b) for p in b.rglob("*") if p.is_file())
    assert files_a == files_b and len(files_a) >= 10
    differing = [str(p) for p in files_a if (a / p).read_bytes() != (b / p).read_bytes()]
    assert differing == []
