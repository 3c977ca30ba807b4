"""Seed-reproducible bit sequence generators and the binary corpus format.

Every sequence is a pure function of ``(spec, master_seed, index, length_bits)``.
Per-sequence key material is derived from the master seed with a 64-bit
splitmix-style finalizer, so a 10,000 sequence corpus is reproducible from
one integer.

Bits are MSB-first within each octet everywhere in this package.
"""

from __future__ import annotations

import hashlib
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Union

import numpy as np

from .errors import CorpusFormatError, InvalidArgumentError, InvalidSpecError

MASK64 = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15
MIX_C1 = 0xBF58476D1CE4E5B9
MIX_C2 = 0x94D049BB133111EB

ARX_CONSTANTS = (0x61707865, 0x3320646E, 0x79622D32, 0x6B206574)

MAGIC = b"SBFC"
FORMAT_VERSION = 1


# ---------------------------------------------------------------------------
# generator specs


@dataclass(frozen=True)
class ArxKeystream:
    rounds: int = 20

    tag = 1
    name = "arx"

    def validate(self) -> None:
        if (
            not isinstance(self.rounds, int)
            or self.rounds % 2
            or not 2 <= self.rounds <= 20
        ):
            raise InvalidSpecError(f"rounds must be even and in [2, 20], got {self.rounds!r}")


@dataclass(frozen=True)
class Lcg:
    bits_per_step: int = 1
    modulus: int = 1 << 31
    multiplier: int = 1103515245
    increment: int = 12345

    tag = 2
    name = "lcg"

    def step(self, x):
        """One state transition; works on ints and uint64 arrays."""
        if isinstance(x, np.ndarray):
            return (np.uint64(self.multiplier) * x + np.uint64(self.increment)) % np.uint64(self.modulus)
        return (self.multiplier * x + self.increment) % self.modulus

    def validate(self) -> None:
        if not 1 <= self.bits_per_step <= 16:
            raise InvalidSpecError(f"bits_per_step must be in [1, 16], got {self.bits_per_step!r}")
        if not 2 <= self.modulus <= 1 << 32:
            raise InvalidSpecError("modulus must be in [2, 2^32]")
        if not (0 <= self.multiplier < self.modulus and 0 <= self.increment < self.modulus):
            raise InvalidSpecError("multiplier and increment must be reduced mod modulus")
        if self.bits_per_step > self.modulus.bit_length():
            raise InvalidSpecError("bits_per_step exceeds the state width")


@dataclass(frozen=True)
class BiasedBits:
    p_one: float = 0.5

    tag = 3
    name = "biased"

    def validate(self) -> None:
        p = self.p_one
        if not isinstance(p, (int, float)) or not 0.0 <= p <= 1.0:
            raise InvalidSpecError(f"p_one must be a probability in [0, 1], got {p!r}")


@dataclass(frozen=True)
class UniformRef:
    """Full-round ARX keystream, labelled as the reference-random source."""

    tag = 4
    name = "uniform"

    @property
    def rounds(self) -> int:
        return 20

    def validate(self) -> None:
        pass


GeneratorSpec = Union[ArxKeystream, Lcg, BiasedBits, UniformRef]


def spec_to_dict(spec: GeneratorSpec) -> dict:
    if isinstance(spec, ArxKeystream):
        return {"generator": "arx", "rounds": spec.rounds}
    if isinstance(spec, Lcg):
        return {
            "generator": "lcg",
            "bits_per_step": spec.bits_per_step,
            "modulus": spec.modulus,
            "multiplier": spec.multiplier,
            "increment": spec.increment,
        }
    if isinstance(spec, BiasedBits):
        return {"generator": "biased", "p_one": float(spec.p_one)}
    if isinstance(spec, UniformRef):
        return {"generator": "uniform"}
    raise InvalidSpecError(f"unknown generator spec {spec!r}")


def spec_from_dict(d: dict) -> GeneratorSpec:
    kind = d.get("generator")
    if kind == "arx":
        spec = ArxKeystream(rounds=int(d["rounds"]))
    elif kind == "lcg":
        spec = Lcg(
            bits_per_step=int(d["bits_per_step"]),
            modulus=int(d["modulus"]),
            multiplier=int(d["multiplier"]),
            increment=int(d["increment"]),
        )
    elif kind == "biased":
        spec = BiasedBits(p_one=float(d["p_one"]))
    elif kind == "uniform":
        spec = UniformRef()
    else:
        raise InvalidSpecError(f"unknown generator {kind!r}")
    spec.validate()
    return spec


# ---------------------------------------------------------------------------
# bit sequences


@dataclass(frozen=True)
class BitSequence:
    """A binary string of ``length_bits`` bits packed MSB-first into ``data``."""

    length_bits: int
    data: bytes

    def __post_init__(self):
        if self.length_bits < 1:
            raise InvalidSpecError("a bit sequence needs at least one bit")
        if len(self.data) != (self.length_bits + 7) // 8:
            raise InvalidArgumentError(
                f"{len(self.data)} octets cannot hold exactly {self.length_bits} bits"
            )
        pad = 8 * len(self.data) - self.length_bits
        if pad and self.data[-1] & ((1 << pad) - 1):
            raise InvalidArgumentError("pad bits in the final octet must be zero")

    @classmethod
    def from_bits(cls, bits: Union[str, Iterable[int]]) -> "BitSequence":
        if isinstance(bits, str):
            if set(bits) - {"0", "1"}:
                raise InvalidArgumentError("bit strings may only contain '0' and '1'")
            arr = np.frombuffer(bits.encode("ascii"), dtype=np.uint8) - ord("0")
        else:
            arr = np.asarray(list(bits), dtype=np.uint8)
            if arr.size and arr.max() > 1:
                raise InvalidArgumentError("bits must be 0 or 1")
        return cls(int(arr.size), np.packbits(arr).tobytes())

    def bits(self) -> np.ndarray:
        """Unpacked bits as a uint8 array of 0/1 values."""
        raw = np.frombuffer(self.data, dtype=np.uint8)
        return np.unpackbits(raw, count=self.length_bits)

    def __str__(self) -> str:
        return (self.bits() + ord("0")).tobytes().decode("ascii")

    def __len__(self) -> int:
        return self.length_bits


def pack_bits(bits: np.ndarray) -> np.ndarray:
    """Pack a ``(rows, n)`` 0/1 array into ``(rows, ceil(n/8))`` octets."""
    return np.packbits(np.asarray(bits, dtype=np.uint8), axis=-1)


def unpack_bits(packed: np.ndarray, length_bits: int) -> np.ndarray:
    return np.unpackbits(np.asarray(packed, dtype=np.uint8), axis=-1, count=length_bits)


# ---------------------------------------------------------------------------
# primitives


def mix64_int(x: int) -> int:
    """Scalar reference of :func:`mix64`, on Python ints."""
    z = (x + GOLDEN) & MASK64
    z = ((z ^ (z >> 30)) * MIX_C1) & MASK64
    z = ((z ^ (z >> 27)) * MIX_C2) & MASK64
    return z ^ (z >> 31)


def mix64(x) -> np.ndarray:
    """Vectorized 64-bit finalizer (wrapping uint64 arithmetic)."""
    z = np.asarray(x, dtype=np.uint64) + np.uint64(GOLDEN)
    z = (z ^ (z >> np.uint64(30))) * np.uint64(MIX_C1)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(MIX_C2)
    return z ^ (z >> np.uint64(31))


def _rotl(x: np.ndarray, n: int) -> np.ndarray:
    return (x << np.uint32(n)) | (x >> np.uint32(32 - n))


def _quarter_round(s, a, b, c, d):
    s[a] += s[b]
    s[d] = _rotl(s[d] ^ s[a], 16)
    s[c] += s[d]
    s[b] = _rotl(s[b] ^ s[c], 12)
    s[a] += s[b]
    s[d] = _rotl(s[d] ^ s[a], 8)
    s[c] += s[d]
    s[b] = _rotl(s[b] ^ s[c], 7)


def _check_rounds(rounds: int) -> None:
    if not isinstance(rounds, (int, np.integer)) or rounds % 2 or not 2 <= rounds <= 20:
        raise InvalidSpecError(f"rounds must be even and in [2, 20], got {rounds!r}")


def arx_blocks(key: np.ndarray, nonce: np.ndarray, counter: np.ndarray, rounds: int) -> np.ndarray:
    """Batched ARX block function.

    ``key`` is ``(B, 8)``, ``nonce`` ``(B, 3)`` and ``counter`` ``(B,)``, all
    32-bit words. Returns ``(B, 64)`` keystream octets.
    """
    _check_rounds(rounds)
    key = np.asarray(key, dtype=np.uint32).reshape(-1, 8)
    nonce = np.asarray(nonce, dtype=np.uint32).reshape(-1, 3)
    counter = np.asarray(counter, dtype=np.uint32).reshape(-1)
    batch = key.shape[0]

    init = np.empty((16, batch), dtype=np.uint32)
    init[0:4] = np.array(ARX_CONSTANTS, dtype=np.uint32)[:, None]
    init[4:12] = key.T
    init[12] = counter
    init[13:16] = nonce.T

    s = [init[i].copy() for i in range(16)]
    for _ in range(rounds // 2):
        _quarter_round(s, 0, 4, 8, 12)
        _quarter_round(s, 1, 5, 9, 13)
        _quarter_round(s, 2, 6, 10, 14)
        _quarter_round(s, 3, 7, 11, 15)
        _quarter_round(s, 0, 5, 10, 15)
        _quarter_round(s, 1, 6, 11, 12)
        _quarter_round(s, 2, 7, 8, 13)
        _quarter_round(s, 3, 4, 9, 14)

    out = np.stack(s, axis=1) + init.T
    return out.astype("<u4").view(np.uint8).reshape(batch, 64)


def arx_block(key, nonce, counter: int, rounds: int = 20) -> bytes:
    """One 64-octet keystream block.

    ``key`` and ``nonce`` may be given as bytes (32 and 12 octets, read as
    little-endian words) or as sequences of 8 and 3 words.
    """
    _check_rounds(rounds)
    if isinstance(key, (bytes, bytearray)):
        if len(key) != 32:
            raise InvalidArgumentError("key must be 32 octets")
        key = np.frombuffer(bytes(key), dtype="<u4")
    if isinstance(nonce, (bytes, bytearray)):
        if len(nonce) != 12:
            raise InvalidArgumentError("nonce must be 12 octets")
        nonce = np.frombuffer(bytes(nonce), dtype="<u4")
    key = np.asarray(key, dtype=np.uint64)
    nonce = np.asarray(nonce, dtype=np.uint64)
    if key.shape != (8,) or nonce.shape != (3,):
        raise InvalidArgumentError("key needs 8 words and nonce 3 words")
    if (key >> np.uint64(32)).any() or (nonce >> np.uint64(32)).any() or not 0 <= counter < 1 << 32:
        raise InvalidArgumentError("key, nonce and counter words must fit 32 bits")
    return arx_blocks(key[None], nonce[None], np.array([counter]), rounds)[0].tobytes()


# ---------------------------------------------------------------------------
# per-sequence key material


def derive_key_nonce(master_seed: int, indices: np.ndarray):
    """Key ``(B, 8)`` and nonce ``(B, 3)`` words for sequence ``indices``."""
    seed = np.uint64(master_seed)
    idx = np.asarray(indices, dtype=np.uint64)[:, None]
    j8 = np.arange(8, dtype=np.uint64)[None, :]
    j3 = np.arange(3, dtype=np.uint64)[None, :]
    key = mix64(seed ^ (idx * np.uint64(8) + j8)) & np.uint64(0xFFFFFFFF)
    nonce = mix64(seed + idx + j3) & np.uint64(0xFFFFFFFF)
    return key.astype(np.uint32), nonce.astype(np.uint32)


def _gen_arx(rounds: int, master_seed: int, indices: np.ndarray, nbytes: int) -> np.ndarray:
    nblocks = -(-nbytes // 64)
    key, nonce = derive_key_nonce(master_seed, indices)
    rows = len(indices)
    key = np.repeat(key, nblocks, axis=0)
    nonce = np.repeat(nonce, nblocks, axis=0)
    counter = np.tile(np.arange(nblocks, dtype=np.uint32), rows)
    stream = arx_blocks(key, nonce, counter, rounds).reshape(rows, nblocks * 64)
    return stream[:, :nbytes]


def _gen_lcg(spec: Lcg, master_seed: int, indices: np.ndarray, n: int) -> np.ndarray:
    bps = spec.bits_per_step
    steps = -(-n // bps)
    seed = np.uint64(master_seed)
    state = mix64(seed + np.asarray(indices, dtype=np.uint64)) % np.uint64(spec.modulus)
    states = np.empty((len(indices), steps), dtype=np.uint64)
    for t in range(steps):
        state = spec.step(state)
        states[:, t] = state
    shifts = np.arange(bps - 1, -1, -1, dtype=np.uint64)
    bits = ((states[:, :, None] >> shifts) & np.uint64(1)).astype(np.uint8)
    return bits.reshape(len(indices), steps * bps)[:, :n]


def _gen_biased(p_one: float, master_seed: int, indices: np.ndarray, n: int) -> np.ndarray:
    stream_key = mix64(np.uint64(master_seed) + np.asarray(indices, dtype=np.uint64))
    draws = mix64(stream_key[:, None] + np.arange(n, dtype=np.uint64)[None, :])
    # 53 high bits give an exact double in [0, 1)
    u = (draws >> np.uint64(11)).astype(np.float64) * 2.0**-53
    return (u < p_one).astype(np.uint8)


_ROW_CHUNK = 256


def generate_packed(spec: GeneratorSpec, master_seed: int, indices, length_bits: int) -> np.ndarray:
    """Packed ``(len(indices), ceil(n/8))`` octets for the given sequence ordinals."""
    spec.validate()
    if not isinstance(length_bits, (int, np.integer)) or length_bits < 1:
        raise InvalidSpecError(f"length_bits must be >= 1, got {length_bits!r}")
    if not 0 <= master_seed <= MASK64:
        raise InvalidSpecError("master seed must be an unsigned 64-bit integer")
    indices = np.asarray(indices, dtype=np.uint64).reshape(-1)
    nbytes = (length_bits + 7) // 8
    out = np.empty((len(indices), nbytes), dtype=np.uint8)
    for lo in range(0, len(indices), _ROW_CHUNK):
        idx = indices[lo:lo + _ROW_CHUNK]
        if isinstance(spec, (ArxKeystream, UniformRef)):
            chunk = _gen_arx(spec.rounds, master_seed, idx, nbytes)
            pad = 8 * nbytes - length_bits
            if pad:
                chunk = chunk.copy()
                chunk[:, -1] &= np.uint8((0xFF << pad) & 0xFF)
        elif isinstance(spec, Lcg):
            chunk = pack_bits(_gen_lcg(spec, master_seed, idx, length_bits))
        elif isinstance(spec, BiasedBits):
            chunk = pack_bits(_gen_biased(float(spec.p_one), master_seed, idx, length_bits))
        else:
            raise InvalidSpecError(f"unknown generator spec {spec!r}")
        out[lo:lo + len(idx)] = chunk
    return out


def generate_sequence(spec: GeneratorSpec, master_seed: int, index: int, length_bits: int) -> BitSequence:
    packed = generate_packed(spec, master_seed, [index], length_bits)
    return BitSequence(int(length_bits), packed[0].tobytes())


# ---------------------------------------------------------------------------
# corpora


class Corpus:
    """An ordered set of equal-length sequences from one generator and seed.

    Sequences are held packed in a read-only ``(count, ceil(n/8))`` array;
    :attr:`sequences` materializes them as :class:`BitSequence` objects.
    """

    def __init__(self, spec: GeneratorSpec, master_seed: int, length_bits: int, packed: np.ndarray):
        packed = np.ascontiguousarray(packed, dtype=np.uint8)
        if packed.ndim != 2 or packed.shape[0] < 1:
            raise InvalidSpecError("a corpus needs at least one sequence")
        if packed.shape[1] != (length_bits + 7) // 8:
            raise InvalidArgumentError("packed rows do not match length_bits")
        packed.setflags(write=False)
        self.spec = spec
        self.master_seed = int(master_seed)
        self.length_bits = int(length_bits)
        self.packed = packed

    @property
    def count(self) -> int:
        return self.packed.shape[0]

    @property
    def sequences(self) -> list:
        return [BitSequence(self.length_bits, row.tobytes()) for row in self.packed]

    def __len__(self) -> int:
        return self.count

    def __getitem__(self, i: int) -> BitSequence:
        return BitSequence(self.length_bits, self.packed[i].tobytes())

    def __eq__(self, other) -> bool:
        if not isinstance(other, Corpus):
            return NotImplemented
        return (
            self.spec == other.spec
            and self.master_seed == other.master_seed
            and self.length_bits == other.length_bits
            and np.array_equal(self.packed, other.packed)
        )

    def to_bytes(self) -> bytes:
        return encode_corpus(self)

    def digest(self) -> str:
        return hashlib.sha256(self.to_bytes()).hexdigest()

    def identity(self) -> dict:
        return {
            "spec": spec_to_dict(self.spec),
            "master_seed": self.master_seed,
            "count": self.count,
            "length_bits": self.length_bits,
            "digest": self.digest(),
        }

    def __repr__(self) -> str:
        return (
            f"Corpus(spec={self.spec!r}, master_seed={self.master_seed}, "
            f"count={self.count}, length_bits={self.length_bits})"
        )


def generate_corpus(spec: GeneratorSpec, master_seed: int, count: int, length_bits: int) -> Corpus:
    if not isinstance(count, (int, np.integer)) or count < 1:
        raise InvalidSpecError(f"count must be >= 1, got {count!r}")
    if count >= 1 << 32:
        raise InvalidSpecError("count must fit an unsigned 32-bit integer")
    packed = generate_packed(spec, master_seed, np.arange(count, dtype=np.uint64), length_bits)
    return Corpus(spec, master_seed, length_bits, packed)


# ---------------------------------------------------------------------------
# binary corpus format

_HEADER = struct.Struct(">4sHB")
_TRAILER = struct.Struct(">QIQ")


def _encode_params(spec: GeneratorSpec) -> bytes:
    if isinstance(spec, ArxKeystream):
        return struct.pack(">B", spec.rounds)
    if isinstance(spec, Lcg):
        return struct.pack(">QQQB", spec.modulus, spec.multiplier, spec.increment, spec.bits_per_step)
    if isinstance(spec, BiasedBits):
        return struct.pack(">d", float(spec.p_one))
    if isinstance(spec, UniformRef):
        return b""
    raise InvalidSpecError(f"unknown generator spec {spec!r}")


def _decode_params(tag: int, buf: bytes, off: int):
    try:
        if tag == 1:
            (rounds,) = struct.unpack_from(">B", buf, off)
            return ArxKeystream(rounds=rounds), off + 1
        if tag == 2:
            mod, mul, inc, bps = struct.unpack_from(">QQQB", buf, off)
            return Lcg(bits_per_step=bps, modulus=mod, multiplier=mul, increment=inc), off + 25
        if tag == 3:
            (p,) = struct.unpack_from(">d", buf, off)
            return BiasedBits(p_one=p), off + 8
        if tag == 4:
            return UniformRef(), off
    except struct.error as exc:
        raise CorpusFormatError("truncated generator parameters") from exc
    raise CorpusFormatError(f"unknown generator tag {tag}")


def encode_corpus(corpus: Corpus) -> bytes:
    head = _HEADER.pack(MAGIC, FORMAT_VERSION, corpus.spec.tag)
    tail = _TRAILER.pack(corpus.master_seed, corpus.count, corpus.length_bits)
    return head + _encode_params(corpus.spec) + tail + corpus.packed.tobytes()


def decode_corpus(buf: bytes) -> Corpus:
    if len(buf) < _HEADER.size:
        raise CorpusFormatError("file too short for a corpus header")
    magic, version, tag = _HEADER.unpack_from(buf, 0)
    if magic != MAGIC:
        raise CorpusFormatError(f"bad magic {magic!r}")
    if version != FORMAT_VERSION:
        raise CorpusFormatError(f"unsupported corpus format version {version}")
    spec, off = _decode_params(tag, buf, _HEADER.size)
    try:
        spec.validate()
    except InvalidSpecError as exc:
        raise CorpusFormatError(f"invalid generator parameters: {exc}") from exc
    if len(buf) < off + _TRAILER.size:
        raise CorpusFormatError("truncated corpus header")
    seed, count, length_bits = _TRAILER.unpack_from(buf, off)
    off += _TRAILER.size
    if count < 1 or length_bits < 1:
        raise CorpusFormatError("corpus header declares an empty corpus")
    nbytes = (length_bits + 7) // 8
    if len(buf) != off + count * nbytes:
        raise CorpusFormatError(
            f"payload is {len(buf) - off} octets, expected {count * nbytes}"
        )
    packed = np.frombuffer(buf, dtype=np.uint8, offset=off).reshape(count, nbytes)
    pad = 8 * nbytes - length_bits
    if pad and (packed[:, -1] & ((1 << pad) - 1)).any():
        raise CorpusFormatError("non-zero pad bits in packed sequences")
    return Corpus(spec, seed, length_bits, packed)


def write_corpus(corpus: Corpus, path) -> str:
    """Write ``corpus`` to ``path``; returns the sha256 hex digest of the file."""
    data = encode_corpus(corpus)
    Path(path).write_bytes(data)
    return hashlib.sha256(data).hexdigest()


def read_corpus(path) -> Corpus:
    return decode_corpus(Path(path).read_bytes())
