"""
Simulated E91 quantum key distribution.

Keys are random bit strings sent over a noisy channel; the sender and receiver
detect eavesdropping by comparing part of their sifted keys against an
agreement threshold. A full E91 session simulates singlet pairs measured at
random angles, sifts the matching-angle rounds into key bits and estimates the
CHSH statistic from the remaining rounds.

Singlet statistics: joint +-1 outcomes with E(a, b) = -cos(a - b).
"""

import hashlib
import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
import pandas as pd

from atomic_io import atomic_write_text
from errors import (
    InsufficientDataError,
    ParameterError,
    PathError,
    SessionError,
    ShapeError,
)

# Measurement angles (radians). Rounds where Alice uses index 1 and Bob index 0
# (both pi/4), or Alice 2 and Bob 1 (both pi/2), are key rounds.
ALICE_ANGLES = np.array([0.0, math.pi / 4, math.pi / 2])
BOB_ANGLES = np.array([math.pi / 4, math.pi / 2, 3 * math.pi / 4])
KEY_ROUNDS = ((1, 0), (2, 1))

# The intercept-resend attacker measures along one of the four angles used by
# either party; this gives 25% key error on both key-round kinds.
EVE_ANGLES = np.array([0.0, math.pi / 4, math.pi / 2, 3 * math.pi / 4])

# CHSH estimator cells as (alice index, bob index, sign):
# S = E(a1, b1) - E(a1, b3) + E(a3, b1) + E(a3, b3)
CHSH_CELLS = ((0, 0, 1.0), (0, 2, -1.0), (2, 0, 1.0), (2, 2, 1.0))

EAVESDROPPERS = ("none", "intercept_resend")
DEFAULT_THRESHOLD = 0.80
SACRIFICE_FRACTION = 0.25
MIN_PAIRS = 16
KEY_FILE_VERSION = 1


@dataclass(frozen=True, eq=False)
class BitKey:
    """An ordered, non-empty sequence of bits."""

    bits: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.bits)
        if arr.ndim != 1 or arr.size == 0:
            raise ParameterError("a key needs at least one bit")
        if not np.isin(arr, (0, 1)).all():
            raise ParameterError("key bits must be 0 or 1")
        arr = arr.astype(np.uint8)
        arr.flags.writeable = False
        object.__setattr__(self, "bits", arr)

    @property
    def length(self):
        return int(self.bits.size)

    def __len__(self):
        return self.length

    def __eq__(self, other):
        if not isinstance(other, BitKey):
            return NotImplemented
        return self.length == other.length and bool(np.array_equal(self.bits, other.bits))

    __hash__ = None

    @classmethod
    def from_string(cls, text):
        text = text.strip()
        if not text or set(text) - {"0", "1"}:
            raise ParameterError(f"not a bit string: {text!r}")
        return cls(np.frombuffer(text.encode("ascii"), dtype=np.uint8) - ord("0"))

    def to_string(self):
        return "".join("1" if b else "0" for b in self.bits)

    def to_hex(self):
        """Big-endian hex; the last byte is zero-padded on the right."""
        return np.packbits(self.bits).tobytes().hex()

    @classmethod
    def from_hex(cls, bits_hex, length):
        try:
            raw = np.frombuffer(bytes.fromhex(bits_hex), dtype=np.uint8)
        except ValueError as exc:
            raise ParameterError(f"bad key hex: {exc}") from exc
        bits = np.unpackbits(raw)
        if length < 1 or length > bits.size:
            raise ParameterError(
                f"key length {length} does not fit in {bits.size} hex-encoded bits"
            )
        return cls(bits[:length])

    def to_bytes(self):
        """Whole bytes of the key, most significant bit first; a trailing partial byte is dropped."""
        usable = (self.length // 8) * 8
        return np.packbits(self.bits[:usable]).tobytes()

    def flip(self, index):
        if not 0 <= index < self.length:
            raise ParameterError(f"bit index {index} outside key of length {self.length}")
        bits = self.bits.copy()
        bits[index] ^= 1
        return BitKey(bits)

    def key_id(self):
        digest = hashlib.sha256(f"{self.length}:{self.to_hex()}".encode("ascii"))
        return digest.hexdigest()[:16]


@dataclass(frozen=True)
class ChannelConfig:
    p_noise: float = 0.0
    eavesdropper: str = "none"
    detection_threshold: float = DEFAULT_THRESHOLD

    def __post_init__(self):
        if not 0.0 <= self.p_noise <= 1.0:
            raise ParameterError(f"p_noise must be in [0, 1], got {self.p_noise}")
        eve = self.eavesdropper.replace("-", "_")
        if eve not in EAVESDROPPERS:
            raise ParameterError(
                f"unknown eavesdropper {self.eavesdropper!r}",
                hint="use none or intercept-resend",
            )
        object.__setattr__(self, "eavesdropper", eve)
        if not 0.0 < self.detection_threshold <= 1.0:
            raise ParameterError(
                f"detection threshold must be in (0, 1], got {self.detection_threshold}"
            )


@dataclass(frozen=True)
class SessionStats:
    """Scalar summary of a session, as stored in key files and reports."""

    pair_count: int
    sifted_length: int
    test_length: int
    agreement: float
    chsh_s: float
    eavesdrop_detected: bool
    p_noise: float
    eavesdropper: str
    detection_threshold: float
    sacrifice_fraction: float

    @classmethod
    def from_dict(cls, data):
        try:
            return cls(**{name: data[name] for name in cls.__dataclass_fields__})
        except KeyError as exc:
            raise ParameterError(f"session stats missing field {exc}") from exc


@dataclass(frozen=True, eq=False)
class QkdSession:
    pair_count: int
    alice_angles: np.ndarray
    bob_angles: np.ndarray
    alice_outcomes: np.ndarray
    bob_outcomes: np.ndarray
    sifted_key_alice: BitKey
    sifted_key_bob: BitKey
    agreement: float
    chsh_s: float
    eavesdrop_detected: bool
    test_positions: np.ndarray = field(default_factory=lambda: np.empty(0, dtype=np.int64))
    config: ChannelConfig = field(default_factory=ChannelConfig)
    sacrifice_fraction: float = SACRIFICE_FRACTION

    def stats(self):
        return SessionStats(
            pair_count=int(self.pair_count),
            sifted_length=self.sifted_key_alice.length,
            test_length=int(self.test_positions.size),
            agreement=float(self.agreement),
            chsh_s=float(self.chsh_s),
            eavesdrop_detected=bool(self.eavesdrop_detected),
            p_noise=float(self.config.p_noise),
            eavesdropper=self.config.eavesdropper,
            detection_threshold=float(self.config.detection_threshold),
            sacrifice_fraction=float(self.sacrifice_fraction),
        )


def generate_key(n, rng):
    """n independent uniform bits drawn from ``rng``."""
    if n < 1:
        raise ParameterError(f"key length must be at least 1, got {n}")
    return BitKey(rng.integers(0, 2, size=n, dtype=np.uint8))


def apply_channel_noise(key, p_noise, rng):
    """Flip each bit independently with probability ``p_noise``."""
    if not 0.0 <= p_noise <= 1.0:
        raise ParameterError(f"p_noise must be in [0, 1], got {p_noise}")
    flips = rng.random(key.length) < p_noise
    return BitKey(key.bits ^ flips.astype(np.uint8))


def bit_agreement(a, b):
    """Fraction of positions where the two keys hold the same bit."""
    if a.length != b.length:
        raise ShapeError(f"key lengths differ: {a.length} vs {b.length}")
    return float(np.mean(a.bits == b.bits))


def detect_eavesdropping(agreement, threshold):
    """True when agreement falls strictly below the threshold."""
    return agreement < threshold


def combine_keys(k, k1):
    """Bitwise XOR of two equal-length keys."""
    if k.length != k1.length:
        raise ShapeError(
            f"cannot combine keys of length {k.length} and {k1.length}",
            hint="generate the quantum key with the classical key's length",
        )
    return BitKey(k.bits ^ k1.bits)


def _chsh_from_outcomes(alice_angles, bob_angles, alice_outcomes, bob_outcomes):
    products = alice_outcomes.astype(np.int64) * bob_outcomes.astype(np.int64)
    s = 0.0
    for a_idx, b_idx, sign in CHSH_CELLS:
        cell = (alice_angles == a_idx) & (bob_angles == b_idx)
        if not cell.any():
            raise InsufficientDataError(
                f"no samples for CHSH cell (a{a_idx + 1}, b{b_idx + 1})",
                hint="increase the number of pairs",
            )
        s += sign * float(np.mean(products[cell]))
    return s


def chsh_statistic(session):
    """CHSH S from the empirical outcome-product means of the estimator rounds.

    For an ideal singlet session S tends to -2*sqrt(2) under this sign
    convention; classical or attacked sessions satisfy |S| <= 2.
    """
    return _chsh_from_outcomes(
        np.asarray(session.alice_angles),
        np.asarray(session.bob_angles),
        np.asarray(session.alice_outcomes),
        np.asarray(session.bob_outcomes),
    )


def run_e91_session(pair_count, config, rng, sacrifice_fraction=SACRIFICE_FRACTION):
    """Simulate one E91 run over ``pair_count`` singlet pairs.

    Channel noise flips Bob's outcome with probability ``config.p_noise``. An
    intercept-resend eavesdropper measures Bob's half of every pair and
    forwards a freshly prepared qubit, so Alice and Bob no longer share
    entanglement. A random ``sacrifice_fraction`` of the sifted bits is
    compared publicly; the session's agreement and verdict come from that
    subset.

    Parameters
    ----------
    pair_count : int
        Number of singlet pairs, at least MIN_PAIRS
    config : ChannelConfig
        Noise, eavesdropper and detection threshold
    rng : numpy.random.Generator
        Source of bases, outcomes and the sacrificed subset
    sacrifice_fraction : float
        Share of sifted bits disclosed for the agreement estimate, in [0, 1)

    Returns
    -------
    QkdSession
        Bases, outcomes, sifted keys, agreement, CHSH statistic and verdict

    Raises
    ------
    ParameterError
        When pair_count or sacrifice_fraction is out of range
    SessionError
        When a CHSH cell or the sifted key is empty
    """
    if pair_count < MIN_PAIRS:
        raise ParameterError(f"an E91 session needs at least {MIN_PAIRS} pairs")
    if not 0.0 <= sacrifice_fraction < 1.0:
        raise ParameterError(f"sacrifice fraction must be in [0, 1), got {sacrifice_fraction}")

    n = int(pair_count)
    alice_idx = rng.integers(0, len(ALICE_ANGLES), size=n)
    bob_idx = rng.integers(0, len(BOB_ANGLES), size=n)
    theta_a = ALICE_ANGLES[alice_idx]
    theta_b = BOB_ANGLES[bob_idx]

    alice = np.where(rng.random(n) < 0.5, 1, -1).astype(np.int8)
    if config.eavesdropper == "intercept_resend":
        theta_e = EVE_ANGLES[rng.integers(0, len(EVE_ANGLES), size=n)]
        eve = np.where(rng.random(n) < np.sin((theta_a - theta_e) / 2) ** 2, alice, -alice)
        bob = np.where(rng.random(n) < np.cos((theta_b - theta_e) / 2) ** 2, eve, -eve)
    else:
        p_same = np.sin((theta_a - theta_b) / 2) ** 2
        bob = np.where(rng.random(n) < p_same, alice, -alice)
    flips = rng.random(n) < config.p_noise
    bob = np.where(flips, -bob, bob).astype(np.int8)

    key_mask = np.zeros(n, dtype=bool)
    for a_idx, b_idx in KEY_ROUNDS:
        key_mask |= (alice_idx == a_idx) & (bob_idx == b_idx)
    sifted = int(key_mask.sum())
    if sifted == 0:
        raise SessionError(
            f"{n} pairs produced no key rounds",
            hint="about 2 in 9 pairs sift into key bits; increase --pairs",
        )
    # +1 -> 0, -1 -> 1; Bob's outcome is inverted first (singlet anti-correlation)
    alice_key = BitKey((alice[key_mask] == -1).astype(np.uint8))
    bob_key = BitKey((bob[key_mask] == 1).astype(np.uint8))

    test_count = math.ceil(sacrifice_fraction * sifted)
    if test_count:
        test_positions = np.sort(rng.permutation(sifted)[:test_count])
    else:
        test_positions = np.arange(sifted)
    agreement = float(np.mean(alice_key.bits[test_positions] == bob_key.bits[test_positions]))

    try:
        s = _chsh_from_outcomes(alice_idx, bob_idx, alice, bob)
    except InsufficientDataError as exc:
        raise SessionError(f"{n} pairs are too few for a CHSH estimate: {exc}", hint=exc.hint)

    return QkdSession(
        pair_count=n,
        alice_angles=alice_idx,
        bob_angles=bob_idx,
        alice_outcomes=alice,
        bob_outcomes=bob,
        sifted_key_alice=alice_key,
        sifted_key_bob=bob_key,
        agreement=agreement,
        chsh_s=s,
        eavesdrop_detected=detect_eavesdropping(agreement, config.detection_threshold),
        test_positions=test_positions,
        config=config,
        sacrifice_fraction=sacrifice_fraction,
    )


def key_material(session, length=None):
    """Alice's sifted bits that were not sacrificed, optionally truncated to ``length``."""
    keep = np.ones(session.sifted_key_alice.length, dtype=bool)
    if session.sacrifice_fraction > 0:
        keep[session.test_positions] = False
    bits = session.sifted_key_alice.bits[keep]
    if length is not None:
        if bits.size < length:
            raise SessionError(
                f"session left {bits.size} key bits, {length} requested",
                hint="increase the number of pairs",
            )
        bits = bits[:length]
    if bits.size == 0:
        raise SessionError("session left no key bits after the agreement test")
    return BitKey(bits)


def pairs_for_key(key_length, sacrifice_fraction=SACRIFICE_FRACTION, margin=1.25):
    """Pairs to request so a session very likely yields ``key_length`` key bits."""
    sifted_needed = math.ceil(key_length / (1.0 - sacrifice_fraction))
    return max(MIN_PAIRS, math.ceil(sifted_needed * 9 / 2 * margin))


def sweep_channel_noise(
    p_values,
    pair_count,
    eavesdropper="none",
    threshold=DEFAULT_THRESHOLD,
    seed=None,
):
    """Agreement, CHSH and verdict for a range of channel noise levels."""
    children = np.random.SeedSequence(seed).spawn(len(p_values))
    rows = []
    for p_noise, child in zip(p_values, children):
        config = ChannelConfig(p_noise=p_noise, eavesdropper=eavesdropper, detection_threshold=threshold)
        session = run_e91_session(pair_count, config, np.random.default_rng(child))
        rows.append(
            {
                "p_noise": p_noise,
                "eavesdropper": config.eavesdropper,
                "sifted_bits": session.sifted_key_alice.length,
                "agreement": session.agreement,
                "chsh_s": session.chsh_s,
                "abs_chsh": abs(session.chsh_s),
                "detected": session.eavesdrop_detected,
            }
        )
    return pd.DataFrame(rows)


@dataclass(frozen=True)
class KeyFile:
    key: BitKey
    created_with_seed: int | None = None
    session_stats: SessionStats | None = None


def write_key_file(path, key, created_with_seed=None, session_stats=None):
    document = {
        "version": KEY_FILE_VERSION,
        "bits_hex": key.to_hex(),
        "length": key.length,
        "key_id": key.key_id(),
        "created_with_seed": created_with_seed,
    }
    if session_stats is not None:
        document["session_stats"] = asdict(session_stats)
    return atomic_write_text(path, json.dumps(document, indent=2, sort_keys=True) + "\n")


def read_key_file(path):
    path = Path(path)
    if not path.exists():
        raise PathError(f"key file not found: {path}", hint="create one with keygen or qkd")
    try:
        document = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ParameterError(f"key file {path} is not valid JSON: {exc}") from exc
    if document.get("version") != KEY_FILE_VERSION:
        raise ParameterError(f"unsupported key file version {document.get('version')!r}")
    try:
        key = BitKey.from_hex(document["bits_hex"], int(document["length"]))
    except KeyError as exc:
        raise ParameterError(f"key file {path} is missing {exc}") from exc
    stats = document.get("session_stats")
    return KeyFile(
        key=key,
        created_with_seed=document.get("created_with_seed"),
        session_stats=SessionStats.from_dict(stats) if stats else None,
    )
