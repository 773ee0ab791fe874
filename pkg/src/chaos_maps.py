"""
Chaotic maps and the keystreams derived from them.

Four maps drive the cipher:

    Logistic:  x' = r * x * (1 - x)
    Henon:     x' = 1 - a * x**2 + y,  y' = b * x
    Tent:      x' = r * x if x < 0.5 else r * (1 - x)
    Arnold:    x' = (x + a * y) mod 1,  y' = (b * x + y) mod 1

Decryption regenerates the exact keystream used for encryption, so every orbit
is computed in plain Python floats (IEEE-754 binary64, round-to-nearest-even,
no fused multiply-add) with a fixed evaluation order.
"""

import hashlib
import json
import math
import warnings
from dataclasses import asdict, dataclass, fields

import numpy as np

from errors import (
    DegenerateLayerWarning,
    DivergenceError,
    KeyLengthError,
    KeystreamLengthError,
    ParameterError,
)

LAYER_ORDER = ("logistic", "henon", "tent", "arnold")

DEFAULT_BURN_IN = 1024
# r = 0.5 collapses every tent orbit to 0; 1.9999 keeps the map chaotic.
DEFAULT_TENT_R = 1.9999
HENON_ESCAPE = 10.0
MIN_SEED_KEY_BITS = 128
SEED_KEY_BITS = 256


@dataclass(frozen=True)
class ChaosParams:
    logistic_r: float = 3.99
    henon_a: float = 1.4
    henon_b: float = 0.3
    tent_r: float = DEFAULT_TENT_R
    arnold_a: float = 1.0
    arnold_b: float = 1.0
    burn_in: int = DEFAULT_BURN_IN
    # The singular form (a = b = 1, y' = x + y) reduces to the doubling map,
    # which reaches 0 exactly in binary floating point; the cipher defaults to
    # the area-preserving cat form.
    arnold_area_preserving: bool = True

    def __post_init__(self):
        if not 0.0 < self.logistic_r <= 4.0:
            raise ParameterError(f"logistic_r must be in (0, 4], got {self.logistic_r}")
        if not 0.0 < self.tent_r <= 2.0:
            raise ParameterError(f"tent_r must be in (0, 2], got {self.tent_r}")
        if self.burn_in < 0:
            raise ParameterError(f"burn_in must be >= 0, got {self.burn_in}")

    @classmethod
    def from_dict(cls, overrides):
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(overrides) - known)
        if unknown:
            raise ParameterError(
                f"unknown chaos parameter(s): {', '.join(unknown)}",
                hint=f"valid names: {', '.join(sorted(known))}",
            )
        return cls(**overrides)

    def fingerprint(self):
        canonical = json.dumps(asdict(self), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode("ascii")).hexdigest()


@dataclass(frozen=True)
class ChaosSeeds:
    logistic_x0: float
    henon_x0: float
    henon_y0: float
    tent_x0: float
    arnold_x0: float
    arnold_y0: float

    def __post_init__(self):
        for f in fields(self):
            value = getattr(self, f.name)
            if not 0.0 < value < 1.0:
                raise ParameterError(f"{f.name} must lie strictly inside (0, 1), got {value}")


@dataclass(frozen=True, eq=False)
class Keystream:
    data: np.ndarray
    origin: str

    def __len__(self):
        return int(self.data.size)


def _require_count(n):
    if n < 1:
        raise ParameterError(f"sequence length must be at least 1, got {n}")


def logistic_sequence(x0, r, n):
    """x_1..x_n of the logistic map."""
    if not 0.0 < x0 < 1.0:
        raise ParameterError(f"logistic x0 must be in (0, 1), got {x0}")
    if not 0.0 < r <= 4.0:
        raise ParameterError(f"logistic r must be in (0, 4], got {r}")
    _require_count(n)
    out = [0.0] * n
    x = float(x0)
    for i in range(n):
        x = r * x * (1.0 - x)
        out[i] = x
    return out


def _henon_orbit(x0, y0, a, b, n):
    xs = [0.0] * n
    ys = [0.0] * n
    x, y = float(x0), float(y0)
    for i in range(n):
        x, y = 1.0 - a * (x * x) + y, b * x
        if x > HENON_ESCAPE or x < -HENON_ESCAPE:
            raise DivergenceError(
                f"Henon orbit diverged at iteration {i + 1} (x = {x!r})",
                iteration=i + 1,
                hint="start inside the attractor basin (|x0| <= 1.5, |y0| <= 0.5)",
            )
        xs[i] = x
        ys[i] = y
    return xs, ys


def henon_sequence(x0, y0, a, b, n):
    """(x_1, y_1)..(x_n, y_n) of the Henon map; |x| > 10 is reported as divergence."""
    if abs(x0) > 1.5 or abs(y0) > 0.5:
        raise ParameterError(f"Henon start ({x0}, {y0}) outside |x0| <= 1.5, |y0| <= 0.5")
    _require_count(n)
    return list(zip(*_henon_orbit(x0, y0, a, b, n)))


def _tent_orbit(x0, r, n):
    out = [0.0] * n
    x = float(x0)
    for i in range(n):
        x = r * x if x < 0.5 else r * (1.0 - x)
        out[i] = x
    return out


def tent_sequence(x0, r, n):
    if not 0.0 <= x0 <= 1.0:
        raise ParameterError(f"tent x0 must be in [0, 1], got {x0}")
    if r <= 0.0:
        raise ParameterError(f"tent r must be positive, got {r}")
    _require_count(n)
    return _tent_orbit(x0, r, n)


def _arnold_orbit(x0, y0, a, b, n, area_preserving=False):
    xs = [0.0] * n
    ys = [0.0] * n
    x, y = float(x0), float(y0)
    d = a * b + 1.0 if area_preserving else 1.0
    for i in range(n):
        x, y = (x + a * y) % 1.0, (b * x + d * y) % 1.0
        xs[i] = x
        ys[i] = y
    return xs, ys


def arnold_sequence(x0, y0, a, b, n, area_preserving=False):
    """Orbit of the Arnold map reduced mod 1.

    The default is the singular form y' = (b*x + y) mod 1; ``area_preserving``
    selects the cat map y' = (b*x + (a*b + 1)*y) mod 1.
    """
    if not (0.0 <= x0 < 1.0 and 0.0 <= y0 < 1.0):
        raise ParameterError(f"Arnold start ({x0}, {y0}) must lie in [0, 1)^2")
    _require_count(n)
    return list(zip(*_arnold_orbit(x0, y0, a, b, n, area_preserving)))


def whiten(values):
    """Map reals to bytes: floor(frac(|x| * 1e6) * 256), clamped to [0, 255]."""
    scaled = np.abs(np.asarray(values, dtype=np.float64)) * 1e6
    frac = scaled - np.floor(scaled)
    return np.clip(np.floor(frac * 256.0), 0, 255).astype(np.uint8)


def derive_keystream(trajectory, n, burn_in, origin="trajectory"):
    """Bytes from the n values following the first ``burn_in`` of a trajectory.

    2-D trajectories (sequences of pairs) contribute their x-coordinate.
    """
    if n < 0 or burn_in < 0:
        raise ParameterError("keystream length and burn-in must be non-negative")
    if len(trajectory) < burn_in + n:
        raise KeystreamLengthError(
            f"trajectory of length {len(trajectory)} is shorter than burn-in {burn_in} + {n}"
        )
    window = np.asarray(trajectory[burn_in : burn_in + n], dtype=np.float64)
    if window.ndim == 2:
        window = window[:, 0]
    return Keystream(data=whiten(window), origin=origin)


def _rotl64(word, shift):
    shift %= 64
    return ((word << shift) | (word >> (64 - shift))) & 0xFFFFFFFFFFFFFFFF


def _word_to_seed(word):
    # A double holds 53 significant bits: fold the 11 lowest bits into the top
    # so every key bit still moves the seed.
    word ^= (word & 0x7FF) << 53
    seed = (2 * word + 1) / 2**65
    return min(seed, math.nextafter(1.0, 0.0))


def derive_seeds(key):
    """Expand a key of at least 128 bits into the six map seeds.

    The key is zero-padded to a multiple of 256 bits, and the 256-bit blocks are
    XOR-folded into one before it is split into four 64-bit chunks c_0..c_3.
    Word i = c_(i mod 4) XOR rotl(c_((i+1) mod 4), 8(i+1)) for i = 0..5. Each
    word then has its 11 low bits XOR-ed into its top 11 bits, and
    seed_i = (2 word_i + 1) / 2**65, clamped below 1.0. A tent seed of exactly
    0.5 is nudged by 2**-32.
    """
    if key.length < MIN_SEED_KEY_BITS:
        raise KeyLengthError(
            f"key has {key.length} bits, at least {MIN_SEED_KEY_BITS} are needed",
            hint="generate a longer key (default 256 bits)",
        )
    blocks = math.ceil(key.length / SEED_KEY_BITS)
    bits = np.zeros(blocks * SEED_KEY_BITS, dtype=np.uint8)
    bits[: key.length] = key.bits
    folded = np.bitwise_xor.reduce(bits.reshape(blocks, SEED_KEY_BITS), axis=0)
    packed = np.packbits(folded).tobytes()
    chunks = [int.from_bytes(packed[8 * i : 8 * i + 8], "big") for i in range(4)]

    words = [chunks[i % 4] ^ _rotl64(chunks[(i + 1) % 4], 8 * (i + 1)) for i in range(6)]
    seeds = [_word_to_seed(w) for w in words]
    if seeds[3] == 0.5:
        seeds[3] += 2.0**-32
    return ChaosSeeds(*seeds)


def _layer_trajectory(layer, seeds, params, count):
    if layer == "logistic":
        return logistic_sequence(seeds.logistic_x0, params.logistic_r, count)
    if layer == "henon":
        # (x0, (y0 - 0.5) / 4) lies in the Henon trapping region
        xs, _ = _henon_orbit(seeds.henon_x0, (seeds.henon_y0 - 0.5) * 0.25, params.henon_a, params.henon_b, count)
        return xs
    if layer == "tent":
        return _tent_orbit(seeds.tent_x0, params.tent_r, count)
    if layer == "arnold":
        xs, _ = _arnold_orbit(
            seeds.arnold_x0,
            seeds.arnold_y0,
            params.arnold_a,
            params.arnold_b,
            count,
            params.arnold_area_preserving,
        )
        return xs
    raise ParameterError(f"unknown layer {layer!r}", hint=f"choose from {', '.join(LAYER_ORDER)}")


def generate_keystreams(seeds, params, n, layers=LAYER_ORDER):
    """One keystream of length n per requested layer, in the order given."""
    _require_count(n)
    tent_collapses = params.tent_r <= 1.0 and "tent" in layers
    if tent_collapses:
        warnings.warn(
            f"tent_r = {params.tent_r} is not chaotic; the tent layer collapses to a constant",
            DegenerateLayerWarning,
            stacklevel=2,
        )
    streams = {}
    for layer in layers:
        trajectory = _layer_trajectory(layer, seeds, params, params.burn_in + n)
        stream = derive_keystream(trajectory, n, params.burn_in, origin=layer)
        already_warned = layer == "tent" and tent_collapses
        if n > 1 and not already_warned and np.all(stream.data == stream.data[0]):
            warnings.warn(
                f"{layer} keystream is constant ({int(stream.data[0])}) after burn-in",
                DegenerateLayerWarning,
                stacklevel=2,
            )
        streams[layer] = stream
    return streams
