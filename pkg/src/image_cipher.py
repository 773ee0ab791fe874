"""
Layered XOR cipher over grayscale pixels.

Each of the four chaotic keystreams is XOR-ed onto the pixels:

    out[i] = in[i] ^ L[i] ^ H[i] ^ T[i] ^ A[i]

XOR is associative and commutative, so the layers are fused into one mask and
the transform is its own inverse: the same call encrypts and decrypts.
"""

import functools
from dataclasses import dataclass
from enum import Enum

import numpy as np

from chaos_maps import LAYER_ORDER, ChaosParams, derive_seeds, generate_keystreams
from errors import (
    CipherError,
    DivergenceError,
    KeyLengthError,
    KeyMismatchError,
    ParameterError,
    ShapeError,
)

MIN_MESSAGE_KEY_BITS = 8


@dataclass(frozen=True, eq=False)
class GrayImage:
    """8-bit grayscale raster; ``pixels`` has shape (height, width), row-major."""

    width: int
    height: int
    pixels: np.ndarray

    def __post_init__(self):
        if self.width < 1 or self.height < 1:
            raise ParameterError(f"image must be at least 1x1, got {self.width}x{self.height}")
        arr = np.asarray(self.pixels)
        if arr.size != self.width * self.height:
            raise ShapeError(
                f"{arr.size} pixels do not fill a {self.width}x{self.height} image"
            )
        if arr.dtype != np.uint8 and (arr.min() < 0 or arr.max() > 255):
            raise ParameterError("pixel values must be in [0, 255]")
        arr = np.array(arr.reshape(self.height, self.width), dtype=np.uint8)
        arr.flags.writeable = False
        object.__setattr__(self, "pixels", arr)

    @classmethod
    def from_array(cls, array):
        array = np.asarray(array)
        if array.ndim != 2:
            raise ShapeError(f"expected a 2-D array, got {array.ndim} dimensions")
        return cls(width=array.shape[1], height=array.shape[0], pixels=array)

    @property
    def size(self):
        return self.width * self.height

    @property
    def shape(self):
        return (self.height, self.width)

    def flat(self):
        return self.pixels.reshape(-1)

    def __eq__(self, other):
        if not isinstance(other, GrayImage):
            return NotImplemented
        return self.shape == other.shape and bool(np.array_equal(self.pixels, other.pixels))

    __hash__ = None


@dataclass(frozen=True)
class CipherEnvelope:
    """Ciphertext plus what is needed to check a decryption attempt; no secrets."""

    image: GrayImage
    params_fingerprint: str
    key_id: str
    layer_order: tuple = LAYER_ORDER

    def metadata(self):
        return {
            "width": self.image.width,
            "height": self.image.height,
            "params_fingerprint": self.params_fingerprint,
            "key_id": self.key_id,
            "layer_order": list(self.layer_order),
        }


class RoundTripVerdict(str, Enum):
    SUCCESS = "Decryption Successful"
    FAILED = "Decryption Failed"

    def __str__(self):
        return self.value


def combine_layers(streams):
    """Fuse keystreams into one byte mask by XOR."""
    arrays = [s.data if hasattr(s, "data") else np.asarray(s, dtype=np.uint8) for s in streams]
    if not arrays:
        raise ParameterError("at least one keystream is needed")
    return functools.reduce(np.bitwise_xor, arrays)


def apply_keystream(image, keystream):
    """XOR a byte mask onto the pixels in row-major order."""
    keystream = np.asarray(keystream, dtype=np.uint8)
    if keystream.size != image.size:
        raise ShapeError(f"keystream of {keystream.size} bytes for {image.size} pixels")
    return GrayImage(image.width, image.height, image.flat() ^ keystream)


def xor_transform(image, key, params=None, layers=LAYER_ORDER):
    """
    Encrypt or decrypt ``image`` with the keystreams seeded from ``key``.

    Every pixel is XOR-ed with one byte from each layer's keystream, so the
    same call decrypts a ciphertext and the layer order does not matter.

    Parameters
    ----------
    image : GrayImage
        Plaintext or ciphertext
    key : BitKey
        At least 128 bits; usually the classical key XOR the QKD key
    params : ChaosParams, optional
        Map parameters and burn-in; defaults to ``ChaosParams()``
    layers : sequence of str
        Subset of ``LAYER_ORDER`` to apply, e.g. ``("logistic",)`` for the
        single-map baseline

    Returns
    -------
    GrayImage
        Image of the same size

    Raises
    ------
    KeyLengthError
        When the key is shorter than 128 bits
    CipherError
        When a layer's orbit diverges; ``layer`` names it
    """
    params = params or ChaosParams()
    seeds = derive_seeds(key)
    streams = []
    for layer in layers:
        try:
            streams.extend(generate_keystreams(seeds, params, image.size, layers=(layer,)).values())
        except DivergenceError as exc:
            raise CipherError(f"{layer} layer failed: {exc}", layer=layer, hint=exc.hint) from exc
    return apply_keystream(image, combine_layers(streams))


encrypt_image = xor_transform
decrypt_image = xor_transform


def seal(image, key, params=None):
    """Encrypt and wrap the ciphertext with the parameter fingerprint and key id."""
    params = params or ChaosParams()
    return CipherEnvelope(
        image=xor_transform(image, key, params),
        params_fingerprint=params.fingerprint(),
        key_id=key.key_id(),
    )


def check_envelope(metadata, key, params=None):
    """Raise KeyMismatchError when envelope metadata does not match key or params."""
    params = params or ChaosParams()
    if metadata.get("key_id") != key.key_id():
        raise KeyMismatchError(
            "ciphertext was produced with a different key",
            hint="pass the key file that was used for encryption",
        )
    if metadata.get("params_fingerprint") != params.fingerprint():
        raise KeyMismatchError(
            "ciphertext was produced with different chaos parameters",
            hint="pass the same --params file used for encryption",
        )


def encrypt_message(message, combined_key):
    """XOR message bytes with the key bytes repeated cyclically."""
    if not message:
        raise ParameterError("message must not be empty")
    if combined_key.length < MIN_MESSAGE_KEY_BITS:
        raise KeyLengthError(
            f"message key has {combined_key.length} bits, at least {MIN_MESSAGE_KEY_BITS} needed"
        )
    data = np.frombuffer(bytes(message), dtype=np.uint8)
    pad = np.frombuffer(combined_key.to_bytes(), dtype=np.uint8)
    return (data ^ np.resize(pad, data.size)).tobytes()


decrypt_message = encrypt_message


def roundtrip_verify(original, decrypted):
    """Success iff both images (or byte strings) match exactly."""
    if isinstance(original, GrayImage) and isinstance(decrypted, GrayImage):
        same = original == decrypted
    elif isinstance(original, (bytes, bytearray)) and isinstance(decrypted, (bytes, bytearray)):
        same = bytes(original) == bytes(decrypted)
    else:
        same = False
    return RoundTripVerdict.SUCCESS if same else RoundTripVerdict.FAILED

