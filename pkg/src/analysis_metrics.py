"""
Evaluation metrics for the image cipher.

Comparison metrics (PSNR, SSIM, NCC, BER, Pearson) take two equal-sized
GrayImages; entropy takes one. ``build_report`` assembles the full row:
quality of the decryption (original vs decrypted), entropies of all three
images, key sensitivity and the eavesdropping verdict.
"""

import json
import math
from dataclasses import asdict, dataclass, fields

import numpy as np

from chaos_maps import ChaosParams
from errors import ParameterError, ShapeError, UndefinedMetricError
from image_cipher import xor_transform

PEAK = 255.0
SSIM_C1 = (0.01 * PEAK) ** 2
SSIM_C2 = (0.03 * PEAK) ** 2


def _pair(a, b):
    if a.shape != b.shape:
        raise ShapeError(f"image dimensions differ: {a.width}x{a.height} vs {b.width}x{b.height}")
    return a.flat().astype(np.float64), b.flat().astype(np.float64)


def histogram(image):
    """Pixel counts for the 256 intensity levels."""
    return np.bincount(image.flat(), minlength=256)


def entropy(image):
    """Shannon entropy of the intensity histogram in bits per pixel."""
    p = histogram(image) / image.size
    p = p[p > 0]
    return float(-np.sum(p * np.log2(p))) + 0.0


def psnr(a, b):
    """Peak signal-to-noise ratio in dB; ``inf`` for identical images."""
    x, y = _pair(a, b)
    mse = float(np.mean((x - y) ** 2))
    if mse == 0.0:
        return math.inf
    return 10.0 * math.log10(PEAK**2 / mse)


def ssim(a, b):
    """Global (single-window) SSIM with population statistics."""
    x, y = _pair(a, b)
    if x.size < 2:
        raise ParameterError("SSIM needs at least 2 pixels")
    mu_x, mu_y = x.mean(), y.mean()
    var_x = np.mean((x - mu_x) ** 2)
    var_y = np.mean((y - mu_y) ** 2)
    cov = np.mean((x - mu_x) * (y - mu_y))
    num = (2 * mu_x * mu_y + SSIM_C1) * (2 * cov + SSIM_C2)
    den = (mu_x**2 + mu_y**2 + SSIM_C1) * (var_x + var_y + SSIM_C2)
    return float(num / den)


def ncc(a, b):
    """Zero-lag normalized cross-correlation (no mean subtraction)."""
    x, y = _pair(a, b)
    energy_x, energy_y = np.dot(x, x), np.dot(y, y)
    if energy_x == 0 or energy_y == 0:
        raise UndefinedMetricError("NCC is undefined for an all-zero image")
    return float(np.dot(x, y) / math.sqrt(energy_x * energy_y))


def ber(a, b):
    """Fraction of differing bits across all 8-bit pixels."""
    if a.shape != b.shape:
        raise ShapeError(f"image dimensions differ: {a.width}x{a.height} vs {b.width}x{b.height}")
    differing = np.unpackbits(a.flat() ^ b.flat()).sum()
    return float(differing) / (8 * a.size)


def pearson_correlation(a, b):
    """Pearson coefficient over pixel pairs.

    Two equal constant images correlate perfectly (1.0); a single constant
    image makes the coefficient undefined.
    """
    x, y = _pair(a, b)
    dx, dy = x - x.mean(), y - y.mean()
    sxx, syy = np.dot(dx, dx), np.dot(dy, dy)
    if sxx == 0 and syy == 0:
        if np.array_equal(x, y):
            return 1.0
        raise UndefinedMetricError("Pearson correlation of two different constant images")
    if sxx == 0 or syy == 0:
        raise UndefinedMetricError("Pearson correlation is undefined against a constant image")
    return float(np.dot(dx, dy) / math.sqrt(sxx * syy))


def key_sensitivity(original, key, params, flip_index):
    """SSIM between the original and a decryption under a one-bit-wrong key."""
    if not 0 <= flip_index < key.length:
        raise ParameterError(f"flip index {flip_index} outside key of length {key.length}")
    params = params or ChaosParams()
    encrypted = xor_transform(original, key, params)
    wrongly_decrypted = xor_transform(encrypted, key.flip(flip_index), params)
    return ssim(original, wrongly_decrypted)


@dataclass(frozen=True)
class MetricsReport:
    entropy_original: float
    entropy_encrypted: float
    entropy_decrypted: float
    psnr: float
    ssim: float
    ncc: float
    ber: float
    pearson_od: float
    key_sensitivity_ssim: float
    eavesdrop_detected: bool

    def to_dict(self):
        data = asdict(self)
        if math.isinf(self.psnr):
            data["psnr"] = "inf"
        return data

    @classmethod
    def from_dict(cls, data):
        values = {}
        for f in fields(cls):
            if f.name not in data:
                raise ParameterError(f"report is missing {f.name}")
            values[f.name] = data[f.name]
        values["psnr"] = float(values["psnr"])
        values["eavesdrop_detected"] = bool(values["eavesdrop_detected"])
        return cls(**values)

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2) + "\n"

    @classmethod
    def from_json(cls, text):
        return cls.from_dict(json.loads(text))

    def to_table(self):
        """Human-readable two-column table."""
        rows = [
            ("PSNR (dB)", "inf" if math.isinf(self.psnr) else f"{self.psnr:.4f}"),
            ("SSIM", f"{self.ssim:.4f}"),
            ("NCC", f"{self.ncc:.4f}"),
            ("BER", f"{self.ber:.4f}"),
            ("Key sensitivity (SSIM)", f"{self.key_sensitivity_ssim:.4f}"),
            ("Entropy original", f"{self.entropy_original:.4f}"),
            ("Entropy encrypted", f"{self.entropy_encrypted:.4f}"),
            ("Entropy decrypted", f"{self.entropy_decrypted:.4f}"),
            ("Correlation (O & D)", f"{self.pearson_od:.4f}"),
            ("Eavesdropping detected", "Yes" if self.eavesdrop_detected else "No"),
        ]
        width = max(len(name) for name, _ in rows)
        return "\n".join(f"{name:<{width}}  {value}" for name, value in rows)


def defined_or_nan(metric, *args):
    """``metric(*args)``, or NaN when the metric is undefined for these images."""
    try:
        return metric(*args)
    except (UndefinedMetricError, ParameterError):
        return math.nan


def build_report(original, encrypted, decrypted, session, sensitivity, strict=True):
    """Assemble a MetricsReport; comparison metrics use (original, decrypted).

    ``session`` is a QkdSession or SessionStats (anything with
    ``eavesdrop_detected``), or None when no QKD session is involved.
    With ``strict=False`` a metric that is undefined for the images (NCC of
    an all-zero image, SSIM of a single pixel) is recorded as NaN instead of
    raising.
    """
    if not (original.shape == encrypted.shape == decrypted.shape):
        raise ShapeError("original, encrypted and decrypted images differ in size")

    def measure(metric, *args):
        return metric(*args) if strict else defined_or_nan(metric, *args)

    return MetricsReport(
        entropy_original=entropy(original),
        entropy_encrypted=entropy(encrypted),
        entropy_decrypted=entropy(decrypted),
        psnr=psnr(original, decrypted),
        ssim=measure(ssim, original, decrypted),
        ncc=measure(ncc, original, decrypted),
        ber=ber(original, decrypted),
        pearson_od=measure(pearson_correlation, original, decrypted),
        key_sensitivity_ssim=float(sensitivity),
        eavesdrop_detected=bool(session.eavesdrop_detected) if session is not None else False,
    )
