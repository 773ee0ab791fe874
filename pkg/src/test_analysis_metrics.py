"""Tests functions in analysis_metrics.py"""

import math

import numpy as np
import pytest

from analysis_metrics import (
    MetricsReport,
    ber,
    build_report,
    entropy,
    histogram,
    key_sensitivity,
    ncc,
    pearson_correlation,
    psnr,
    ssim,
)
from chaos_maps import ChaosParams
from create_sample_dataset import build_sample_images
from errors import ParameterError, ShapeError, UndefinedMetricError
from image_cipher import GrayImage, xor_transform
from qkd_sim import ChannelConfig, generate_key, run_e91_session


def _img(values):
    return GrayImage.from_array(np.asarray(values, dtype=np.uint8))


# Brute-force re-implementations over plain Python lists.


def _oracle_mse(a, b):
    return sum((int(x) - int(y)) ** 2 for x, y in zip(a, b)) / len(a)


def _oracle_psnr(a, b):
    return 10.0 * math.log10(255.0**2 / _oracle_mse(a, b))


def _oracle_stats(a, b):
    n = len(a)
    mu_a = sum(a) / n
    mu_b = sum(b) / n
    var_a = sum((x - mu_a) ** 2 for x in a) / n
    var_b = sum((y - mu_b) ** 2 for y in b) / n
    cov = sum((x - mu_a) * (y - mu_b) for x, y in zip(a, b)) / n
    return mu_a, mu_b, var_a, var_b, cov


def _oracle_ssim(a, b):
    c1, c2 = (0.01 * 255) ** 2, (0.03 * 255) ** 2
    mu_a, mu_b, var_a, var_b, cov = _oracle_stats(a, b)
    return ((2 * mu_a * mu_b + c1) * (2 * cov + c2)) / (
        (mu_a**2 + mu_b**2 + c1) * (var_a + var_b + c2)
    )


def _oracle_ncc(a, b):
    dot = sum(x * y for x, y in zip(a, b))
    return dot / math.sqrt(sum(x * x for x in a) * sum(y * y for y in b))


def _oracle_ber(a, b):
    return sum(bin(x ^ y).count("1") for x, y in zip(a, b)) / (8 * len(a))


def _oracle_pearson(a, b):
    _, _, var_a, var_b, cov = _oracle_stats(a, b)
    return cov / math.sqrt(var_a * var_b)


def _oracle_entropy(counts):
    total = sum(counts)
    return -sum(c / total * math.log2(c / total) for c in counts if c)


def test_entropy_unit_values():
    """Constant -> 0, every level once -> 8, two equal halves -> 1."""
    assert entropy(_img(np.full((4, 4), 9))) == pytest.approx(0.0, abs=1e-12)
    assert entropy(_img(np.arange(256).reshape(16, 16))) == pytest.approx(8.0, abs=1e-12)
    assert entropy(_img([[0, 0], [255, 255]])) == pytest.approx(1.0, abs=1e-12)


def test_entropy_ignores_pixel_order():
    """Entropy depends only on the histogram."""
    rng = np.random.default_rng(0)
    pixels = rng.integers(0, 256, size=(32, 32), dtype=np.uint8)
    shuffled = rng.permutation(pixels.ravel()).reshape(32, 32)
    assert entropy(_img(pixels)) == pytest.approx(entropy(_img(shuffled)), abs=1e-12)
    assert histogram(_img(pixels)).sum() == 1024
    assert len(histogram(_img(pixels))) == 256


def test_entropy_of_constructed_histogram():
    """A 256x256 image built to have entropy 4.1985 is reported as such."""
    total, others, target = 65_536, 18, 4.1985

    def counts_for(dominant):
        rest = total - dominant
        return [dominant] + [rest // others + (i < rest % others) for i in range(others)]

    lo, hi = total // (others + 1), total
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if _oracle_entropy(counts_for(mid)) > target:
            lo = mid
        else:
            hi = mid
    best = min((lo, hi), key=lambda m: abs(_oracle_entropy(counts_for(m)) - target))
    pixels = np.repeat(np.arange(others + 1, dtype=np.uint8) * 13, counts_for(best))
    image = GrayImage(256, 256, pixels)
    assert entropy(image) == pytest.approx(target, abs=1e-4)


def test_psnr_examples():
    """Identical -> inf; off by one everywhere -> 48.1308 dB; black vs white -> 0 dB."""
    a = _img(np.arange(16).reshape(4, 4) * 10)
    assert psnr(a, a) == math.inf
    assert psnr(a, _img(a.pixels + 1)) == pytest.approx(20 * math.log10(255), abs=1e-9)
    assert psnr(a, _img(a.pixels + 1)) == pytest.approx(48.1308, abs=1e-4)
    assert psnr(_img(np.zeros((2, 2))), _img(np.full((2, 2), 255))) == pytest.approx(0.0)
    with pytest.raises(ShapeError):
        psnr(a, _img(np.zeros((2, 2))))


def test_ssim_examples():
    """Identical images and equal constants score exactly 1."""
    a = _img(np.arange(16).reshape(4, 4) * 7)
    assert ssim(a, a) == 1.0
    assert ssim(_img(np.full((3, 3), 50)), _img(np.full((3, 3), 50))) == pytest.approx(1.0)
    assert ssim(a, _img(255 - a.pixels)) == pytest.approx(
        _oracle_ssim(a.flat().tolist(), (255 - a.flat()).tolist()), abs=1e-12
    )
    with pytest.raises(ParameterError):
        ssim(_img([[1]]), _img([[1]]))


def test_ncc_examples():
    """Scale invariance, orthogonality and the all-zero case."""
    a = _img(np.arange(1, 17).reshape(4, 4) * 7)
    assert ncc(a, a) == pytest.approx(1.0)
    assert ncc(a, _img(a.pixels.astype(int) * 2)) == pytest.approx(1.0)
    even = _img([[10, 0], [10, 0]])
    odd = _img([[0, 20], [0, 20]])
    assert ncc(even, odd) == 0.0
    with pytest.raises(UndefinedMetricError):
        ncc(a, _img(np.zeros((4, 4))))


def test_ber_examples():
    """Identical -> 0, complement -> 1, one flipped LSB in 2x2 -> 1/32."""
    a = _img([[10, 20], [30, 40]])
    assert ber(a, a) == 0.0
    assert ber(a, _img(255 - a.pixels)) == 1.0
    assert ber(a, _img([[11, 20], [30, 40]])) == 0.03125


def test_pearson_examples():
    """Perfect correlation, anti-correlation and the constant-image rules."""
    a = _img(np.arange(16).reshape(4, 4) * 3)
    assert pearson_correlation(a, a) == pytest.approx(1.0)
    assert pearson_correlation(a, _img(255 - a.pixels)) == pytest.approx(-1.0)
    constant = _img(np.full((4, 4), 5))
    assert pearson_correlation(constant, constant) == 1.0
    with pytest.raises(UndefinedMetricError):
        pearson_correlation(a, constant)


def test_metrics_match_brute_force_oracle():
    """All comparison metrics agree with the list-based oracle on random 4x4 pairs."""
    rng = np.random.default_rng(8)
    for _ in range(100):
        a = rng.integers(1, 256, size=(4, 4), dtype=np.uint8)
        b = rng.integers(1, 256, size=(4, 4), dtype=np.uint8)
        la, lb = a.ravel().tolist(), b.ravel().tolist()
        ia, ib = _img(a), _img(b)
        if la != lb:
            assert psnr(ia, ib) == pytest.approx(_oracle_psnr(la, lb), abs=1e-12)
        assert ssim(ia, ib) == pytest.approx(_oracle_ssim(la, lb), abs=1e-12)
        assert ncc(ia, ib) == pytest.approx(_oracle_ncc(la, lb), abs=1e-12)
        assert ber(ia, ib) == pytest.approx(_oracle_ber(la, lb), abs=1e-12)
        if len(set(la)) > 1 and len(set(lb)) > 1:
            assert pearson_correlation(ia, ib) == pytest.approx(_oracle_pearson(la, lb), abs=1e-12)


def test_pearson_with_one_perturbed_pixel():
    """Pearson of an image against a one-pixel perturbation matches the oracle."""
    a = np.arange(16, dtype=np.uint8).reshape(4, 4) * 11
    b = a.copy()
    b[2, 1] += 5
    value = pearson_correlation(_img(a), _img(b))
    assert value == pytest.approx(_oracle_pearson(a.ravel().tolist(), b.ravel().tolist()), abs=1e-12)
    assert value < 1.0


def test_metrics_are_symmetric():
    """PSNR, SSIM and BER do not depend on argument order."""
    rng = np.random.default_rng(12)
    a = _img(rng.integers(0, 256, size=(8, 8)))
    b = _img(rng.integers(0, 256, size=(8, 8)))
    assert psnr(a, b) == pytest.approx(psnr(b, a))
    assert ssim(a, b) == pytest.approx(ssim(b, a))
    assert ber(a, b) == ber(b, a)


def test_lossless_round_trip_over_random_images():
    """50 random images from 1x1 to 512x512 decrypt bit-exactly, with ideal metrics."""
    rng = np.random.default_rng(2025)
    shapes = [(1, 1), (512, 512)] + [tuple(rng.integers(1, 513, size=2)) for _ in range(48)]
    for height, width in shapes:
        original = _img(rng.integers(0, 256, size=(height, width)))
        key = generate_key(256, rng)
        encrypted = xor_transform(original, key)
        decrypted = xor_transform(encrypted, key)
        assert decrypted == original
        assert psnr(original, decrypted) == math.inf
        assert ber(original, decrypted) == 0.0
        if original.size >= 2:
            assert ssim(original, decrypted) == 1.0
        if original.flat().any():
            assert ncc(original, decrypted) == pytest.approx(1.0, abs=1e-12)


def test_encrypted_entropy_near_eight_bits():
    """Ten 256x256 images, constant and scan-like included, encrypt to >= 7.98 bits."""
    rng = np.random.default_rng(77)
    inputs = list(build_sample_images(256, seed=1).values())
    inputs += [
        np.zeros((256, 256), dtype=np.uint8),
        np.full((256, 256), 255, dtype=np.uint8),
        np.tile(np.arange(256, dtype=np.uint8)[:, None], (1, 256)),
        rng.integers(100, 110, size=(256, 256), dtype=np.uint8),
        np.kron(np.eye(16, dtype=np.uint8) * 200, np.ones((16, 16), dtype=np.uint8)),
    ]
    assert len(inputs) == 10
    for pixels in inputs:
        encrypted = xor_transform(_img(pixels), generate_key(256, rng))
        assert entropy(encrypted) >= 7.98


def test_key_sensitivity_single_bit_flips():
    """Decrypting with any one key bit flipped leaves no structural similarity."""
    rng = np.random.default_rng(31)
    original = _img(build_sample_images(256, seed=3)["phantom"])
    key = generate_key(256, rng)
    values = [
        key_sensitivity(original, key, ChaosParams(), int(index))
        for index in rng.choice(256, size=20, replace=False)
    ]
    assert all(abs(v) < 0.05 for v in values)
    assert np.mean(np.abs(values)) < 0.02


def test_correct_key_decryption_is_structurally_identical():
    """Control for key sensitivity: decrypting with the unflipped key gives SSIM 1."""
    original = _img(build_sample_images(64, seed=3)["phantom"])
    key = generate_key(256, np.random.default_rng(31))
    params = ChaosParams()
    decrypted = xor_transform(xor_transform(original, key, params), key, params)
    assert ssim(original, decrypted) == 1.0


def test_key_sensitivity_rejects_bad_index():
    """The flipped bit must exist."""
    key = generate_key(256, np.random.default_rng(0))
    with pytest.raises(ParameterError):
        key_sensitivity(_img(np.zeros((2, 2))), key, ChaosParams(), 256)


def test_build_report_for_lossless_pipeline():
    """The report shows ideal quality metrics and copies the session verdict."""
    rng = np.random.default_rng(5)
    original = _img(build_sample_images(64, seed=5)["phantom"])
    key = generate_key(256, rng)
    encrypted = xor_transform(original, key)
    decrypted = xor_transform(encrypted, key)
    session = run_e91_session(
        5000, ChannelConfig(eavesdropper="intercept_resend"), np.random.default_rng(5)
    )
    report = build_report(original, encrypted, decrypted, session, 0.01)
    assert report.psnr == math.inf
    assert (report.ssim, report.ncc, report.ber) == (1.0, pytest.approx(1.0), 0.0)
    assert report.pearson_od == pytest.approx(1.0)
    assert report.entropy_decrypted == report.entropy_original
    assert report.entropy_encrypted > report.entropy_original
    assert report.eavesdrop_detected is session.eavesdrop_detected
    assert build_report(original, encrypted, decrypted, None, 0.0).eavesdrop_detected is False


def test_report_serialization():
    """JSON keeps every field; infinite PSNR is written as "inf"."""
    report = MetricsReport(
        entropy_original=4.1985,
        entropy_encrypted=7.9973,
        entropy_decrypted=4.1985,
        psnr=math.inf,
        ssim=1.0,
        ncc=1.0,
        ber=0.0,
        pearson_od=1.0,
        key_sensitivity_ssim=0.0082,
        eavesdrop_detected=True,
    )
    assert report.to_dict()["psnr"] == "inf"
    assert MetricsReport.from_json(report.to_json()) == report
    table = report.to_table()
    assert "PSNR (dB)" in table and "inf" in table
    assert "Eavesdropping detected  Yes" in table
    with pytest.raises(ParameterError):
        MetricsReport.from_dict({"psnr": 1.0})
