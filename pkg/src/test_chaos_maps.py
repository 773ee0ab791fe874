"""Tests functions in chaos_maps.py"""

import dataclasses
import math
import warnings

import numpy as np
import pytest

from chaos_maps import (
    LAYER_ORDER,
    ChaosParams,
    ChaosSeeds,
    arnold_sequence,
    derive_keystream,
    derive_seeds,
    generate_keystreams,
    henon_sequence,
    logistic_sequence,
    tent_sequence,
    whiten,
)
from errors import (
    DegenerateLayerWarning,
    DivergenceError,
    KeyLengthError,
    KeystreamLengthError,
    ParameterError,
)
from qkd_sim import BitKey, generate_key

# First 16 keystream bytes with burn_in = 0, computed by hand from the
# recurrences (all values are exact dyadic rationals) and frozen.
TENT_GOLDEN = [0, 0, 0, 0, 128, 64, 32, 144, 72, 36, 18, 9, 132, 66, 161, 208]
ARNOLD_SINGULAR_GOLDEN = [244, 232, 208, 161, 66, 132, 9, 18, 36, 72, 144, 32, 64, 128, 0, 0]


def _oracle_byte(value):
    scaled = abs(value) * 1e6
    return int(math.floor((scaled - math.floor(scaled)) * 256))


def test_logistic_sequence_first_values():
    """One step from 0.5 with r = 3.99 gives 0.9975; the second step chains from it."""
    assert logistic_sequence(0.5, 3.99, 1) == [0.9975]
    second = logistic_sequence(0.5, 3.99, 2)[1]
    assert second == 3.99 * 0.9975 * (1.0 - 0.9975)
    assert second == pytest.approx(0.00995, abs=1e-5)


def test_logistic_sequence_stays_in_unit_interval():
    """Every iterate of the logistic map with r <= 4 lies in [0, 1]."""
    values = logistic_sequence(0.123, 4.0, 5000)
    assert all(0.0 <= v <= 1.0 for v in values)


def test_logistic_sequence_rejects_bad_parameters():
    """x0 outside (0, 1) and r outside (0, 4] are parameter errors."""
    with pytest.raises(ParameterError):
        logistic_sequence(0.0, 3.99, 3)
    with pytest.raises(ParameterError):
        logistic_sequence(0.5, 4.5, 3)
    with pytest.raises(ParameterError):
        logistic_sequence(0.5, 3.99, 0)


def test_henon_sequence_examples():
    """Classic Henon from the origin: (1, 0), then (-0.4, 0.3)."""
    orbit = henon_sequence(0.0, 0.0, 1.4, 0.3, 2)
    assert orbit[0] == (1.0, 0.0)
    assert orbit[1][0] == pytest.approx(-0.4)
    assert orbit[1][1] == pytest.approx(0.3)


def test_henon_sequence_degenerate_parameters():
    """With a = b = 0 the recurrence is the constant 1."""
    assert henon_sequence(0.0, 0.0, 0.0, 0.0, 3) == [(1.0, 0.0)] * 3


def test_henon_divergence_names_iteration():
    """An orbit escaping |x| > 10 raises DivergenceError with its 1-based index."""
    with pytest.raises(DivergenceError) as excinfo:
        henon_sequence(1.5, 0.5, 1.4, 0.3, 50)
    assert excinfo.value.iteration >= 1
    assert f"iteration {excinfo.value.iteration}" in str(excinfo.value)


def test_henon_rejects_start_outside_basin():
    """Starting points outside |x0| <= 1.5, |y0| <= 0.5 are rejected."""
    with pytest.raises(ParameterError):
        henon_sequence(2.0, 0.0, 1.4, 0.3, 1)


def test_tent_sequence_branches():
    """Both branches of the tent map with r = 0.5, and the fixed point 0."""
    assert tent_sequence(0.25, 0.5, 1) == [0.125]
    assert tent_sequence(0.6, 0.5, 1)[0] == pytest.approx(0.2)
    assert tent_sequence(0.0, 1.9999, 4) == [0.0] * 4


def test_arnold_sequence_singular_and_area_preserving():
    """One step of both Arnold variants from (0.25, 0.5)."""
    singular = arnold_sequence(0.25, 0.5, 1.0, 1.0, 1)
    assert singular == [(0.75, 0.75)]
    cat = arnold_sequence(0.25, 0.5, 1.0, 1.0, 1, area_preserving=True)
    assert cat == [(0.75, 0.25)]


def test_arnold_sequence_stays_in_unit_square():
    """Every Arnold iterate lies in [0, 1)^2."""
    for x, y in arnold_sequence(0.3, 0.7, 1.0, 1.0, 200, area_preserving=True):
        assert 0.0 <= x < 1.0 and 0.0 <= y < 1.0


def test_whiten_examples():
    """floor(frac(|x| * 1e6) * 256) for a few hand-checked values."""
    assert whiten([0.123456789]).tolist() == [201]
    assert whiten([0.0, 0.5, -(2.0**-20)]).tolist() == [0, 0, 244]


def test_derive_keystream_applies_burn_in():
    """The keystream starts after the burn-in and has exactly n bytes."""
    trajectory = [2.0**-20, 0.0, 2.0**-20, 2.0**-21]
    stream = derive_keystream(trajectory, 2, 2, origin="test")
    assert stream.data.tolist() == [244, 122]
    assert len(stream) == 2
    assert stream.origin == "test"


def test_derive_keystream_too_short():
    """A trajectory shorter than burn-in + n is rejected."""
    with pytest.raises(KeystreamLengthError):
        derive_keystream([0.1, 0.2, 0.3], 2, 2)


def test_tent_golden_vector():
    """Frozen keystream bytes for tent x0 = 0.25, r = 0.5, burn-in 0."""
    stream = derive_keystream(tent_sequence(0.25, 0.5, 16), 16, 0)
    assert stream.data.tolist() == TENT_GOLDEN


def test_arnold_golden_vector():
    """Frozen keystream bytes for the singular Arnold map from (2**-20, 0)."""
    stream = derive_keystream(arnold_sequence(2.0**-20, 0.0, 1.0, 1.0, 16), 16, 0)
    assert stream.data.tolist() == ARNOLD_SINGULAR_GOLDEN


def test_logistic_and_henon_keystreams_match_oracle():
    """Logistic and Henon keystream bytes agree with a scalar re-implementation."""
    x = 0.3
    expected = []
    for _ in range(16):
        x = 3.99 * x * (1.0 - x)
        expected.append(_oracle_byte(x))
    stream = derive_keystream(logistic_sequence(0.3, 3.99, 16), 16, 0)
    assert stream.data.tolist() == expected

    x, y = 0.1, 0.1
    expected = []
    for _ in range(16):
        x, y = 1.0 - 1.4 * (x * x) + y, 0.3 * x
        expected.append(_oracle_byte(x))
    stream = derive_keystream(henon_sequence(0.1, 0.1, 1.4, 0.3, 16), 16, 0)
    assert stream.data.tolist() == expected


def test_chaos_params_defaults_and_validation():
    """Default parameters and the range checks on logistic_r and burn_in."""
    params = ChaosParams()
    assert (params.logistic_r, params.henon_a, params.henon_b) == (3.99, 1.4, 0.3)
    assert (params.arnold_a, params.arnold_b) == (1.0, 1.0)
    with pytest.raises(ParameterError):
        ChaosParams(logistic_r=4.01)
    with pytest.raises(ParameterError):
        ChaosParams(burn_in=-1)


def test_chaos_params_from_dict_rejects_unknown_keys():
    """Unknown override names are a parameter error with a hint listing valid names."""
    with pytest.raises(ParameterError) as excinfo:
        ChaosParams.from_dict({"logistic_rr": 3.9})
    assert "logistic_r" in excinfo.value.hint
    assert ChaosParams.from_dict({"tent_r": 0.5}).tent_r == 0.5


def test_fingerprint_changes_with_parameters():
    """Equal parameters share a fingerprint; any change alters it."""
    assert ChaosParams().fingerprint() == ChaosParams().fingerprint()
    assert ChaosParams().fingerprint() != ChaosParams(burn_in=10).fingerprint()


def test_derive_seeds_in_open_unit_interval():
    """Seeds of random keys always lie strictly inside (0, 1)."""
    rng = np.random.default_rng(7)
    for _ in range(50):
        seeds = derive_seeds(generate_key(256, rng))
        assert isinstance(seeds, ChaosSeeds)


def test_derive_seeds_extreme_keys():
    """All-zero and all-one keys still give valid seeds."""
    derive_seeds(BitKey(np.zeros(256, dtype=np.uint8)))
    derive_seeds(BitKey(np.ones(256, dtype=np.uint8)))


def test_derive_seeds_every_bit_matters():
    """Flipping any single key bit changes at least one seed."""
    key = generate_key(256, np.random.default_rng(3))
    base = derive_seeds(key)
    for index in range(256):
        assert derive_seeds(key.flip(index)) != base


def test_derive_seeds_single_bit_flip_moves_two_seeds():
    """Every 64-bit chunk of the key feeds at least two seed words."""
    key = generate_key(256, np.random.default_rng(13))
    base = dataclasses.astuple(derive_seeds(key))
    for index in range(256):
        flipped = dataclasses.astuple(derive_seeds(key.flip(index)))
        assert sum(a != b for a, b in zip(base, flipped)) >= 2, index


def test_derive_seeds_requires_128_bits():
    """Keys shorter than 128 bits cannot seed the maps."""
    with pytest.raises(KeyLengthError):
        derive_seeds(generate_key(127, np.random.default_rng(0)))
    derive_seeds(generate_key(128, np.random.default_rng(0)))


def test_derive_seeds_folds_long_keys():
    """Keys longer than 256 bits are folded; the extra bits still matter."""
    key = generate_key(512, np.random.default_rng(11))
    assert derive_seeds(key) != derive_seeds(key.flip(400))


def test_seeds_reject_out_of_range():
    """ChaosSeeds enforces the open interval (0, 1)."""
    with pytest.raises(ParameterError):
        ChaosSeeds(0.5, 0.5, 0.5, 0.5, 0.5, 1.0)


def test_generate_keystreams_lengths_and_order():
    """One keystream per layer, in layer order, each of the requested length."""
    seeds = derive_seeds(generate_key(256, np.random.default_rng(5)))
    streams = generate_keystreams(seeds, ChaosParams(burn_in=64), 1000)
    assert list(streams) == list(LAYER_ORDER)
    for layer, stream in streams.items():
        assert stream.origin == layer
        assert len(stream) == 1000


def test_generate_keystreams_is_deterministic():
    """The same seeds and parameters give byte-identical keystreams."""
    seeds = derive_seeds(generate_key(256, np.random.default_rng(5)))
    first = generate_keystreams(seeds, ChaosParams(burn_in=32), 500)
    second = generate_keystreams(seeds, ChaosParams(burn_in=32), 500)
    for layer in LAYER_ORDER:
        assert np.array_equal(first[layer].data, second[layer].data)


def test_default_keystreams_are_not_constant():
    """With the default parameters no layer collapses and nothing is warned."""
    seeds = derive_seeds(generate_key(256, np.random.default_rng(9)))
    with warnings.catch_warnings():
        warnings.simplefilter("error", DegenerateLayerWarning)
        streams = generate_keystreams(seeds, ChaosParams(), 256)
    for stream in streams.values():
        assert len(set(stream.data.tolist())) > 1


def test_tent_half_warns_degenerate():
    """tent_r = 0.5 collapses the tent layer to zeros and is warned about once."""
    seeds = derive_seeds(generate_key(256, np.random.default_rng(1)))
    with pytest.warns(DegenerateLayerWarning) as record:
        streams = generate_keystreams(seeds, ChaosParams(tent_r=0.5), 100, layers=("tent",))
    assert len(record) == 1
    assert not streams["tent"].data.any()


def test_singular_arnold_collapses():
    """The singular Arnold form reaches 0 after burn-in, which is warned about."""
    seeds = derive_seeds(generate_key(256, np.random.default_rng(2)))
    params = ChaosParams(arnold_area_preserving=False)
    with pytest.warns(DegenerateLayerWarning):
        streams = generate_keystreams(seeds, params, 100, layers=("arnold",))
    assert not streams["arnold"].data.any()


def test_logistic_keystream_is_close_to_uniform():
    """Every byte value appears and no bin is more than twice as full as another."""
    n, burn_in = 65536, 1024
    stream = derive_keystream(logistic_sequence(0.3, 3.99, n + burn_in), n, burn_in)
    counts = np.bincount(stream.data, minlength=256)
    assert counts.min() > 0
    assert counts.max() / counts.min() < 2.0


def test_logistic_keystream_is_sensitive_to_seed():
    """A 2**-30 change of x0 decorrelates the bytes within the first hundred steps."""
    n = 1000
    first = derive_keystream(logistic_sequence(0.3, 3.99, n), n, 0).data
    second = derive_keystream(logistic_sequence(0.3 + 2.0**-30, 3.99, n), n, 0).data
    assert np.mean(first[100:] == second[100:]) < 0.05
