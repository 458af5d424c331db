import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from scatterlab.filterbank import littlewood_paley_deviation
from scatterlab.rotation import (
    layer_energies,
    periodized_filter_bank,
    rotate,
    rotation_invariance_check,
    rotation_scatter,
)
from scatterlab.stability import smooth_test_signal

seeds = st.integers(0, 2 ** 31 - 1)


@pytest.fixture(scope="module")
def pfb():
    return periodized_filter_bank(0, 256)


def test_labels_cover_harmonic_octaves(pfb):
    # label l covers harmonics 2^l <= k < 2^(l+1); n = 256 has harmonics up to 128
    # the coarsest label straddles the first harmonic
    assert pfb.scales == tuple(range(6, -2, -1))
    k = pfb.harmonics
    for l in pfb.scales[:-1]:
        psi = pfb.psi(l)
        peak = k[np.argmax(psi)]
        assert 2 ** l <= peak <= 2 ** (l + 1)


def test_averaging_filter_keeps_only_the_mean(pfb):
    phi = pfb.phi_hat
    assert phi[0] == 1.0
    assert np.max(np.abs(phi[1:])) <= 1e-12
    np.testing.assert_allclose(pfb.periodized_phi(), 1.0 / pfb.n, atol=1e-15)


def test_periodized_bank_is_unitary(pfb):
    assert littlewood_paley_deviation(pfb.bank) <= 1e-10


def test_level_arguments():
    with pytest.raises(ValueError):
        periodized_filter_bank(0, 100)
    with pytest.raises(ValueError):
        periodized_filter_bank(5, 64)
    with pytest.raises(ValueError):
        periodized_filter_bank(-7, 64)
    coarse = periodized_filter_bank(-2, 256)
    assert coarse.scales[-1] == 1
    assert periodized_filter_bank(2, 256).scales == periodized_filter_bank(0, 256).scales


def test_outputs_are_single_numbers(pfb, rng):
    out = rotation_scatter(rng.standard_normal(256), pfb, 2)
    assert out.meta["group"] == "SO(2)"
    assert all(c.s_signal.shape == (1,) for c in out.coeffs.values())
    assert (6, 3) in out.coeffs


def test_zeroth_layer_is_circle_mean(pfb, rng):
    f = rng.standard_normal(256)
    out = rotation_scatter(f, pfb, 1)
    assert out[()].s_signal[0] == pytest.approx(f.mean(), abs=1e-12)


@given(seed=seeds, g=st.integers(0, 255))
def test_grid_rotation_invariance(seed, g, pfb):
    f = np.random.default_rng(seed).standard_normal(256)
    a = rotation_scatter(f, pfb, 2)
    b = rotation_scatter(rotate(f, g), pfb, 2)
    for p, c in a.coeffs.items():
        assert abs(b[p].s_signal[0] - c.s_signal[0]) <= 1e-10


def test_all_grid_rotations_at_depth_three(pfb):
    f = np.random.default_rng(10).standard_normal(256)
    assert rotation_invariance_check(f, pfb, 3, range(256)) <= 1e-10


def test_fractional_rotation_of_smooth_signal(pfb):
    f = smooth_test_signal(256, np.random.default_rng(10), 0.25, False)
    assert rotation_invariance_check(f, pfb, 3, [0.5, 1.25, 7.75]) <= 1e-3


def test_layer_energies_sum_with_the_mean(pfb, rng):
    f = rng.standard_normal(256)
    e = layer_energies(f, pfb)
    assert set(e) == set(pfb.scales)
    # unitary bank: wavelet energies plus the mean's energy give ||f||^2
    assert sum(e.values()) + 256 * f.mean() ** 2 == pytest.approx(np.sum(f ** 2), rel=1e-10)


def test_single_harmonic_lives_in_its_octave(pfb):
    k = 20
    f = np.cos(2 * math.pi * k * np.arange(256) / 256)
    e = layer_energies(f, pfb)
    top = max(e, key=e.get)
    assert 2 ** top <= k < 2 ** (top + 1) or 2 ** (top - 1) <= k < 2 ** top
