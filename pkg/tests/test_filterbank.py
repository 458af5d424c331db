import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from scatterlab.filterbank import (
    ConvergenceError,
    FrequencyGrid,
    admissibility_alpha,
    analytic_spline_wavelet,
    battle_lemarie_phi_sq,
    battle_lemarie_psi_sq,
    box_spline_rho,
    build_battle_lemarie_mother,
    build_filter_bank,
    littlewood_paley_deviation,
    spline_tail_bound,
)

PI = math.pi


def direct_s8(x, terms=4000):
    k = np.arange(-terms, terms + 1)
    return np.sum((x[:, None] + 2 * PI * k[None, :]) ** -8.0, axis=1)


def direct_psi_sq(w):
    # slow closed form straight from the orthonormalised cubic spline
    w = np.asarray(w, float)
    return direct_s8(w / 2 + PI) / (w ** 8 * direct_s8(w) * direct_s8(w / 2))


def ideal_half_band(omega):
    w = np.asarray(omega, float)
    return np.where((w > PI / 2) & (w <= PI), math.sqrt(2.0), 0.0)


# ---------------------------------------------------------------- grid

def test_grid_rejects_non_power_of_two():
    with pytest.raises(ValueError):
        FrequencyGrid(300)


def test_grid_frequencies_wrap_into_half_open_interval():
    g = FrequencyGrid(64)
    w = g.frequencies
    assert np.all(w > -PI) and np.all(w <= PI)
    assert np.count_nonzero(w == 0) == 1
    assert w[32] == pytest.approx(PI)
    np.testing.assert_allclose(w[g.mirror_index()][1:32], -w[1:32])


# ---------------------------------------------------------------- spline wavelet

def test_psi_sq_matches_direct_lattice_sums():
    w = np.array([0.37, 1.1, 2.5, 4.0, 4.27, 5.5, 7.9, 11.3, 20.1])
    np.testing.assert_allclose(battle_lemarie_psi_sq(w), direct_psi_sq(w), rtol=1e-9)


@given(st.floats(0.05, 2 * PI - 0.05))
def test_psi_translates_tile_to_one(w):
    # orthonormal wavelet: sum_k |psi_hat(w + 2 k pi)|^2 = 1
    k = np.arange(-200, 201)
    assert np.sum(battle_lemarie_psi_sq(w + 2 * PI * k)) == pytest.approx(1.0, abs=1e-6)


@given(st.floats(1.0, 2.0))
def test_psi_dilates_tile_to_one(w):
    j = np.arange(-40, 41)
    assert np.sum(battle_lemarie_psi_sq(2.0 ** j * w)) == pytest.approx(1.0, abs=1e-10)


@given(st.floats(0.01, 2 * PI - 0.01))
def test_scaling_function_translates_tile_to_one(w):
    k = np.arange(-200, 201)
    assert np.sum(battle_lemarie_phi_sq(w + 2 * PI * k)) == pytest.approx(1.0, abs=1e-6)


def test_spline_tail_bound_is_below_tolerance():
    assert spline_tail_bound() < 1e-12
    with pytest.raises(ConvergenceError):
        battle_lemarie_psi_sq(np.array([1.0]), terms=2)


def test_mother_vanishes_at_zero_and_on_negative_frequencies():
    w = np.linspace(-10, 0, 101)
    assert np.all(analytic_spline_wavelet(w) == 0)
    mother = build_battle_lemarie_mother(FrequencyGrid(512))
    w = FrequencyGrid(512).frequencies
    assert mother[0] == 0
    assert np.all(mother[w < 0] == 0)


def test_mother_needs_resolved_grid():
    with pytest.raises(ValueError):
        build_battle_lemarie_mother(FrequencyGrid(128))


def test_mother_peak_matches_direct_evaluation():
    w = np.linspace(0.01, 4 * PI, 2 ** 16)
    step = w[1] - w[0]
    peak = w[np.argmax(analytic_spline_wavelet(w))]
    coarse = np.linspace(3.0, 6.0, 3001)
    oracle = coarse[np.argmax(direct_psi_sq(coarse))]
    assert abs(peak - oracle) <= max(step, coarse[1] - coarse[0])
    # the peak sits inside the octave (pi, 2 pi] next to 3 pi / 2
    assert PI < peak < 2 * PI


# ---------------------------------------------------------------- bank

@pytest.mark.parametrize("n,J,j_max", [(256, 4, -1), (1024, 7, -1), (4096, 8, 0), (2048, 12, -1)])
def test_completed_bank_is_a_partition_of_unity(n, J, j_max):
    fb = build_filter_bank(n, J, j_max, True)
    assert littlewood_paley_deviation(fb) <= 1e-10


def test_uncompleted_bank_on_resolved_band():
    J = 8
    fb = build_filter_bank(4096, J, -1, False)
    assert littlewood_paley_deviation(fb, (2.0 ** (-J + 2) * PI, PI / 2)) <= 1e-3


def test_ideal_half_band_bank_is_exact():
    fb = build_filter_bank(1024, 6, 0, False, ideal_half_band)
    assert littlewood_paley_deviation(fb) <= 1e-12


def test_doubling_the_wavelets_breaks_the_partition(bank512):
    from dataclasses import replace
    doubled = replace(bank512, psi_hat=2 * bank512.psi_hat)
    assert littlewood_paley_deviation(doubled) >= 1.0


def test_bank_invariants(bank512):
    w = bank512.grid.frequencies
    assert np.all(bank512.psi_hat[:, w < 0] == 0)
    assert np.all(bank512.psi_hat[:, 0] == 0)
    assert np.all(bank512.psi_hat >= 0)
    assert bank512.phi_hat[0] == 1.0
    np.testing.assert_array_equal(bank512.phi_hat, bank512.phi_hat[bank512.grid.mirror_index()])
    assert bank512.scales == (-1, -2, -3, -4)
    assert bank512.psi_norm_sq == pytest.approx(1.0, rel=1e-6)
    assert bank512.phi_norm_sq == pytest.approx(2.0, rel=1e-6)


def test_filters_are_read_only(bank256):
    with pytest.raises(ValueError):
        bank256.psi_hat[0, 0] = 1.0


def test_scale_covariance_on_nested_grids():
    fb = build_filter_bank(1024, 7, -1, False)
    for j in fb.scales[:-1]:
        # psi at j-1 on index k equals psi at j on index 2k
        np.testing.assert_array_equal(fb.psi(j - 1)[:256], fb.psi(j)[:512:2])


@pytest.mark.parametrize("args", [(256, 4, 1), (256, 1, -1), (256, 10, -1)])
def test_bank_rejects_bad_scale_ranges(args):
    with pytest.raises(ValueError):
        build_filter_bank(*args)


def test_unknown_scale_raises(bank256):
    with pytest.raises(KeyError):
        bank256.psi(-9)


# ---------------------------------------------------------------- box spline and alpha

def test_box_spline_values():
    assert box_spline_rho(np.array([0.0]))[0] == 1.0
    assert box_spline_rho(np.array([2 * PI]))[0] == pytest.approx(0.0, abs=1e-30)
    assert box_spline_rho(np.array([PI]))[0] == pytest.approx((2 / PI) ** 4, rel=1e-14)
    assert box_spline_rho(FrequencyGrid(64)).shape == (64,)


def test_alpha_matches_reference_value():
    rep = admissibility_alpha(build_filter_bank(4096, 8))
    assert rep.alpha == pytest.approx(0.2766, abs=0.02)
    assert rep.alpha > 0
    assert 1.0 <= rep.argmin_omega <= 2.0
    assert rep.probe_step == pytest.approx(1 / 4095)


def test_alpha_unitary_normalisation_is_half():
    fb = build_filter_bank(4096, 8)
    a = admissibility_alpha(fb, normalization="analytic").alpha
    b = admissibility_alpha(fb, normalization="unitary").alpha
    assert b == pytest.approx(a / 2, rel=1e-12)


def test_alpha_without_penalty_is_the_littlewood_paley_sum():
    fb = build_filter_bank(1024, 6)
    rep = admissibility_alpha(fb, rho_hat=lambda w: np.ones_like(np.asarray(w, float)),
                              normalization="unitary")
    assert rep.alpha == pytest.approx(2.0, abs=1e-9)


def test_alpha_drops_when_eta_moves_off_band():
    fb = build_filter_bank(1024, 6)
    assert admissibility_alpha(fb, eta=3 * PI).alpha < admissibility_alpha(fb).alpha


def test_alpha_argument_checks():
    fb = build_filter_bank(256, 4)
    with pytest.raises(ValueError):
        admissibility_alpha(fb, k_max=10)
    with pytest.raises(ValueError):
        admissibility_alpha(fb, probe_grid=np.array([]))
    with pytest.raises(ValueError):
        admissibility_alpha(fb, rho_hat=lambda w: 0.5 * np.ones_like(np.asarray(w, float)))


def test_domination_is_reported():
    rep = admissibility_alpha(build_filter_bank(1024, 6))
    assert isinstance(rep.domination_ok, bool)
    assert np.isfinite(rep.domination_margin)
