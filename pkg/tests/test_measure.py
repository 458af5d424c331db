import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from scatterlab.filterbank import build_filter_bank
from scatterlab.measure import (
    OMEGA_SCALE,
    band_energy_equivalence,
    build_q_map,
    convergence_diagnostic,
    curve_energy,
    dirac,
    dirac_measures,
    fourier_overlay,
    normalized_scattering_curve,
    path_distance,
    q_lookup,
)
from scatterlab.scatter import u_path, wavelet_energies
from scatterlab.stability import smooth_test_signal


@pytest.fixture(scope="module")
def table256(bank256):
    return build_q_map(dirac_measures(bank256, 3))


@pytest.fixture(scope="module")
def table1024(bank1024):
    return build_q_map(dirac_measures(bank1024, 4))


def test_root_mass_and_interval(table256):
    root = table256[()]
    assert root.mu == pytest.approx(1.0, abs=1e-12)
    assert table256.omega_interval(()) == pytest.approx((0.0, OMEGA_SCALE))


def test_masses_match_direct_propagation(bank256, table256):
    d = dirac(256)
    for p in [(-1,), (-3,), (-2, -3), (-1, -1, -3)]:
        assert table256[p].mu == pytest.approx(np.sum(u_path(d, p, bank256) ** 2), rel=1e-12)
    assert "-2/-3" in table256 and (0,) not in table256


def test_first_layer_masses_follow_dilation(bank1024, table1024):
    for j in range(-bank1024.J + 2, -1):
        expect = 2.0 ** j * bank1024.psi_norm_sq
        assert table1024[(j,)].mu == pytest.approx(expect, rel=0.01)


def test_children_nest_inside_parent(table256):
    for p, e in table256.entries.items():
        a, b = e.interval
        assert b - a == pytest.approx(e.mu)
        kids = table256.children(p)
        if not kids:
            continue
        assert table256.deficits[p] >= 0
        # scale increases left to right inside the parent
        kids.sort(key=lambda c: c[-1])
        spans = [table256[c].interval for c in kids]
        assert spans == sorted(spans)
        for (a1, b1), (a2, _) in zip(spans, spans[1:]):
            assert b1 == pytest.approx(a2, abs=1e-15)
        assert spans[0][0] >= a - 1e-15 and spans[-1][1] == pytest.approx(b, abs=1e-12)


def test_first_layer_lands_near_its_octave(table1024):
    # the wavelet at scale j covers [2^j pi, 2^(j+1) pi); its piece should overlap it
    for j in (-2, -3, -4):
        lo, hi = table1024.omega_interval((j,))
        assert lo < 2.0 ** (j + 1) * math.pi and hi > 2.0 ** j * math.pi


def test_depth_limit(bank256):
    with pytest.raises(ValueError):
        dirac_measures(bank256, 5)


def test_curve_needs_layout(bank256):
    with pytest.raises(ValueError):
        normalized_scattering_curve(np.ones(256), bank256, dirac_measures(bank256, 2))


def test_curve_depth_must_match(bank256, table256):
    with pytest.raises(ValueError):
        normalized_scattering_curve(np.ones(256), bank256, table256, m_max=2)


@given(st.integers(0, 2 ** 31 - 1))
def test_curve_energy_equals_signal_energy(seed):
    fb = build_filter_bank(256, 4)
    table = build_q_map(dirac_measures(fb, 2))
    f = np.random.default_rng(seed).standard_normal(256)
    recs = normalized_scattering_curve(f, fb, table)
    assert curve_energy(recs) == pytest.approx(np.sum(f ** 2), rel=1e-9)
    assert curve_energy(recs, include_tail=False) <= curve_energy(recs) + 1e-12


def test_dirac_curve_is_flat_on_averaged_pieces(bank256, table256):
    recs = normalized_scattering_curve(dirac(256), bank256, table256)
    vals = [r.value for r in recs if r.kind == "average" and r.end > r.start]
    np.testing.assert_allclose(vals, 1.0, rtol=1e-9)


def test_records_tile_the_half_line(bank256, table256):
    recs = normalized_scattering_curve(np.ones(256), bank256, table256)
    recs = [r for r in recs if r.end > r.start]
    widths = sum(r.end - r.start for r in recs)
    assert widths == pytest.approx(OMEGA_SCALE, rel=1e-9)
    for r in recs[::7]:
        mid = (r.start + r.end) / 2
        assert q_lookup(recs, mid) == r.path
    assert q_lookup(recs, -0.1) is None
    assert q_lookup(recs, 2 * OMEGA_SCALE) is None


def test_path_distance_basic_properties(table256):
    paths = list(table256.entries)
    assert path_distance(table256, (-1,), (-1,)) == 0.0
    assert path_distance(table256, "-1/-2", "-1/-3") == path_distance(table256, "-1/-3", "-1/-2")
    assert path_distance(table256, (-1,), (-2,)) > 0
    with pytest.raises(KeyError):
        path_distance(table256, (-1,), (0,))
    # a deeper common prefix never makes two paths further apart
    assert path_distance(table256, (-1, -2, -3), (-1, -2, -1)) <= path_distance(
        table256, (-1, -2, -3), (-1, -3, -1))
    assert len(paths) == 1 + 3 + 9 + 27


@given(st.data())
def test_path_distance_is_ultrametric(table256, data):
    paths = sorted(table256.entries)
    a, b, c = (data.draw(st.sampled_from(paths)) for _ in range(3))
    dab = path_distance(table256, a, b)
    dbc = path_distance(table256, b, c)
    dac = path_distance(table256, a, c)
    assert dac <= max(dab, dbc) + 1e-12


def test_band_energy_equivalence(bank1024, table1024):
    f = smooth_test_signal(1024, np.random.default_rng(5))
    wav = wavelet_energies(f, bank1024)
    total = np.sum(f ** 2)
    checked = 0
    for j, e in zip(bank1024.scales, wav):
        if e < 0.01 * total:
            continue
        be = band_energy_equivalence(f, bank1024, table1024, j)
        assert be.relative_gap <= 0.05
        assert be.fourier_side == pytest.approx(e)
        # with tails the band books the whole subtree, which is exactly the band energy
        full = band_energy_equivalence(f, bank1024, table1024, j, include_tail=True)
        assert full.scatter_side == pytest.approx(e, rel=1e-9)
        checked += 1
    assert checked >= 2
    with pytest.raises(ValueError):
        band_energy_equivalence(f, bank1024, table1024, 3)


def test_convergence_diagnostic_vanishes_for_dirac():
    banks = [build_filter_bank(256, J) for J in (3, 4)]
    rows = convergence_diagnostic(dirac(256), banks, 2)
    assert [J for J, _ in rows] == [3, 4]
    assert all(v <= 1e-12 for _, v in rows)
    rows = convergence_diagnostic(np.random.default_rng(0).standard_normal(256), banks, 2)
    assert all(0 < v <= 2 for _, v in rows)


def test_fourier_overlay_of_constant(bank256, table256):
    recs = normalized_scattering_curve(np.ones(256), bank256, table256)
    ov = fourier_overlay(np.ones(256), recs)
    assert ov.shape == (len(recs),)
    assert np.all(ov >= 0)
