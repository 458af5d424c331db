"""Scattering on the rotation group SO(2), i.e. on periodic signals of the angle.

A signal holds ``n`` equispaced samples of ``[0, 2 pi)`` and has integer
harmonics ``k``.  Wavelet ``l`` is the mother sampled at ``2^-l * pi * k``,
so it covers the harmonic octave ``2^l <= k < 2^(l+1)``.  The averaging
filter at level ``L`` is ``phi_hat(2^(L+2) * pi * k)``, which vanishes at
every nonzero harmonic once ``L >= 0``; the ``L = 0`` output is then the
exact circle mean and is invariant to every rotation.

Internally this is the ordinary grid bank with averaging exponent
``log2(n) + 1 + L`` and relabelled scales.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Callable, Dict, Iterable

import numpy as np

from scatterlab.filterbank import FilterBank, analytic_spline_wavelet, build_filter_bank
from scatterlab.scatter import (
    Coefficient,
    ScatteringOutput,
    _fft,
    _ifft,
    scatter,
)
from scatterlab.stability import shift


@dataclass(frozen=True, eq=False)
class PeriodizedFilterBank:
    bank: FilterBank
    L: int

    @property
    def n(self) -> int:
        return self.bank.n

    @property
    def offset(self) -> int:
        # circle label = grid exponent + offset
        return int(math.log2(self.n)) - 1

    @property
    def scales(self) -> tuple:
        return tuple(j + self.offset for j in self.bank.scales)

    @property
    def harmonics(self) -> np.ndarray:
        n = self.n
        k = np.arange(n)
        return np.where(k > n // 2, k - n, k)

    def psi(self, label: int) -> np.ndarray:
        return self.bank.psi(label - self.offset)

    @property
    def phi_hat(self) -> np.ndarray:
        return self.bank.phi_hat

    def periodized_phi(self) -> np.ndarray:
        """Spatial samples of the periodised averaging kernel."""
        return _ifft(self.bank.phi_hat).real


def periodized_filter_bank(L: int = 0, n: int = 256, completion: bool = True,
                           mother: Callable = analytic_spline_wavelet) -> PeriodizedFilterBank:
    """Wavelets and averaging filter sampled on integer harmonics.

    Levels ``L > 0`` behave like ``L = 0``: the extra coarse wavelets vanish
    at every integer harmonic.
    """
    if n < 4 or n & (n - 1):
        raise ValueError("n must be a power of two >= 4")
    if n < 2 ** (L + 2):
        raise ValueError(f"n = {n} is too small for level L = {L}")
    log_n = int(math.log2(n))
    J_grid = log_n + 1 + min(L, 0)
    if J_grid < 2:
        raise ValueError(f"level L = {L} leaves no wavelet on a grid of {n} samples")
    return PeriodizedFilterBank(build_filter_bank(n, J_grid, -1, completion, mother), int(L))


def _relabel(out: ScatteringOutput, offset: int, collapse: bool) -> ScatteringOutput:
    coeffs = {}
    for p, c in out.coeffs.items():
        sig = c.s_signal
        if collapse and sig is not None:
            sig = np.array([float(np.mean(sig))])
        coeffs[tuple(j + offset for j in p)] = Coefficient(sig, c.s_norm, c.u_norm)
    meta = dict(out.meta)
    meta["group"] = "SO(2)"
    return replace(out, coeffs=coeffs, meta=meta)


def rotation_scatter(f, pfb: PeriodizedFilterBank, m_max: int = 3,
                     policy: str = "all") -> ScatteringOutput:
    """Scattering of a circle signal; paths use the harmonic-octave labels.

    At ``L >= 0`` every averaged signal is constant and is stored as a
    single number (its norms stay the full-grid norms).
    """
    out = scatter(f, pfb.bank, m_max, policy)
    out = _relabel(out, pfb.offset, collapse=pfb.L >= 0)
    out.meta["L"] = pfb.L
    return out


def rotate(f, g: float) -> np.ndarray:
    """Rotate by ``g`` samples; integer ``g`` is an exact roll."""
    return shift(f, g)


def rotation_invariance_check(f, pfb: PeriodizedFilterBank, m_max: int,
                              shifts: Iterable[float]) -> float:
    """Max over rotations and paths of ``|S_L[p] L_g f - S_L[p] f|``."""
    ref = rotation_scatter(f, pfb, m_max)
    worst = 0.0
    for g in shifts:
        out = rotation_scatter(rotate(f, g), pfb, m_max)
        for p, c in ref.coeffs.items():
            worst = max(worst, float(np.max(np.abs(out.coeffs[p].s_signal - c.s_signal))))
    return worst


def layer_energies(f, pfb: PeriodizedFilterBank) -> Dict[int, float]:
    """First-layer ``||f * psi_l||^2`` by octave label."""
    x = np.asarray(f)
    spec = np.abs(_fft(x)) ** 2
    return {l: float(spec @ pfb.psi(l) ** 2 / pfb.n) for l in pfb.scales}
