"""Deformations, their size functionals, and stability experiments.

Displacements are in samples on the periodic grid.  ``warp`` evaluates
``f(x - tau(x))`` by periodic cubic-spline interpolation, except for
constant displacements, which are applied exactly (integer roll) or
spectrally (fractional shift).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.interpolate import CubicSpline

from scatterlab.filterbank import FilterBank
from scatterlab.scatter import (
    Path,
    ScatteringOutput,
    _fft,
    _ifft,
    scatter,
    scattering_distance,
    scattering_norm_distance,
)


def _centered_diff(x: np.ndarray) -> np.ndarray:
    return (np.roll(x, -1) - np.roll(x, 1)) / 2.0


def tau_metrics(tau) -> Dict[str, float]:
    """Sup norms of ``tau``, its first and second differences, and its range."""
    t = np.asarray(tau, dtype=float)
    hess = np.roll(t, -1) - 2 * t + np.roll(t, 1)
    return {
        "sup_tau": float(np.max(np.abs(t))),
        "sup_grad": float(np.max(np.abs(_centered_diff(t)))),
        "sup_hess": float(np.max(np.abs(hess))),
        "sup_incr": float(np.max(t) - np.min(t)),
    }


@dataclass(frozen=True)
class DeformationField:
    tau: np.ndarray

    @classmethod
    def constant(cls, n: int, c: float) -> "DeformationField":
        return cls(np.full(n, float(c)))

    @property
    def metrics(self) -> Dict[str, float]:
        return tau_metrics(self.tau)

    @property
    def is_constant(self) -> bool:
        return bool(np.all(self.tau == self.tau[0]))


def shift(f, c: float) -> np.ndarray:
    """Circular translation ``f(x - c)``; exact roll for integers, spectral otherwise."""
    x = np.asarray(f)
    if float(c).is_integer():
        return np.roll(x, int(c))
    n = x.shape[0]
    omega = 2 * np.pi * np.fft.fftfreq(n)
    out = _ifft(_fft(x) * np.exp(-1j * omega * c))
    return out if np.iscomplexobj(x) else out.real


def warp(f, tau) -> np.ndarray:
    """``f(x - tau(x))`` on the periodic grid."""
    if not isinstance(tau, DeformationField):
        tau = DeformationField(np.asarray(tau, dtype=float))
    x = np.asarray(f)
    n = x.shape[0]
    if tau.tau.shape != (n,):
        raise ValueError("displacement field and signal lengths differ")
    if tau.metrics["sup_grad"] >= 1:
        raise ValueError("sup |grad tau| must be < 1 for an invertible warp")
    if tau.is_constant:
        return shift(x, tau.tau[0])
    grid = np.arange(n + 1, dtype=float)
    ext = np.concatenate([x, x[:1]])
    spline = CubicSpline(grid, ext, bc_type="periodic")
    return spline(np.mod(np.arange(n) - tau.tau, n))


def k_tau(metrics: Dict[str, float], J: int, order: str = "first") -> float:
    """Deformation size ``K(tau)`` at averaging scale ``2**J``."""
    grad = metrics["sup_grad"]
    log_term = 0.0
    if grad > 0:
        ratio = metrics["sup_incr"] / grad
        log_term = grad * max(math.log(ratio) if ratio > 0 else 0.0, 1.0)
    if order == "first":
        lead = 2.0 ** -J * metrics["sup_tau"]
    elif order == "second":
        lead = 2.0 ** (-2 * J) * metrics["sup_tau"] ** 2
    else:
        raise ValueError("order must be 'first' or 'second'")
    return lead + log_term + metrics["sup_hess"]


def random_smooth_tau(n: int, sup_grad: float, rng: np.random.Generator,
                      band_fraction: float = 1 / 16) -> DeformationField:
    """Random displacement bandlimited to the lowest ``band_fraction`` of the band.

    The field is rescaled so that its centred-difference gradient has sup
    norm ``sup_grad``.
    """
    kmax = max(1, int(round(band_fraction * n / 2)))
    spec = np.zeros(n, dtype=complex)
    k = np.arange(1, kmax + 1)
    spec[k] = rng.standard_normal(kmax) + 1j * rng.standard_normal(kmax)
    spec[-k] = np.conj(spec[k])
    tau = np.fft.ifft(spec).real
    g = np.max(np.abs(_centered_diff(tau)))
    if g == 0 or sup_grad == 0:
        return DeformationField(np.zeros(n))
    return DeformationField(tau * (sup_grad / g))


def smooth_test_signal(n: int, rng: np.random.Generator, cutoff: float = 0.25,
                       window: bool = True) -> np.ndarray:
    """Unit-norm random signal with Gaussian spectral roll-off near ``cutoff * pi``.

    With ``window`` it is tapered to the central half of the grid.
    """
    spec = np.fft.fft(rng.standard_normal(n))
    omega = 2 * np.pi * np.fft.fftfreq(n)
    spec *= np.exp(-0.5 * (omega / (cutoff * np.pi)) ** 2)
    f = np.fft.ifft(spec).real
    if window:
        x = np.arange(n) - n / 2
        f *= np.exp(-0.5 * (x / (n / 8)) ** 2)
    return f / np.linalg.norm(f)


def _fit_slope(xs, ys) -> float:
    return float(np.polyfit(np.asarray(xs, float), np.asarray(ys, float), 1)[0])


@dataclass
class DecayReport:
    J: List[int]
    distance: List[float]
    slope: float
    monotone: bool


def translation_decay(f, banks: Sequence[FilterBank], c: float, m_max: int = 2,
                      policy: str = "all") -> DecayReport:
    """``||S_J f - S_J L_c f|| / ||f||`` per bank, with the log2 slope against J."""
    f = np.asarray(f, dtype=float)
    g = shift(f, c)
    nrm = np.linalg.norm(f)
    Js, dists = [], []
    for fb in banks:
        a = scatter(f, fb, m_max, policy)
        b = scatter(g, fb, m_max, policy)
        Js.append(fb.J)
        dists.append(scattering_distance(a, b) / nrm)
    slope = _fit_slope(Js, np.log2(np.maximum(dists, 1e-300))) if len(Js) > 1 else float("nan")
    order = np.argsort(Js)
    d = np.asarray(dists)[order]
    mono = bool(np.all(np.diff(d) <= 1e-6))
    return DecayReport(list(np.asarray(Js)[order]), list(d), slope, mono)


def lipschitz_ratio(f, tau, fb: FilterBank, m_max: int = 2, policy: str = "all") -> float:
    """``||S_J L_tau f - S_J f|| / (m ||f|| K(tau))`` over paths shorter than ``m = m_max + 1``."""
    if not isinstance(tau, DeformationField):
        tau = DeformationField(np.asarray(tau, dtype=float))
    met = tau.metrics
    if met["sup_grad"] > 0.5:
        raise ValueError("lipschitz_ratio needs sup |grad tau| <= 1/2")
    K = k_tau(met, fb.J)
    if K == 0:
        raise ValueError("K(tau) vanishes; the ratio is undefined")
    f = np.asarray(f, dtype=float)
    d = scattering_distance(scatter(warp(f, tau), fb, m_max, policy), scatter(f, fb, m_max, policy))
    return d / ((m_max + 1) * np.linalg.norm(f) * K)


@dataclass
class LipschitzFamily:
    ratios: List[float]
    sup_grads: List[float]

    @property
    def max_ratio(self) -> float:
        return float(np.max(self.ratios))

    @property
    def median_ratio(self) -> float:
        return float(np.median(self.ratios))


def lipschitz_family(signals: Sequence[np.ndarray], fb: FilterBank, n_tau: int = 50,
                     grad_range: Tuple[float, float] = (0.01, 0.3), m_max: int = 2,
                     seed: int = 0) -> LipschitzFamily:
    """Lipschitz ratios over random smooth fields with log-uniform gradient sizes."""
    rng = np.random.default_rng(seed)
    lo, hi = grad_range
    grads = np.exp(rng.uniform(np.log(lo), np.log(hi), n_tau))
    taus = [random_smooth_tau(fb.n, g, rng) for g in grads]
    ratios, used = [], []
    for f in signals:
        for g, tau in zip(grads, taus):
            ratios.append(lipschitz_ratio(f, tau, fb, m_max))
            used.append(float(g))
    return LipschitzFamily(ratios, used)


def gabor(n: int, xi: float, sigma: float, stretch: float = 0.0) -> np.ndarray:
    """Real Gabor atom ``cos(xi u) exp(-u^2 / 2 sigma^2)`` at ``u = (1-stretch)(x - n/2)``."""
    u = (1.0 - stretch) * (np.arange(n) - n / 2)
    return np.cos(xi * u) * np.exp(-0.5 * (u / sigma) ** 2)


# Two benchmark geometries (xi in rad/sample, sigma in samples), s = -0.1.
# Wide envelope: the two spectra barely overlap and the Fourier constant
# sits near its ceiling sqrt(1 + 1/(1-s)) / |s|.
GABOR_WIDE = (0.93, 40.0)
# Narrow envelope: the Fourier constant is still in its linear regime and
# grows with xi.
GABOR_NARROW = (0.5, 24.0)
GABOR_SIGMA = GABOR_WIDE[1]


@dataclass(frozen=True)
class GaborReport:
    xi: float
    s: float
    sigma: float
    fourier_C: float
    scatter_C: float

    @property
    def ratio(self) -> float:
        return self.scatter_C / self.fourier_C if self.fourier_C else 0.0


def gabor_benchmark(xi: float, s: float, fb: FilterBank, sigma: float = GABOR_SIGMA,
                    m_max: int = 3, policy: str = "frequency_decreasing") -> GaborReport:
    """Deformation constants of the Fourier modulus and of scattering for a dilated Gabor.

    ``fourier_C = || |f2_hat| - |f3_hat| || / (|s| ||f2||)`` and ``scatter_C``
    is the matching ratio for the distance between scattering path norms,
    with ``f3(x) = f2((1-s) x)``.
    """
    if not 0 < abs(s) < 1:
        if s == 0:
            return GaborReport(xi, s, sigma, 0.0, 0.0)
        raise ValueError("need 0 < |s| < 1")
    if xi * (1 + abs(s)) + 4.0 / sigma > 0.95 * np.pi:
        raise ValueError("Gabor spectrum too close to Nyquist; aliasing")
    n = fb.n
    if 8 * sigma * (1 + abs(s)) > n:
        raise ValueError("Gabor envelope does not fit in the grid")
    f2 = gabor(n, xi, sigma)
    f3 = gabor(n, xi, sigma, s)
    nrm = np.linalg.norm(f2)
    fd = np.linalg.norm(np.abs(np.fft.fft(f2)) - np.abs(np.fft.fft(f3))) / np.sqrt(n)
    a = scatter(f2, fb, m_max, policy, store_signals=False)
    b = scatter(f3, fb, m_max, policy, store_signals=False)
    sd = scattering_norm_distance(a, b)
    return GaborReport(xi, s, sigma, fd / (abs(s) * nrm), sd / (abs(s) * nrm))


def scattering_gradient(out: ScatteringOutput) -> Dict[Path, np.ndarray]:
    """Spectral derivative of every stored ``S_J[p] f``."""
    if out.oversampling != "full":
        raise ValueError("gradients need full-resolution outputs")
    omega = None
    grads = {}
    for p, c in out.coeffs.items():
        if c.s_signal is None:
            raise ValueError("gradients need stored signals")
        if omega is None:
            n = c.s_signal.shape[0]
            omega = 2 * np.pi * np.fft.fftfreq(n)
            if n % 2 == 0:
                omega[n // 2] = 0.0  # the Nyquist derivative of a real signal is ambiguous
        d = _ifft(1j * omega * _fft(c.s_signal))
        grads[p] = d if np.iscomplexobj(c.s_signal) else d.real
    return grads


@dataclass(frozen=True)
class TaylorReport:
    first: float
    second: float

    @property
    def ratio(self) -> float:
        return self.second / self.first if self.first > 0 else 0.0


def first_order_residual(f, c: float, fb: FilterBank, m_max: int = 2,
                         policy: str = "all") -> TaylorReport:
    """Translation distance with and without the first-order correction ``c * grad``."""
    f = np.asarray(f, dtype=float)
    a = scatter(f, fb, m_max, policy)
    if c == 0:
        return TaylorReport(0.0, 0.0)
    b = scatter(shift(f, c), fb, m_max, policy)
    grads = scattering_gradient(a)
    first = second = 0.0
    for p, ca in a.coeffs.items():
        diff = b.coeffs[p].s_signal - ca.s_signal
        first += float(np.sum(diff ** 2))
        second += float(np.sum((diff + c * grads[p]) ** 2))
    return TaylorReport(math.sqrt(first), math.sqrt(second))


def estimate_displacement(f, g, fb: FilterBank, m_max: int = 2, policy: str = "all",
                          rel_threshold: float = 1e-12, pool: Optional[int] = None) -> np.ndarray:
    """Least-squares displacement from scattering differences.

    Solves ``S_J[p] f - S_J[p] g = tau * d/dx S_J[p] f`` jointly over paths
    at every position.  With ``pool`` the normal equations are also summed
    over a centred window of that many samples, which trades resolution for
    a much less noisy estimate.  Positions whose normal equation is
    degenerate (below ``rel_threshold`` times its maximum) are NaN.
    """
    a = scatter(np.asarray(f, float), fb, m_max, policy)
    b = scatter(np.asarray(g, float), fb, m_max, policy)
    grads = scattering_gradient(a)
    num = np.zeros(fb.n)
    den = np.zeros(fb.n)
    for p, ca in a.coeffs.items():
        d = grads[p]
        num += (ca.s_signal - b.coeffs[p].s_signal) * d
        den += d * d
    if pool is not None and pool > 1:
        box = np.zeros(fb.n)
        box[:pool] = 1.0
        box_hat = _fft(np.roll(box, -(pool // 2)))
        num = _ifft(_fft(num) * box_hat).real
        den = _ifft(_fft(den) * box_hat).real
    scale = max(float(den.max()), 0.0)
    mask = den <= rel_threshold * scale if scale > 0 else np.ones(fb.n, bool)
    if np.all(mask):
        raise ValueError("displacement system is degenerate everywhere")
    tau = np.full(fb.n, np.nan)
    tau[~mask] = num[~mask] / den[~mask]
    return tau
