"""Analytic cubic-spline wavelet filter banks on a periodic frequency grid.

The mother wavelet is the orthonormal cubic-spline Battle-Lemarie wavelet,
restricted to positive frequencies and rescaled so that the dyadic family
satisfies the real-signal Littlewood-Paley identity with ``beta = 1/2``.
Only magnitudes are stored; the linear phase of the spline construction is
dropped.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy import integrate

PI = math.pi
ETA = 1.5 * PI

# symmetric truncation of the 2*pi-periodic spline sums
SPLINE_TERMS = 64


class ConvergenceError(RuntimeError):
    """A truncated series or completion step failed its numerical check."""


def _is_power_of_two(n: int) -> bool:
    return n > 0 and (n & (n - 1)) == 0


@dataclass(frozen=True)
class FrequencyGrid:
    """Uniform DFT frequencies ``2*pi*k/n`` wrapped into ``(-pi, pi]``."""

    n_samples: int

    def __post_init__(self):
        if not _is_power_of_two(int(self.n_samples)):
            raise ValueError(f"n_samples must be a power of two, got {self.n_samples}")

    @property
    def frequencies(self) -> np.ndarray:
        n = self.n_samples
        k = np.arange(n)
        k = np.where(k > n // 2, k - n, k)
        return 2 * PI * k / n

    @property
    def step(self) -> float:
        return 2 * PI / self.n_samples

    def mirror_index(self) -> np.ndarray:
        """Index of ``-omega`` for every grid point (Nyquist maps to itself)."""
        return (-np.arange(self.n_samples)) % self.n_samples


def _wrap(w):
    return np.mod(w + PI, 2 * PI) - PI


def spline_tail_bound(terms: int = SPLINE_TERMS) -> float:
    """Upper bound on the neglected part of ``sum_k (r/(r+2k pi))^8``, |r| <= pi."""
    return (2 * terms - 1) ** -7 / 7.0


def _spline_sum(r: np.ndarray, terms: int = SPLINE_TERMS) -> np.ndarray:
    # sum_k (r / (r + 2 k pi))^8 for |r| <= pi; equals 1 at r = 0
    r = np.asarray(r, dtype=float)
    total = np.zeros_like(r)
    # smallest terms first; repeated squaring is far faster than ** 8
    for k in range(terms, 0, -1):
        for shift in (2 * PI * k, -2 * PI * k):
            q = r / (r + shift)
            q *= q
            q *= q
            q *= q
            total += q
    return total + 1.0


def _check_spline_terms(terms: int) -> None:
    if spline_tail_bound(terms) > 1e-12:
        raise ConvergenceError(
            f"spline sum with |k| <= {terms} leaves a relative tail of "
            f"{spline_tail_bound(terms):.2e} > 1e-12"
        )


def battle_lemarie_psi_sq(omega, terms: int = SPLINE_TERMS) -> np.ndarray:
    """Squared modulus of the real orthonormal cubic Battle-Lemarie wavelet.

    Uses ``S8(w/2 + pi) / (w^8 S8(w) S8(w/2))`` with every ``S8`` factored
    through its wrapped argument so that the removable singularities at
    multiples of ``2*pi`` cancel analytically.
    """
    _check_spline_terms(terms)
    w = np.abs(np.asarray(omega, dtype=float))
    r1, r2, r3 = _wrap(w), _wrap(w / 2), _wrap(w / 2 + PI)
    out = np.zeros_like(w)
    nz = w > 0
    if not np.any(nz):
        return out
    w, r1, r2, r3 = w[nz], r1[nz], r2[nz], r3[nz]
    # r1 == 2*r3 whenever |r3| < pi/2, which is where r3 may vanish
    far = np.abs(r3) >= PI / 2
    ratio = np.full_like(w, 256.0)
    ratio[far] = (r1[far] / r3[far]) ** 8
    val = ratio * (r2 / w) ** 8 * _spline_sum(r3, terms) / (
        _spline_sum(r1, terms) * _spline_sum(r2, terms)
    )
    out[nz] = val
    return out


def battle_lemarie_phi_sq(omega, terms: int = SPLINE_TERMS) -> np.ndarray:
    """Squared modulus of the orthonormal cubic-spline scaling function."""
    _check_spline_terms(terms)
    w = np.abs(np.asarray(omega, dtype=float))
    r = _wrap(w)
    out = np.ones_like(w)
    nz = w > 0
    out[nz] = (r[nz] / w[nz]) ** 8 / _spline_sum(r[nz], terms)
    return out


def analytic_spline_wavelet(omega) -> np.ndarray:
    """Analytic mother ``|psi_hat|`` normalised for ``beta = 1/2``.

    Zero for ``omega <= 0``; equal to ``sqrt(2) |psi_tilde_hat|`` above.
    """
    w = np.asarray(omega, dtype=float)
    out = np.sqrt(2.0 * battle_lemarie_psi_sq(w))
    return np.where(w > 0, out, 0.0)


def build_battle_lemarie_mother(grid: FrequencyGrid) -> np.ndarray:
    """Mother wavelet magnitude sampled on ``grid`` (no dilation)."""
    if grid.n_samples < 256:
        raise ValueError("the mother wavelet needs n_samples >= 256 to be resolved")
    return analytic_spline_wavelet(grid.frequencies)


def box_spline_rho(omega) -> np.ndarray:
    """Fourier transform ``(sin(w/2)/(w/2))^4`` of the centred cubic B-spline."""
    if isinstance(omega, FrequencyGrid):
        omega = omega.frequencies
    w = np.asarray(omega, dtype=float)
    return np.sinc(w / (2 * PI)) ** 4


def _phi_sq(omega_abs, mother: Callable, beta: float, J: int = 0,
            cutoff: float = 2.0 ** 14 * PI) -> np.ndarray:
    # beta * sum_{j <= -J} |psi_hat(2^{-j} |w|)|^2, truncated once the dilated
    # argument passes `cutoff` where |psi_hat|^2 is below 1e-30
    w = np.abs(np.asarray(omega_abs, dtype=float))
    out = np.zeros_like(w)
    arg = w * 2.0 ** J
    active = (arg > 0) & (arg < cutoff)
    while np.any(active):
        out[active] += mother(arg[active]) ** 2
        arg = arg * 2.0
        active &= arg < cutoff
    out *= beta
    out[w == 0] = 1.0
    return out


def _integrate_positive(f: Callable) -> float:
    # Simpson on dyadic segments of [0, 2^12 pi]; the integrands decay like w^-8
    edges = [0.0] + [PI * 2.0 ** k for k in range(-8, 13)]
    total = 0.0
    for a, b in zip(edges[:-1], edges[1:]):
        x = np.linspace(a, b, 2049)
        total += integrate.simpson(f(x), x=x)
    return float(total)


@functools.lru_cache(maxsize=None)
def _mother_norm_sq(mother: Callable) -> float:
    # (1/2pi) int_0^inf |psi_hat|^2
    return _integrate_positive(lambda w: mother(w) ** 2) / (2 * PI)


def _phi_norm_sq(mother: Callable, beta: float) -> float:
    # dilating the sum term by term gives 2 * beta * sum_{j<=0} 2^j * ||psi||^2
    return 4 * beta * _mother_norm_sq(mother)


@dataclass(frozen=True, eq=False)
class FilterBank:
    """Sampled Fourier-domain filters of one dyadic wavelet frame.

    ``psi_hat[i]`` is the filter of scale exponent ``scales[i]`` (largest
    first), sampled as ``mother(2**-j * omega)``.  ``phi_hat`` is the
    averaging filter at scale ``2**J``.
    """

    grid: FrequencyGrid
    scales: tuple
    psi_hat: np.ndarray
    phi_hat: np.ndarray
    J: int
    beta: float = 0.5
    eta: float = ETA
    psi_norm_sq: float = 1.0
    phi_norm_sq: float = 2.0
    completion: bool = True
    mother: Callable = field(default=analytic_spline_wavelet, repr=False)

    @property
    def n(self) -> int:
        return self.grid.n_samples

    @property
    def j_max(self) -> int:
        return self.scales[0]

    def psi(self, j: int) -> np.ndarray:
        try:
            return self.psi_hat[self.scales.index(j)]
        except ValueError:
            raise KeyError(f"scale exponent {j} not in bank {self.scales}") from None

    def phi_sq_continuous(self, omega, J: int = 0) -> np.ndarray:
        """``|phi_hat(2^J omega)|^2`` off the grid, by the same truncated sum."""
        return _phi_sq(omega, self.mother, self.beta, J)


def _freeze(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a)
    a.setflags(write=False)
    return a


def _littlewood_paley_sum(psi_hat: np.ndarray, phi_hat: np.ndarray, beta: float,
                          grid: FrequencyGrid) -> np.ndarray:
    pos = np.sum(psi_hat ** 2, axis=0)
    return phi_hat ** 2 + beta * (pos + pos[grid.mirror_index()])


@functools.lru_cache(maxsize=64)
def build_filter_bank(n: int, J: int, j_max: int = -1, completion: bool = True,
                      mother: Callable = analytic_spline_wavelet) -> FilterBank:
    """Build the dyadic bank with wavelet scales ``j_max, ..., -J+1``.

    With ``completion`` the finest filter absorbs the energy of every finer
    dyadic band, which makes the discrete Littlewood-Paley sum equal to one
    at every grid frequency.
    """
    grid = FrequencyGrid(int(n))
    if j_max > 0:
        raise ValueError("j_max must be <= 0; finer wavelets live entirely above Nyquist")
    if -J >= j_max:
        raise ValueError(f"empty scale range: need -J < j_max, got J={J}, j_max={j_max}")
    if 2.0 ** J > 2 * n:
        raise ValueError(f"averaging scale 2^{J} exceeds twice the grid length {n}")
    beta = 0.5
    omega = grid.frequencies
    positive = omega > 0
    scales = tuple(range(j_max, -J, -1))

    psi = np.zeros((len(scales), n))
    for i, j in enumerate(scales):
        psi[i, positive] = mother(2.0 ** -j * omega[positive])
    phi = np.sqrt(_phi_sq(omega, mother, beta, J))
    # the Nyquist bin is its own mirror: split its energy between +pi and -pi
    nyq = n // 2
    psi[:, nyq] /= math.sqrt(2.0)

    if completion:
        residual = 1.0 - _littlewood_paley_sum(psi, phi, beta, grid)
        if residual.min() < -1e-8:
            raise ConvergenceError(
                f"completion impossible: Littlewood-Paley sum exceeds 1 by {-residual.min():.2e}"
            )
        residual = np.clip(residual, 0.0, None)
        gain = np.where(positive, 1.0 / beta, 0.0)
        gain[nyq] = 1.0 / (2 * beta)
        psi[0] = np.sqrt(psi[0] ** 2 + residual * gain)

    return FilterBank(
        grid=grid,
        scales=scales,
        psi_hat=_freeze(psi),
        phi_hat=_freeze(phi),
        J=int(J),
        beta=beta,
        eta=ETA,
        psi_norm_sq=_mother_norm_sq(mother),
        phi_norm_sq=_phi_norm_sq(mother, beta),
        completion=bool(completion),
        mother=mother,
    )


def littlewood_paley_deviation(fb: FilterBank, band: Optional[Sequence[float]] = None) -> float:
    """Max ``|beta sum |psi_hat|^2 + |phi_hat|^2 - 1|`` over nonzero frequencies.

    ``band = (lo, hi)`` restricts the maximum to ``lo <= |omega| <= hi``.
    """
    lp = _littlewood_paley_sum(fb.psi_hat, fb.phi_hat, fb.beta, fb.grid)
    w = np.abs(fb.grid.frequencies)
    mask = w > 0
    if band is not None:
        lo, hi = band
        mask &= (w >= lo) & (w <= hi)
    if not np.any(mask):
        return 0.0
    return float(np.max(np.abs(lp[mask] - 1.0)))


@dataclass(frozen=True)
class AdmissibilityReport:
    alpha: float
    domination_ok: bool
    domination_margin: float
    argmin_omega: float
    probe_step: float
    k_tail: float
    eta: float
    normalization: str


# squared gain applied to the bank's |psi_hat|^2 before evaluating alpha
_ALPHA_GAIN = {"unitary": 1.0, "analytic": 2.0}


def _penalty(x: np.ndarray, rho_hat: Callable, k_first: int, k_last: int) -> np.ndarray:
    s = np.zeros_like(x)
    for k in range(k_first, k_last + 1):
        s += k * (1.0 - np.abs(rho_hat(2.0 ** -k * x)) ** 2)
    return s


def admissibility_alpha(fb: FilterBank, rho_hat: Callable = box_spline_rho,
                        eta: Optional[float] = None, k_max: int = 60,
                        probe_grid: Optional[np.ndarray] = None,
                        normalization: str = "analytic") -> AdmissibilityReport:
    """Infimum over ``omega in [1, 2]`` of ``sum_j Psi(2^-j w) |psi_hat(2^-j w)|^2``.

    ``normalization="analytic"`` evaluates the doubled analytic wavelet
    ``2 * psi_tilde_hat`` on positive frequencies; ``"unitary"`` uses the
    bank's own ``beta = 1/2`` normalisation (half the value).
    """
    if k_max < 20:
        raise ValueError("k_max must be >= 20")
    if normalization not in _ALPHA_GAIN:
        raise ValueError(f"normalization must be one of {sorted(_ALPHA_GAIN)}")
    eta = fb.eta if eta is None else float(eta)
    probe = np.linspace(1.0, 2.0, 4096) if probe_grid is None else np.asarray(probe_grid, float)
    if probe.size == 0:
        raise ValueError("probe grid is empty")
    if abs(float(np.squeeze(rho_hat(np.array([0.0]))) - 1.0)) > 1e-12:
        raise ValueError("rho_hat(0) must equal 1")

    gain = _ALPHA_GAIN[normalization]
    total = np.zeros_like(probe)
    tail = 0.0
    for j in range(-40, 41):
        w = 2.0 ** -j * probe
        weight = gain * fb.mother(w) ** 2
        if weight.max() < 1e-40:
            continue
        x = w - eta
        psi_cap = np.abs(rho_hat(x)) ** 2 - _penalty(x, rho_hat, 1, k_max)
        total += psi_cap * weight
        # past k_max the arguments are tiny and 1 - rho^2 grows with |x|
        ix = int(np.argmax(np.abs(x)))
        tail = tail + _penalty(x[ix:ix + 1], rho_hat, k_max + 1, k_max + 40)[0] * weight.max()
    k_tail = float(np.max(np.abs(tail)))
    if k_tail > 1e-8:
        raise ConvergenceError(f"k-sum tail {k_tail:.2e} exceeds 1e-8; raise k_max")

    i = int(np.argmin(total))
    step = float(probe[1] - probe[0]) if probe.size > 1 else 0.0

    # |rho_hat(w)| <= |phi_hat(2w)| on the bank grid and a wider uniform grid
    w_dom = np.concatenate([fb.grid.frequencies, np.linspace(0.0, 8 * PI, 8193)])
    phi2 = np.sqrt(fb.phi_sq_continuous(2.0 * w_dom))
    margin = float(np.min(phi2 - np.abs(rho_hat(w_dom))))
    return AdmissibilityReport(
        alpha=float(total[i]),
        domination_ok=margin >= -1e-6,
        domination_margin=margin,
        argmin_omega=float(probe[i]),
        probe_step=step,
        k_tail=k_tail,
        eta=eta,
        normalization=normalization,
    )
