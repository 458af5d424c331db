"""Stationary process models and expected-scattering estimators.

Every realisation draws from its own child of a ``numpy.random.SeedSequence``
so that results depend only on ``(model, n, seed, realisation index)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from scatterlab.filterbank import FilterBank
from scatterlab.measure import OMEGA_SCALE, CurveRecord, PathMeasureTable, _ensure_layout
from scatterlab.scatter import Path, _fft, _ifft, scatter, wavelet_energies
from scatterlab.stability import DeformationField, k_tau, tau_metrics, warp


def _check_n(n: int) -> None:
    if n <= 0 or n & (n - 1):
        raise ValueError(f"n must be a power of two, got {n}")


@dataclass(frozen=True)
class GaussianWhite:
    sigma: float = 1.0

    def draw(self, n: int, rng: np.random.Generator) -> np.ndarray:
        if self.sigma == 0:
            return np.zeros(n)
        return self.sigma * rng.standard_normal(n)


def box_kernel(length: int = 16) -> np.ndarray:
    """Moving-average kernel with unit l2 norm, so white input keeps unit variance."""
    return np.full(length, 1.0 / math.sqrt(length))


@dataclass(frozen=True)
class MovingAverageGaussian:
    """White Gaussian noise circularly filtered by ``kernel``, rescaled to unit variance."""

    kernel: Tuple[float, ...] = tuple(box_kernel(16))

    @property
    def correlation_length(self) -> int:
        return len(self.kernel)

    def draw(self, n: int, rng: np.random.Generator) -> np.ndarray:
        k = np.asarray(self.kernel, dtype=float)
        k = k / np.linalg.norm(k)
        pad = np.zeros(n)
        pad[: k.size] = k
        w = rng.standard_normal(n)
        return _ifft(_fft(w) * _fft(pad)).real


@dataclass(frozen=True)
class Bernoulli:
    """I.i.d. ``{0, 1}`` draws with parameter ``p``, centred and scaled to unit variance."""

    p: float = 0.01

    def __post_init__(self):
        if not 0 < self.p < 1:
            raise ValueError(f"Bernoulli parameter must lie in (0, 1), got {self.p}")

    def draw(self, n: int, rng: np.random.Generator) -> np.ndarray:
        b = (rng.random(n) < self.p).astype(float)
        return (b - self.p) / math.sqrt(self.p * (1 - self.p))


@dataclass(frozen=True)
class TauModel:
    """Smoothed Gaussian displacement with a prescribed ``sup |grad tau|``.

    ``correlation_length`` (samples) sets the low-pass cutoff ``n / length``
    cycles.  Each draw is rescaled so its gradient sup norm equals
    ``amplitude``.
    """

    amplitude: float
    correlation_length: float = 64.0

    def draw(self, n: int, rng: np.random.Generator) -> DeformationField:
        if self.amplitude == 0:
            return DeformationField(np.zeros(n))
        kmax = max(1, int(n / self.correlation_length))
        spec = np.zeros(n, dtype=complex)
        k = np.arange(1, kmax + 1)
        spec[k] = rng.standard_normal(kmax) + 1j * rng.standard_normal(kmax)
        spec[-k] = np.conj(spec[k])
        tau = np.fft.ifft(spec).real
        g = tau_metrics(tau)["sup_grad"]
        return DeformationField(tau * (self.amplitude / g))


@dataclass(frozen=True)
class Deformed:
    base: object
    tau_model: TauModel

    def draw(self, n: int, rng: np.random.Generator) -> np.ndarray:
        x = self.base.draw(n, rng)
        return warp(x, self.tau_model.draw(n, rng))


def realization_rngs(seed: int, count: int) -> List[np.random.Generator]:
    return [np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(count)]


def sample(model, n: int, seed: int) -> np.ndarray:
    """One realisation of ``model``, deterministic in ``(model, n, seed)``."""
    _check_n(n)
    return model.draw(n, np.random.default_rng(seed))


@dataclass(frozen=True)
class SpectrumRecord:
    mean: float          # estimate of E(U[p] X)
    variance: float      # per-sample variance of S_J[p] X around its mean
    mean_square: float   # E|S_J[p] X|^2 per sample
    count: int
    stderr: float        # standard error of `mean` across realisations


@dataclass
class ScatteringSpectrumEstimate:
    records: Dict[Path, SpectrumRecord]
    J: int
    m_max: int
    n: int
    realizations: int
    seed: int
    policy: str
    input_mean_square: float
    residual_mean_square: float

    def total_mean_square(self) -> float:
        return float(sum(r.mean_square for r in self.records.values()))

    def to_dict(self) -> dict:
        from scatterlab.scatter import format_path
        return {
            "J": self.J, "m_max": self.m_max, "n": self.n,
            "realizations": self.realizations, "seed": self.seed, "policy": self.policy,
            "input_mean_square": self.input_mean_square,
            "residual_mean_square": self.residual_mean_square,
            "paths": [
                {"p": format_path(p), "mean": r.mean, "variance": r.variance,
                 "mean_square": r.mean_square, "count": r.count, "stderr": r.stderr}
                for p, r in self.records.items()
            ],
        }


def expected_scattering(model, fb: FilterBank, m_max: int, realizations: int, seed: int,
                        policy: str = "frequency_decreasing") -> ScatteringSpectrumEstimate:
    """Monte-Carlo estimate of ``E(U[p] X)`` and of the spread of ``S_J[p] X``."""
    if realizations < 1:
        raise ValueError("need at least one realisation")
    paths: Optional[List[Path]] = None
    means, sq = [], []
    inp, resid = [], []
    n = fb.n
    for rng in realization_rngs(seed, realizations):
        x = model.draw(n, rng)
        out = scatter(x, fb, m_max, policy)
        if paths is None:
            paths = list(out.coeffs)
        S = np.stack([out.coeffs[p].s_signal for p in paths])
        means.append(S.mean(axis=1))
        sq.append((S ** 2).mean(axis=1))
        inp.append(float(np.mean(x ** 2)))
        resid.append(out.residual_energy[m_max + 1] / n)
    means = np.stack(means)
    sq = np.stack(sq)
    mu = means.mean(axis=0)
    ms = sq.mean(axis=0)
    var = np.maximum(ms - mu ** 2, 0.0)
    se = means.std(axis=0, ddof=1) / math.sqrt(realizations) if realizations > 1 else np.full_like(mu, np.nan)
    records = {p: SpectrumRecord(float(mu[i]), float(var[i]), float(ms[i]), realizations, float(se[i]))
               for i, p in enumerate(paths)}
    return ScatteringSpectrumEstimate(records, fb.J, m_max, n, realizations, seed,
                                      policy, float(np.mean(inp)), float(np.mean(resid)))


def first_layer_slope(est: ScatteringSpectrumEstimate, scales: Optional[Sequence[int]] = None) -> float:
    """Fitted slope of ``log2 E(U[(j,)] X)^2`` against ``j``."""
    js = [p[0] for p in est.records if len(p) == 1]
    if scales is not None:
        js = [j for j in js if j in scales]
    y = [math.log2(est.records[(j,)].mean ** 2) for j in js]
    return float(np.polyfit(js, y, 1)[0])


@dataclass
class ConsistencyCurve:
    J: List[int]
    log2_error: List[float]
    slope: float
    log2_stderr: List[float] = field(default_factory=list)  # delta-method standard errors

    def slope_between(self, lo: int, hi: int) -> float:
        pts = [(j, e) for j, e in zip(self.J, self.log2_error) if lo <= j <= hi]
        xs, ys = zip(*pts)
        return float(np.polyfit(xs, ys, 1)[0])


def consistency_curve(model, banks: Sequence[FilterBank], m_max: int, realizations: int,
                      seed: int) -> ConsistencyCurve:
    """``log2 E ||S_J X - S-bar X||^2`` per sample, over frequency-decreasing paths.

    The expected scattering is taken from an independent run with four
    times the realisations on the bank with the largest ``J``; its paths
    cover every smaller ``J``.
    """
    banks = sorted(banks, key=lambda b: b.J)
    oracle_seed = int(np.random.SeedSequence(seed).spawn(2)[1].generate_state(1)[0])
    oracle = expected_scattering(model, banks[-1], m_max, 4 * realizations, oracle_seed)
    Js, errs, ses = [], [], []
    for fb in banks:
        per = []
        for rng in realization_rngs(seed, realizations):
            x = model.draw(fb.n, rng)
            out = scatter(x, fb, m_max, "frequency_decreasing")
            total = 0.0
            for p, c in out.coeffs.items():
                ref = oracle.records[p].mean if p in oracle.records else 0.0
                total += float(np.mean((c.s_signal - ref) ** 2))
            per.append(total)
        mean = float(np.mean(per))
        Js.append(fb.J)
        errs.append(math.log2(max(mean, 1e-300)))
        if realizations > 1 and mean > 0:
            ses.append(float(np.std(per, ddof=1) / math.sqrt(realizations) / (mean * math.log(2))))
        else:
            ses.append(float("nan"))
    slope = float(np.polyfit(Js, errs, 1)[0]) if len(Js) > 1 else float("nan")
    return ConsistencyCurve(Js, errs, slope, ses)


def power_spectrum_curve(x, fb: FilterBank, table: PathMeasureTable) -> List[CurveRecord]:
    """Spike curve: ``S-bar X(p)^2 / mu_J(p)`` over each path's averaging interval.

    ``S-bar X(p)`` is the spatial mean of ``U[p] X`` from the single
    realisation ``x``; a record's mass ``value * width`` is therefore the
    squared expected coefficient.
    """
    _ensure_layout(table)
    out = scatter(np.asarray(x, float), fb, table.m_max, table.policy, table.strict,
                  store_signals=True)
    recs = []
    for p, e in table.entries.items():
        a, _ = e.interval
        mean = float(np.mean(out.coeffs[p].s_signal))
        width = max(e.mu_J, 1e-30)
        recs.append(CurveRecord(a * OMEGA_SCALE, (a + e.mu_J) * OMEGA_SCALE,
                                mean ** 2 / width, p, len(p)))
    recs.sort(key=lambda r: (r.start, r.end))
    return recs


def spectrum_mass_by_length(records: Sequence[CurveRecord]) -> Dict[int, float]:
    """Fraction of total spike mass carried by paths of each length."""
    mass: Dict[int, float] = {}
    for r in records:
        m = r.value * (r.end - r.start) / OMEGA_SCALE
        mass[r.length] = mass.get(r.length, 0.0) + m
    total = sum(mass.values())
    return {k: (v / total if total > 0 else 0.0) for k, v in sorted(mass.items())}


def band_second_moment(x, fb: FilterBank, j: int) -> float:
    """Per-sample ``|X * psi_j|^2`` from one realisation."""
    return float(wavelet_energies(x, fb)[fb.scales.index(j)] / fb.n)


@dataclass
class DeformationRatio:
    amplitude: float
    numerator: float      # E ||S_J L_tau X - S_J X||^2 per sample
    K: float              # E(K_first(tau)^2)
    ratio: float
    rejected: int


def random_deformation_ratio(model, tau_model: TauModel, fb: FilterBank, m_max: int,
                             realizations: int, seed: int,
                             policy: str = "frequency_decreasing") -> DeformationRatio:
    """Monte-Carlo ``E||S_J L_tau X - S_J X||^2 / (m E|X|^2 K(tau))`` with ``m = m_max + 1``."""
    num, ks, power = [], [], []
    rejected = 0
    for rng in realization_rngs(seed, realizations):
        x = model.draw(fb.n, rng)
        for _ in range(20):
            tau = tau_model.draw(fb.n, rng)
            if tau.metrics["sup_grad"] <= 0.5:
                break
            rejected += 1
        else:
            raise RuntimeError("displacement model rejected too often")
        if rejected > realizations // 2:
            raise RuntimeError("displacement rejection rate above 50%")
        a = scatter(x, fb, m_max, policy)
        b = scatter(warp(x, tau), fb, m_max, policy)
        d = 0.0
        for p, c in a.coeffs.items():
            d += float(np.sum((b.coeffs[p].s_signal - c.s_signal) ** 2))
        num.append(d / fb.n)
        ks.append(k_tau(tau.metrics, fb.J) ** 2)
        power.append(float(np.mean(x ** 2)))
    E_num, K, P = float(np.mean(num)), float(np.mean(ks)), float(np.mean(power))
    denom = (m_max + 1) * P * K
    return DeformationRatio(tau_model.amplitude, E_num, K, E_num / denom if denom > 0 else 0.0,
                            rejected)
