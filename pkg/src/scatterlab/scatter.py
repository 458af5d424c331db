"""Scattering propagator, windowed scattering and their energy ledgers.

Paths are tuples of integer scale exponents ``(j1, ..., jm)``; the empty
tuple is the root.  Every convolution is circular and computed by FFT on the
full grid, so integer translations commute exactly with every output.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import scipy.fft as sfft

from scatterlab.filterbank import FilterBank

Path = Tuple[int, ...]

EMPTY_PATH_TEXT = "∅"
POLICIES = ("all", "frequency_decreasing")

# rows per batched FFT inside the cascade; bounds peak memory
_CHUNK_ROWS = 256


def fft_workers() -> int:
    """Thread count for scipy.fft, from ``SCATTERLAB_THREADS`` if set."""
    value = os.environ.get("SCATTERLAB_THREADS")
    if value:
        try:
            return max(1, int(value))
        except ValueError:
            pass
    return os.cpu_count() or 1


def _fft(x):
    return sfft.fft(x, axis=-1, workers=fft_workers())


def _ifft(x):
    return sfft.ifft(x, axis=-1, workers=fft_workers())


def format_path(p: Sequence[int]) -> str:
    """Canonical text form: ``"∅"`` or ``"j1/j2/..."``."""
    return EMPTY_PATH_TEXT if len(p) == 0 else "/".join(str(int(j)) for j in p)


def parse_path(text: str) -> Path:
    text = text.strip()
    if text in ("", EMPTY_PATH_TEXT, "empty"):
        return ()
    try:
        return tuple(int(tok) for tok in text.split("/"))
    except ValueError:
        raise ValueError(f"malformed path {text!r}") from None


def normalize_policy(policy: str) -> str:
    aliases = {"all": "all", "dec": "frequency_decreasing",
               "frequency_decreasing": "frequency_decreasing",
               "frequency-decreasing": "frequency_decreasing"}
    try:
        return aliases[policy]
    except KeyError:
        raise ValueError(f"unknown path policy {policy!r}") from None


def _as_signal(f, fb: FilterBank) -> np.ndarray:
    x = np.asarray(f)
    if x.ndim != 1:
        raise ValueError("signals must be one-dimensional")
    if x.shape[0] != fb.n:
        raise ValueError(f"signal length {x.shape[0]} does not match bank length {fb.n}")
    if not np.iscomplexobj(x):
        x = x.astype(float, copy=False)
    return x


def _check_path(p: Sequence[int], fb: FilterBank) -> Path:
    p = tuple(int(j) for j in p)
    for j in p:
        if j not in fb.scales:
            raise ValueError(f"scale exponent {j} outside bank range {fb.scales}")
    return p


def one_step_propagator(f, fb: FilterBank):
    """Return ``(A_J f, {j: |f * psi_j|})``."""
    x = _as_signal(f, fb)
    fh = _fft(x)
    avg = _ifft(fh * fb.phi_hat)
    if not np.iscomplexobj(x):
        avg = avg.real
    mods = np.abs(_ifft(fh[None, :] * fb.psi_hat))
    return avg, {j: mods[i] for i, j in enumerate(fb.scales)}


def u_path(f, p: Sequence[int], fb: FilterBank) -> np.ndarray:
    """Cascade ``|||f * psi_j1| * psi_j2| ... * psi_jm|``; the empty path returns f."""
    x = _as_signal(f, fb)
    for j in _check_path(p, fb):
        x = np.abs(_ifft(_fft(x) * fb.psi(j)))
    return x


@dataclass(frozen=True)
class Coefficient:
    """One scattering path: averaged signal and the two norms."""

    s_signal: Optional[np.ndarray]
    s_norm: float
    u_norm: float


@dataclass
class ScatteringOutput:
    """Windowed scattering coefficients keyed by path, with energy ledgers.

    ``layer_energy[m]`` sums ``||S_J[p] f||^2`` over paths of length ``m`` and
    ``residual_energy[m]`` sums ``||U[p] f||^2``.  The residual list has one
    extra entry, for length ``m_max + 1``, obtained from the Fourier energies
    of the children without forming them.
    """

    J: int
    m_max: int
    policy: str
    coeffs: Dict[Path, Coefficient]
    layer_energy: List[float]
    residual_energy: List[float]
    input_norm_sq: float
    n: int
    strict: bool = False
    oversampling: str = "full"
    meta: dict = field(default_factory=dict)

    def paths(self, length: Optional[int] = None) -> List[Path]:
        if length is None:
            return list(self.coeffs)
        return [p for p in self.coeffs if len(p) == length]

    def __getitem__(self, p) -> Coefficient:
        if isinstance(p, str):
            p = parse_path(p)
        return self.coeffs[tuple(p)]

    def __contains__(self, p) -> bool:
        if isinstance(p, str):
            p = parse_path(p)
        return tuple(p) in self.coeffs

    def captured_fraction(self) -> float:
        if self.input_norm_sq == 0:
            return 1.0
        return float(sum(self.layer_energy) / self.input_norm_sq)

    def to_dict(self, include_signals: bool = False) -> dict:
        paths = []
        for p, c in self.coeffs.items():
            rec = {"p": format_path(p), "s_norm": c.s_norm, "u_norm": c.u_norm}
            if include_signals and c.s_signal is not None:
                rec["signal"] = np.asarray(c.s_signal).tolist()
            paths.append(rec)
        return {
            "J": self.J,
            "m_max": self.m_max,
            "policy": self.policy,
            "paths": paths,
            "layer_energy": list(self.layer_energy),
            "residual_energy": list(self.residual_energy),
            **self.meta,
        }


def _children(p: Path, scales: Sequence[int], policy: str, strict: bool) -> List[int]:
    if policy == "all" or not p:
        return list(scales)
    last = p[-1]
    if strict:
        return [j for j in scales if j < last]
    return [j for j in scales if j <= last]


def scatter(f, fb: FilterBank, m_max: int = 3, policy: str = "all", strict: bool = False,
            store_signals: bool = True, oversampling: str = "full") -> ScatteringOutput:
    """Windowed scattering of ``f`` over all paths of length ``<= m_max``.

    Parameters
    ----------
    f : array
        Signal of length ``fb.n``.
    fb : FilterBank
    m_max : int
        Longest path length kept.
    policy : {"all", "frequency_decreasing"}
        With ``"frequency_decreasing"`` a child scale must not exceed the
        last scale of its parent (strictly below it if ``strict``).
    store_signals : bool
        Keep the averaged signals; norms are always recorded.
    oversampling : {"full", "critical"}
        ``"critical"`` stores averaged signals subsampled with step
        ``2**(J-1)``.  Norms always come from the full-resolution signals.
    """
    if m_max < 0:
        raise ValueError("m_max must be >= 0")
    policy = normalize_policy(policy)
    if oversampling not in ("full", "critical"):
        raise ValueError("oversampling must be 'full' or 'critical'")
    x = _as_signal(f, fb)
    step = max(1, min(fb.n, 2 ** max(fb.J - 1, 0))) if oversampling == "critical" else 1
    psi_sq = fb.psi_hat ** 2
    index = {j: i for i, j in enumerate(fb.scales)}

    coeffs: Dict[Path, Coefficient] = {}
    layer = [0.0] * (m_max + 1)
    resid = [0.0] * (m_max + 2)

    def visit(paths: List[Path], U: np.ndarray, depth: int) -> None:
        Uh = _fft(U)
        S = _ifft(Uh * fb.phi_hat)
        if not np.iscomplexobj(U):
            S = S.real
        s_sq = np.sum(np.abs(S) ** 2, axis=1)
        u_sq = np.sum(np.abs(U) ** 2, axis=1)
        for i, p in enumerate(paths):
            sig = None
            if store_signals:
                sig = np.array(S[i, ::step])
            coeffs[p] = Coefficient(sig, float(np.sqrt(s_sq[i])), float(np.sqrt(u_sq[i])))
        layer[depth] += float(np.sum(s_sq))
        resid[depth] += float(np.sum(u_sq))

        spectra = np.abs(Uh) ** 2
        if depth == m_max:
            # children energies straight from Parseval
            child_energy = spectra @ psi_sq.T / fb.n
            for i, p in enumerate(paths):
                keep = [index[j] for j in _children(p, fb.scales, policy, strict)]
                resid[depth + 1] += float(np.sum(child_energy[i, keep]))
            return
        pending_paths: List[Path] = []
        pending_rows: List[Tuple[int, int]] = []

        def flush():
            if not pending_paths:
                return
            rows = np.array([r for r, _ in pending_rows])
            cols = np.array([c for _, c in pending_rows])
            child = np.abs(_ifft(Uh[rows] * fb.psi_hat[cols]))
            visit(list(pending_paths), child, depth + 1)
            pending_paths.clear()
            pending_rows.clear()

        for i, p in enumerate(paths):
            for j in _children(p, fb.scales, policy, strict):
                pending_paths.append(p + (j,))
                pending_rows.append((i, index[j]))
                if len(pending_paths) >= _CHUNK_ROWS:
                    flush()
        flush()

    visit([()], x[None, :], 0)
    ordered = dict(sorted(coeffs.items(), key=lambda kv: (len(kv[0]), [-j for j in kv[0]])))
    return ScatteringOutput(
        J=fb.J,
        m_max=int(m_max),
        policy=policy,
        coeffs=ordered,
        layer_energy=layer,
        residual_energy=resid,
        input_norm_sq=float(np.sum(np.abs(x) ** 2)),
        n=fb.n,
        strict=bool(strict),
        oversampling=oversampling,
    )


@dataclass(frozen=True)
class EnergyBudget:
    max_violation: float
    violations: List[float]
    captured_fraction: float
    residual_nonincreasing: bool


def energy_budget(out: ScatteringOutput) -> EnergyBudget:
    """Check ``||f||^2 = sum_{k<m} layer[k] + residual[m]`` for ``m <= m_max + 1``."""
    if out.policy != "all":
        raise ValueError("the energy ledger only telescopes for policy 'all'")
    total = out.input_norm_sq
    scale = total if total > 0 else 1.0
    violations = []
    acc = 0.0
    for m in range(out.m_max + 2):
        violations.append(abs(total - acc - out.residual_energy[m]) / scale)
        if m <= out.m_max:
            acc += out.layer_energy[m]
    r = out.residual_energy
    mono = all(r[m + 1] <= r[m] * (1 + 1e-12) + 1e-300 for m in range(len(r) - 1))
    return EnergyBudget(
        max_violation=float(max(violations)),
        violations=violations,
        captured_fraction=out.captured_fraction(),
        residual_nonincreasing=mono,
    )


def wavelet_energies(f, fb: FilterBank) -> np.ndarray:
    """``||f * psi_j||^2`` for every bank scale, in bank order."""
    x = _as_signal(f, fb)
    return (np.abs(_fft(x)) ** 2) @ (fb.psi_hat ** 2).T / fb.n


def log_sobolev_norm(f, fb: FilterBank, j_cap: Optional[int] = None) -> float:
    """Scale-weighted wavelet energy ``(sum_i i ||f * psi_(i)||^2)^(1/2)``.

    Scales are re-indexed so that ``i = 0`` is the coarsest wavelet and
    ``i`` grows toward high frequencies; ``j_cap`` bounds ``i``.
    """
    energies = wavelet_energies(f, fb)[::-1]  # coarsest first
    idx = np.arange(energies.size)
    if j_cap is not None:
        if not 0 <= j_cap < energies.size:
            raise ValueError(f"j_cap must lie in [0, {energies.size - 1}]")
        energies, idx = energies[: j_cap + 1], idx[: j_cap + 1]
    return float(np.sqrt(np.sum(idx * energies)))


def propagated_energy(f, fb: FilterBank, depth: int = 8) -> float:
    """``sum_m ||U[Lambda^m] f||^2`` for ``m <= depth`` (policy all)."""
    out = scatter(f, fb, m_max=depth - 1, store_signals=False)
    return float(sum(out.residual_energy))


def arrival_logfreq_profile(out: ScatteringOutput) -> List[Optional[float]]:
    """Energy-weighted mean of the last scale exponent per layer ``m >= 1``.

    Layers with no energy give ``None``.
    """
    profile = []
    for m in range(1, out.m_max + 1):
        num = den = 0.0
        for p in out.paths(m):
            e = out.coeffs[p].u_norm ** 2
            num += p[-1] * e
            den += e
        profile.append(num / den if den > 0 else None)
    return profile


def _check_compatible(a: ScatteringOutput, b: ScatteringOutput) -> None:
    for attr in ("J", "m_max", "policy", "n", "strict"):
        if getattr(a, attr) != getattr(b, attr):
            raise ValueError(f"outputs differ in {attr}: {getattr(a, attr)} vs {getattr(b, attr)}")


def scattering_distance(a: ScatteringOutput, b: ScatteringOutput,
                        max_length: Optional[int] = None) -> float:
    """``(sum_p ||S_J[p] f - S_J[p] h||^2)^(1/2)`` over the union of stored paths.

    ``max_length`` keeps only paths shorter than or equal to it.
    """
    _check_compatible(a, b)
    total = 0.0
    for p in set(a.coeffs) | set(b.coeffs):
        if max_length is not None and len(p) > max_length:
            continue
        ca, cb = a.coeffs.get(p), b.coeffs.get(p)
        sa = None if ca is None else ca.s_signal
        sb = None if cb is None else cb.s_signal
        if (ca is not None and sa is None) or (cb is not None and sb is None):
            raise ValueError("scattering_distance needs outputs computed with store_signals=True")
        if sa is None:
            total += float(np.sum(np.abs(sb) ** 2))
        elif sb is None:
            total += float(np.sum(np.abs(sa) ** 2))
        else:
            total += float(np.sum(np.abs(sa - sb) ** 2))
    return float(np.sqrt(total))


def scattering_norm_distance(a: ScatteringOutput, b: ScatteringOutput) -> float:
    """Euclidean distance between the vectors of path norms ``||S_J[p]||``."""
    _check_compatible(a, b)
    total = 0.0
    for p in set(a.coeffs) | set(b.coeffs):
        sa = a.coeffs[p].s_norm if p in a.coeffs else 0.0
        sb = b.coeffs[p].s_norm if p in b.coeffs else 0.0
        total += (sa - sb) ** 2
    return float(np.sqrt(total))


def l1_scattering_norm(out: ScatteringOutput) -> float:
    """``sum_m (sum_{|p| = m} ||U[p] f||^2)^(1/2)`` over the computed layers."""
    return float(sum(np.sqrt(max(e, 0.0)) for e in out.residual_energy[: out.m_max + 1]))


def cubic_box_spline(x) -> np.ndarray:
    """Centred cubic B-spline, supported on ``[-2, 2]``, integral one."""
    a = np.abs(np.asarray(x, dtype=float))
    out = np.zeros_like(a)
    inner = a < 1
    outer = (a >= 1) & (a < 2)
    out[inner] = (4 - 6 * a[inner] ** 2 + 3 * a[inner] ** 3) / 6
    out[outer] = (2 - a[outer]) ** 3 / 6
    return out


def _signed_positions(n: int) -> np.ndarray:
    k = np.arange(n)
    return np.where(k > n // 2, k - n, k).astype(float)


def averaging_kernel(fb: FilterBank, kind: str = "phi") -> np.ndarray:
    """Spatial low-pass kernel at scale ``2**J``, centred at sample 0.

    ``"phi"`` is the bank's own averaging filter; ``"rho"`` the cubic box
    spline dilated by ``2**J``, which is nonnegative by construction.
    """
    if kind == "phi":
        return _ifft(fb.phi_hat).real
    if kind == "rho":
        s = 2.0 ** fb.J
        return cubic_box_spline(_signed_positions(fb.n) / s) / s
    raise ValueError("kind must be 'phi' or 'rho'")


@dataclass(frozen=True)
class ModulusBoundReport:
    violation: float
    kernel_min: float
    kernel_nonnegative: bool


def modulus_lower_bound_check(f, fb: FilterBank, j: int, eta_probe: float,
                              h: str = "phi") -> ModulusBoundReport:
    """Worst value of ``|f * psi_j| * h - |f * psi_j * h_eta|``.

    ``h_eta(x) = h(x) exp(i eta x)``.  The inequality is guaranteed when
    ``h >= 0``; the report says whether that held for the chosen kernel.
    """
    x = _as_signal(f, fb)
    kern = averaging_kernel(fb, h)
    kmin = float(kern.min())
    w = _ifft(_fft(x) * fb.psi(j))
    lhs = _ifft(_fft(np.abs(w)) * _fft(kern)).real
    k_eta = kern * np.exp(1j * eta_probe * _signed_positions(fb.n))
    rhs = np.abs(_ifft(_fft(w) * _fft(k_eta)))
    return ModulusBoundReport(
        violation=float(min(0.0, np.min(lhs - rhs))),
        kernel_min=kmin,
        kernel_nonnegative=kmin >= -1e-12 * float(np.max(np.abs(kern))),
    )
