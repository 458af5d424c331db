"""Dirac path measure, the path metric and the frequency-like path layout.

Path masses ``mu(p) = ||U[p] delta||^2`` are laid out as nested intervals of
the half line.  A unit-norm Dirac has total mass one, and the layout maps it
onto ``[0, pi]`` (``OMEGA_SCALE``), so a first-layer path ``(j,)`` lands
close to the dyadic band ``[2^j pi, 2^(j+1) pi)`` its wavelet covers.
"""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass, field, replace
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from scatterlab.filterbank import FilterBank
from scatterlab.scatter import (
    Path,
    ScatteringOutput,
    _children,
    _fft,
    format_path,
    parse_path,
    scatter,
    wavelet_energies,
)

OMEGA_SCALE = math.pi
MU_FLOOR = 1e-30


@dataclass(frozen=True)
class PathMeasure:
    mu: float
    mu_J: float
    interval: Optional[Tuple[float, float]] = None  # mass units


@dataclass
class PathMeasureTable:
    """Masses and interval assignments of every path of length ``<= m_max``."""

    entries: Dict[Path, PathMeasure]
    J: int
    m_max: int
    psi_norm_sq: float
    policy: str = "all"
    strict: bool = False
    scales: tuple = ()
    deficits: Dict[Path, float] = field(default_factory=dict)

    def __getitem__(self, p) -> PathMeasure:
        if isinstance(p, str):
            p = parse_path(p)
        return self.entries[tuple(p)]

    def __contains__(self, p) -> bool:
        if isinstance(p, str):
            p = parse_path(p)
        return tuple(p) in self.entries

    def children(self, p: Path) -> List[Path]:
        if len(p) >= self.m_max:
            return []
        kids = [p + (j,) for j in _children(p, self.scales, self.policy, self.strict)]
        return [c for c in kids if c in self.entries]

    def omega_interval(self, p) -> Tuple[float, float]:
        a, b = self[p].interval
        return a * OMEGA_SCALE, b * OMEGA_SCALE


def dirac(n: int) -> np.ndarray:
    d = np.zeros(n)
    d[0] = 1.0
    return d


def dirac_measures(fb: FilterBank, m_max: int, policy: str = "all",
                   strict: bool = False) -> PathMeasureTable:
    """``mu(p) = ||U[p] delta||^2`` and ``mu_J(p) = ||S_J[p] delta||^2``."""
    if m_max > 4:
        raise ValueError("m_max above 4 makes the path table impractically large")
    out = scatter(dirac(fb.n), fb, m_max=m_max, policy=policy, strict=strict,
                  store_signals=False)
    entries = {p: PathMeasure(c.u_norm ** 2, c.s_norm ** 2) for p, c in out.coeffs.items()}
    return PathMeasureTable(entries, fb.J, m_max, fb.psi_norm_sq, out.policy, strict,
                            tuple(fb.scales))


def build_q_map(table: PathMeasureTable, tol: float = 1e-6) -> PathMeasureTable:
    """Assign nested intervals, in mass units, to every path of ``table``.

    The root covers ``[0, mu(root))``.  Inside each parent the children are
    packed against the right end with scale increasing left to right; the
    remaining deficit (the part of the parent averaged away or cut by the
    depth limit) is the leftmost stub.
    """
    entries = dict(table.entries)
    deficits: Dict[Path, float] = {}

    def place(p: Path, a: float) -> None:
        e = entries[p]
        b = a + e.mu
        entries[p] = replace(e, interval=(a, b))
        kids = table.children(p)
        if not kids:
            return
        kids.sort(key=lambda c: c[-1])
        mass = sum(entries[c].mu for c in kids)
        if mass > e.mu * (1 + tol):
            raise ValueError(
                f"children of {format_path(p)} carry {mass:.6g} > parent mass {e.mu:.6g}"
            )
        deficits[p] = max(e.mu - mass, 0.0)
        start = b - mass
        for c in kids:
            place(c, start)
            start += entries[c].mu

    place((), 0.0)
    return replace(table, entries=entries, deficits=deficits)


@dataclass(frozen=True)
class CurveRecord:
    start: float
    end: float
    value: float
    path: Path
    length: int
    kind: str = "average"  # or "tail": leaf energy not yet averaged


def _ensure_layout(table: PathMeasureTable) -> PathMeasureTable:
    if table.entries[()].interval is None:
        raise ValueError("build_q_map must run before using intervals")
    return table


def _records(out: ScatteringOutput, table: PathMeasureTable) -> List[CurveRecord]:
    recs = []
    for p, e in table.entries.items():
        a, _ = e.interval
        c = out.coeffs.get(p)
        s_f = 0.0 if c is None else c.s_norm
        u_f = 0.0 if c is None else c.u_norm
        muJ = max(e.mu_J, MU_FLOOR)
        recs.append(CurveRecord(a * OMEGA_SCALE, (a + e.mu_J) * OMEGA_SCALE,
                                s_f / math.sqrt(muJ), p, len(p)))
        if len(p) == table.m_max:
            width = e.mu - e.mu_J
            if width > MU_FLOOR:
                rest = max(u_f ** 2 - s_f ** 2, 0.0)
                recs.append(CurveRecord((a + e.mu_J) * OMEGA_SCALE, (a + e.mu) * OMEGA_SCALE,
                                        math.sqrt(rest / width), p, len(p), "tail"))
    recs.sort(key=lambda r: (r.start, r.end))
    return recs


def normalized_scattering_curve(f, fb: FilterBank, table: PathMeasureTable,
                                m_max: Optional[int] = None) -> List[CurveRecord]:
    """Piecewise-constant curve ``||S_J[p] f|| / ||S_J[p] delta||`` over the layout.

    Each path contributes a record of width ``mu_J(p)``.  Leaves also carry
    a ``"tail"`` record over the rest of their interval whose value is set by
    the energy ``||U[p] f||^2 - ||S_J[p] f||^2`` still left in that subtree,
    so the squared curve integrates exactly to ``||f||^2``.  Interval ends
    are in radians.
    """
    _ensure_layout(table)
    if m_max is not None and m_max != table.m_max:
        raise ValueError("m_max must match the table depth")
    out = scatter(f, fb, m_max=table.m_max, policy=table.policy, strict=table.strict,
                  store_signals=False)
    return _records(out, table)


def curve_energy(records: Sequence[CurveRecord], include_tail: bool = True) -> float:
    """``sum value^2 * width`` with widths back in mass units."""
    return float(sum(r.value ** 2 * (r.end - r.start) / OMEGA_SCALE for r in records
                     if include_tail or r.kind != "tail"))


def q_lookup(records: Sequence[CurveRecord], omega: float) -> Optional[Path]:
    """Path whose curve piece contains ``omega``; ``None`` outside every piece."""
    starts = [r.start for r in records]
    i = bisect.bisect_right(starts, omega) - 1
    if i >= 0 and omega < records[i].end:
        return records[i].path
    return None


def path_distance(table: PathMeasureTable, q1, q2) -> float:
    """Mass of the neighbourhood shared by two paths.

    With ``c`` the longest common prefix and ``j*`` the larger of the first
    scales where the paths part (a path that ends there lends the other
    one's scale), the distance is ``mu_J(c)`` plus the mass of every child
    ``c + (j,)`` with ``j <= j*``.
    """
    q1 = parse_path(q1) if isinstance(q1, str) else tuple(q1)
    q2 = parse_path(q2) if isinstance(q2, str) else tuple(q2)
    for q in (q1, q2):
        if q not in table.entries:
            raise KeyError(f"path {format_path(q)} not in table")
    if q1 == q2:
        return 0.0
    k = 0
    while k < min(len(q1), len(q2)) and q1[k] == q2[k]:
        k += 1
    prefix = q1[:k]
    nxt = [q[k] for q in (q1, q2) if len(q) > k]
    cut = max(nxt)
    total = table.entries[prefix].mu_J
    for c in table.children(prefix):
        if c[-1] <= cut:
            total += table.entries[c].mu
    return float(total)


@dataclass(frozen=True)
class BandEnergy:
    scatter_side: float
    fourier_side: float

    @property
    def relative_gap(self) -> float:
        if self.fourier_side == 0:
            return 0.0 if self.scatter_side == 0 else math.inf
        return abs(self.scatter_side - self.fourier_side) / self.fourier_side


def band_energy_equivalence(f, fb: FilterBank, table: PathMeasureTable, j: int,
                            include_tail: bool = False) -> BandEnergy:
    """Curve energy over the paths that start with ``j`` against ``||f * psi_j||^2``.

    Without ``include_tail`` only the averaged pieces count, so the gap
    measures the depth truncation of the table.
    """
    if j not in fb.scales:
        raise ValueError(f"scale {j} outside bank range")
    records = normalized_scattering_curve(f, fb, table)
    band = [r for r in records if r.path[:1] == (j,)]
    scatter_side = curve_energy(band, include_tail)
    fourier_side = float(wavelet_energies(f, fb)[fb.scales.index(j)])
    return BandEnergy(scatter_side, fourier_side)


def convergence_diagnostic(f, banks: Sequence[FilterBank], m_max: int) -> List[Tuple[int, float]]:
    """Per ``J``: largest distance between normalised ``S_J[p] f`` and ``S_J[p] delta``."""
    rows = []
    for fb in banks:
        of = scatter(f, fb, m_max=m_max)
        od = scatter(dirac(fb.n), fb, m_max=m_max)
        worst = 0.0
        for p, c in of.coeffs.items():
            cd = od.coeffs[p]
            if c.s_norm <= 0 or cd.s_norm <= 0:
                continue
            diff = c.s_signal / c.s_norm - cd.s_signal / cd.s_norm
            worst = max(worst, float(np.linalg.norm(diff)))
        rows.append((fb.J, worst))
    return rows


def fourier_overlay(f, records: Sequence[CurveRecord]) -> np.ndarray:
    """``|f_hat|`` at each record's midpoint, linearly interpolated on the grid."""
    x = np.asarray(f)
    n = x.shape[0]
    mag = np.abs(_fft(x))[: n // 2 + 1]
    grid = 2 * np.pi * np.arange(n // 2 + 1) / n
    mids = np.array([(r.start + r.end) / 2 for r in records])
    return np.interp(mids, grid, mag)
