"""Command-line front end.

Every run writes one directory holding ``manifest.json`` (the resolved
configuration), data files, a ``CHECKS`` file with one line per assertion
and ``run_info.json`` with wall-clock times.  The directory is assembled
under a temporary name and renamed at the end, so a failed run leaves
nothing behind.

Exit codes: 0 ok, 2 usage or bad input, 3 numerical non-convergence,
4 integrity or acceptance check failed.
"""

from __future__ import annotations

import argparse
import inspect
import math
import os
import shutil
import sys
import tempfile
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path as FsPath
from typing import List, Optional

import numpy as np

from scatterlab import __version__, checks, io
from scatterlab.filterbank import ConvergenceError, build_filter_bank
from scatterlab.measure import build_q_map, dirac_measures, fourier_overlay, normalized_scattering_curve
from scatterlab.scatter import energy_budget, format_path, normalize_policy, scatter

EXIT_OK, EXIT_USAGE, EXIT_CONVERGENCE, EXIT_INTEGRITY = 0, 2, 3, 4
LEDGER_TOL = 1e-8
CURVE_MAX_DEPTH = 4


class UsageError(Exception):
    pass


@dataclass
class RunConfig:
    command: str
    experiment: Optional[str] = None
    inputs: List[str] = field(default_factory=list)
    n: Optional[int] = None
    J: Optional[int] = None
    m_max: Optional[int] = None
    policy: Optional[str] = None
    seed: Optional[int] = None
    realizations: Optional[int] = None
    model: Optional[str] = None
    out: str = ""
    format: Optional[str] = None
    completion: bool = True

    def validate(self) -> None:
        if self.n is not None and (self.n < 4 or self.n & (self.n - 1)):
            raise UsageError(f"--n must be a power of two >= 4, got {self.n}")
        if self.J is not None:
            if self.J < 2:
                raise UsageError("--J must be >= 2")
            if self.n is not None and 2 ** self.J > 2 * self.n:
                raise UsageError(f"--J {self.J} too large for --n {self.n} (need 2^J <= 2n)")
        if self.m_max is not None and not 0 <= self.m_max <= 8:
            raise UsageError("--m-max must lie in 0..8")
        if self.seed is not None and self.seed < 0:
            raise UsageError("--seed must be >= 0")
        if self.realizations is not None and not 1 <= self.realizations <= 4096:
            raise UsageError("--realizations must lie in 1..4096")
        if not self.out:
            raise UsageError("--out is required")
        parent = FsPath(os.path.abspath(self.out)).parent
        if not parent.is_dir():
            raise UsageError(f"output parent directory {parent} does not exist")
        target = FsPath(self.out)
        if target.exists() and (not target.is_dir() or
                                (any(target.iterdir()) and not (target / "manifest.json").exists())):
            raise UsageError(f"{target} exists and is not a previous run directory")


# ---------------------------------------------------------------- output staging

class RunDirectory:
    """Collects files in a hidden sibling directory, then renames it into place."""

    def __init__(self, target: str):
        self.target = FsPath(os.path.abspath(target))
        self.tmp = FsPath(tempfile.mkdtemp(prefix=f".{self.target.name}.", dir=self.target.parent))

    def path(self, name: str) -> FsPath:
        p = self.tmp / name
        p.parent.mkdir(parents=True, exist_ok=True)
        return p

    def commit(self) -> None:
        if self.target.exists():
            shutil.rmtree(self.target)
        os.replace(self.tmp, self.target)

    def abort(self) -> None:
        shutil.rmtree(self.tmp, ignore_errors=True)


def _write_result(run: RunDirectory, res: checks.ExperimentResult) -> None:
    io.dump_json(run.path("report.json"), res.report)
    for name, (header, rows) in res.tables.items():
        io.write_rows_csv(run.path(name), header, rows)


def _write_checks(run: RunDirectory, results: List[checks.ExperimentResult]) -> bool:
    lines = [c.line() for r in results for c in r.checks]
    run.path("CHECKS").write_text("\n".join(lines) + ("\n" if lines else ""))
    for line in lines:
        print(line)
    return all(r.passed for r in results)


def _kwargs_for(fn, cfg: RunConfig) -> dict:
    params = inspect.signature(fn).parameters
    supplied = {"n": cfg.n, "J": cfg.J, "m_max": cfg.m_max, "seed": cfg.seed,
                "realizations": cfg.realizations, "model": cfg.model,
                "completion": cfg.completion}
    return {k: v for k, v in supplied.items() if v is not None and k in params}


# ---------------------------------------------------------------- commands

def cmd_filters(cfg: RunConfig, run: RunDirectory) -> List[checks.ExperimentResult]:
    n = cfg.n or 4096
    J = cfg.J or 8
    if 2 ** J > 2 * n:
        raise UsageError(f"--J {J} too large for --n {n}")
    fb = build_filter_bank(n, J, -1, cfg.completion)
    io.export_filter_bank(fb, run.path("filters"), cfg.format or "bin")
    lp = checks.filter_unitarity(n, J, cfg.completion)
    alpha = checks.admissibility(n, J, cfg.completion)
    io.dump_json(run.path("littlewood_paley.json"), lp.report)
    io.dump_json(run.path("alpha.json"), alpha.report)
    return [lp, alpha]


def _load_input(cfg: RunConfig) -> np.ndarray:
    if len(cfg.inputs) != 1:
        raise UsageError("scatter takes exactly one input file")
    path = cfg.inputs[0]
    try:
        x = io.load_signal(path)
    except (OSError, ValueError) as exc:
        raise UsageError(f"cannot read {path}: {exc}") from None
    if x.size < 4 or x.size & (x.size - 1):
        raise UsageError(f"input length {x.size} is not a power of two >= 4")
    if not np.all(np.isfinite(x)):
        raise UsageError("input contains non-finite samples")
    if cfg.n is not None and cfg.n != x.size:
        raise UsageError(f"--n {cfg.n} does not match input length {x.size}")
    return x


def cmd_scatter(cfg: RunConfig, run: RunDirectory) -> List[checks.ExperimentResult]:
    x = _load_input(cfg)
    n = x.size
    J = cfg.J if cfg.J is not None else min(8, int(math.log2(n)) + 1)
    if 2 ** J > 2 * n:
        raise UsageError(f"--J {J} too large for input length {n}")
    m_max = 3 if cfg.m_max is None else cfg.m_max
    policy = normalize_policy(cfg.policy or "all")
    fb = build_filter_bank(n, J, -1, cfg.completion)
    fmt = cfg.format or "json"
    out = scatter(x, fb, m_max, policy)
    res = checks.ExperimentResult("scatter", {})

    doc = out.to_dict(include_signals=(fmt == "json"))
    doc.update(n=n, input_norm_sq=out.input_norm_sq)
    if fmt == "bin":
        io.write_f64(run.path("signals.f64"), np.stack([c.s_signal for c in out.coeffs.values()]))
        doc["signals_file"] = {"file": "signals.f64", "shape": [len(out.coeffs), n],
                               "row_order": [format_path(p) for p in out.coeffs]}
    elif fmt == "csv":
        io.write_rows_csv(run.path("coefficients.csv"), ["path", "length", "s_norm", "u_norm"],
                          [[format_path(p), len(p), c.s_norm, c.u_norm] for p, c in out.coeffs.items()])
    io.dump_json(run.path("scatter.json"), doc)

    energy = {"captured_fraction": out.captured_fraction(), "policy": policy,
              "layer_energy": out.layer_energy, "residual_energy": out.residual_energy}
    if policy == "all":
        budget = energy_budget(out)
        energy.update(ledger_violations=budget.violations, max_violation=budget.max_violation,
                      residual_nonincreasing=budget.residual_nonincreasing)
        res.add("energy_ledger", budget.max_violation, f"<= {LEDGER_TOL:g}",
                budget.max_violation <= LEDGER_TOL)
    else:
        full = scatter(x, fb, m_max, "all", store_signals=False)
        cap_all = full.captured_fraction()
        vs_all = out.captured_fraction() / cap_all if cap_all > 0 else 1.0
        energy.update(captured_fraction_all_paths=cap_all, captured_fraction_vs_all=vs_all)
        res.add("captured_fraction_vs_all_paths", vs_all, "reported", True)
    res.add("captured_fraction", out.captured_fraction(), "reported", True)
    io.dump_json(run.path("energy.json"), energy)

    depth = min(m_max, CURVE_MAX_DEPTH)
    table = build_q_map(dirac_measures(fb, depth, policy))
    records = normalized_scattering_curve(x, fb, table)
    overlay = fourier_overlay(x, records)
    io.write_curve_csv(run.path("curve.csv"), records, overlay)
    # first-layer band with the largest curve energy density
    density = {}
    for r in records:
        if r.path:
            e, w = density.get(r.path[0], (0.0, 0.0))
            density[r.path[0]] = (e + r.value ** 2 * (r.end - r.start), w + (r.end - r.start))
    dens = {j: e / w for j, (e, w) in density.items() if w > 0}
    if dens and max(dens.values()) > 0:
        j_peak = max(dens, key=dens.get)
        lo, hi = table.omega_interval((j_peak,))
        w_peak = float(2 * np.pi * np.argmax(np.abs(np.fft.rfft(x))) / n)
        res.report.update(peak_band=j_peak, peak_band_interval=[lo, hi], fourier_peak_omega=w_peak,
                          fourier_peak_in_band=bool(lo <= w_peak <= hi))
    res.report.update(energy)
    _write_result(run, res)
    return [res]


def cmd_experiment(cfg: RunConfig, run: RunDirectory) -> List[checks.ExperimentResult]:
    fn = checks.REGISTRY[cfg.command][cfg.experiment]
    if cfg.policy is not None:
        print("note: --policy is fixed by the experiment and was ignored", file=sys.stderr)
    res = fn(**_kwargs_for(fn, cfg))
    _write_result(run, res)
    return [res]


# ---------------------------------------------------------------- parsing

def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--n", type=int, help="signal length (power of two)")
    p.add_argument("--J", type=int, help="averaging scale exponent")
    p.add_argument("--m-max", dest="m_max", type=int, help="longest path length")
    p.add_argument("--policy", choices=["all", "dec", "frequency-decreasing"], help="path policy")
    p.add_argument("--seed", type=int, help="base random seed")
    p.add_argument("--realizations", type=int, help="Monte-Carlo realisations")
    p.add_argument("--out", required=True, help="run directory to create")
    p.add_argument("--format", choices=["csv", "json", "bin"], help="array file format")
    p.add_argument("--completion", choices=["on", "off"], default="on",
                   help="complete the bank to an exact partition of unity")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="scatterlab", description="Wavelet scattering toolkit.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    _common(sub.add_parser("filters", help="build, export and validate the filter bank"))
    p = sub.add_parser("scatter", help="scatter a signal file")
    p.add_argument("input", help="CSV (one sample per line) or raw little-endian .f64")
    _common(p)
    for name in ("stability", "stochastic", "rotation"):
        p = sub.add_parser(name, help=f"{name} experiments")
        p.add_argument("experiment", choices=sorted(checks.REGISTRY[name]))
        if name == "stochastic":
            p.add_argument("--model", choices=sorted(checks.MODELS), help="process model")
        _common(p)
    return parser


def config_from_args(args: argparse.Namespace) -> RunConfig:
    return RunConfig(
        command=args.command,
        experiment=getattr(args, "experiment", None),
        inputs=[args.input] if getattr(args, "input", None) else [],
        n=args.n, J=args.J, m_max=args.m_max,
        policy=None if args.policy is None else normalize_policy(args.policy),
        seed=args.seed, realizations=args.realizations,
        model=getattr(args, "model", None),
        out=args.out, format=args.format, completion=args.completion == "on",
    )


COMMANDS = {"filters": cmd_filters, "scatter": cmd_scatter,
            "stability": cmd_experiment, "stochastic": cmd_experiment, "rotation": cmd_experiment}


def run(cfg: RunConfig) -> int:
    try:
        cfg.validate()
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    started = time.time()
    staging = RunDirectory(cfg.out)
    try:
        results = COMMANDS[cfg.command](cfg, staging)
        ok = _write_checks(staging, results)
        io.dump_json(staging.path("manifest.json"), {
            "version": __version__, "config": asdict(cfg), "checks_passed": ok,
            "results": [r.name for r in results],
        })
        io.dump_json(staging.path("run_info.json"), {
            "started_unix": started, "elapsed_seconds": time.time() - started,
        })
        staging.commit()
    except ConvergenceError as exc:
        staging.abort()
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_CONVERGENCE
    except (UsageError, ValueError) as exc:
        # library ValueErrors come from parameter combinations it rejects
        staging.abort()
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except BaseException:
        staging.abort()
        raise
    return EXIT_OK if ok else EXIT_INTEGRITY


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    return run(config_from_args(args))


if __name__ == "__main__":
    sys.exit(main())
