"""File formats: raw float64 arrays, signal loading, JSON and curve CSV."""

from __future__ import annotations

import csv
import json
import os
from pathlib import Path as FsPath
from typing import Iterable, Sequence

import numpy as np

from scatterlab.filterbank import FilterBank
from scatterlab.measure import CurveRecord
from scatterlab.scatter import format_path

LE_F64 = "<f8"


def write_f64(path, array) -> None:
    np.ascontiguousarray(array, dtype=LE_F64).tofile(path)


def read_f64(path) -> np.ndarray:
    data = np.fromfile(path, dtype=LE_F64)
    return data.astype(float)


def load_signal(path) -> np.ndarray:
    """Read a signal from ``.f64`` (raw little-endian float64) or CSV, one value per line."""
    path = FsPath(path)
    if path.suffix.lower() in (".f64", ".bin", ".raw"):
        size = path.stat().st_size
        if size % 8:
            raise ValueError(f"{path}: size {size} is not a multiple of 8 bytes")
        return read_f64(path)
    values = []
    with open(path, newline="") as fh:
        for lineno, row in enumerate(csv.reader(fh), 1):
            if not row or not row[0].strip() or row[0].lstrip().startswith("#"):
                continue
            try:
                values.append(float(row[0]))
            except ValueError:
                if lineno == 1:
                    continue  # header
                raise ValueError(f"{path}:{lineno}: not a number: {row[0]!r}") from None
    return np.asarray(values, dtype=float)


def save_signal(path, x) -> None:
    path = FsPath(path)
    if path.suffix.lower() == ".f64":
        write_f64(path, x)
    else:
        np.savetxt(path, np.asarray(x, float), fmt="%.17g")


def bank_manifest(fb: FilterBank) -> dict:
    return {
        "n": fb.n,
        "J": fb.J,
        "scales": list(fb.scales),
        "beta": fb.beta,
        "eta": fb.eta,
        "completion": fb.completion,
        "psi_norm_sq": fb.psi_norm_sq,
    }


def export_filter_bank(fb: FilterBank, directory, fmt: str = "bin") -> None:
    """Write every filter plus ``manifest.json`` into ``directory``.

    ``fmt="bin"`` gives ``psi_<j>.f64`` and ``phi.f64``; ``"csv"`` one column
    per filter in ``filters.csv``; ``"json"`` embeds the arrays in the manifest.
    """
    directory = FsPath(directory)
    directory.mkdir(parents=True, exist_ok=True)
    manifest = bank_manifest(fb)
    if fmt == "bin":
        for j in fb.scales:
            write_f64(directory / f"psi_{j}.f64", fb.psi(j))
        write_f64(directory / "phi.f64", fb.phi_hat)
        manifest["files"] = {"psi": {str(j): f"psi_{j}.f64" for j in fb.scales}, "phi": "phi.f64"}
    elif fmt == "csv":
        cols = [fb.grid.frequencies, fb.phi_hat] + [fb.psi(j) for j in fb.scales]
        header = "omega,phi," + ",".join(f"psi_{j}" for j in fb.scales)
        np.savetxt(directory / "filters.csv", np.column_stack(cols), delimiter=",",
                   header=header, comments="", fmt="%.17g")
        manifest["files"] = {"table": "filters.csv"}
    elif fmt == "json":
        manifest["psi"] = {str(j): fb.psi(j).tolist() for j in fb.scales}
        manifest["phi"] = fb.phi_hat.tolist()
    else:
        raise ValueError(f"unknown format {fmt!r}")
    dump_json(directory / "manifest.json", manifest)


def load_filter_bank_arrays(directory) -> dict:
    """Read back an exported bank as ``{"manifest", "psi": {j: array}, "phi"}``."""
    directory = FsPath(directory)
    manifest = json.loads((directory / "manifest.json").read_text())
    if "psi" in manifest:
        psi = {int(j): np.asarray(v) for j, v in manifest["psi"].items()}
        phi = np.asarray(manifest["phi"])
    elif "table" in manifest.get("files", {}):
        table = np.loadtxt(directory / manifest["files"]["table"], delimiter=",", skiprows=1)
        phi = table[:, 1]
        psi = {j: table[:, 2 + i] for i, j in enumerate(manifest["scales"])}
    else:
        psi = {int(j): read_f64(directory / name) for j, name in manifest["files"]["psi"].items()}
        phi = read_f64(directory / manifest["files"]["phi"])
    return {"manifest": manifest, "psi": psi, "phi": phi}


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, float) and not np.isfinite(obj):
        return None
    return obj


def dump_json(path, obj) -> None:
    with open(path, "w") as fh:
        json.dump(_jsonable(obj), fh, indent=2, sort_keys=True)
        fh.write("\n")


def write_curve_csv(path, records: Sequence[CurveRecord],
                    fourier: Iterable[float] = None) -> None:
    """Columns ``omega_start, omega_end, value, path, length`` (+ ``fourier_abs``)."""
    fourier = None if fourier is None else list(fourier)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        head = ["omega_start", "omega_end", "value", "path", "length"]
        if fourier is not None:
            head.append("fourier_abs")
        w.writerow(head)
        for i, r in enumerate(records):
            row = [repr(float(r.start)), repr(float(r.end)), repr(float(r.value)),
                   format_path(r.path) + ("+" if r.kind == "tail" else ""), r.length]
            if fourier is not None:
                row.append(repr(float(fourier[i])))
            w.writerow(row)


def write_rows_csv(path, header: Sequence[str], rows: Iterable[Sequence]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in row])


def ensure_parent(path) -> None:
    parent = FsPath(os.path.abspath(path)).parent
    if not parent.is_dir():
        raise FileNotFoundError(f"parent directory {parent} does not exist")
