"""On-disk formats: field dumps, residual reports, comparison records, manifests.

All numeric values are written with 17 significant digits so that decimal
round-trips reproduce the doubles; artifacts contain no timestamps except
the manifest, keeping re-runs byte-identical.
"""

from __future__ import annotations

import hashlib
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from .expectation import ResidualReport
from .torus import TorusGrid

_FMT = "%.17g"


class FormatError(ValueError):
    """Malformed artifact file."""


def _fmt(x) -> str:
    return _FMT % float(x)


# ---------------------------------------------------------------------------
# torus-field dumps
# ---------------------------------------------------------------------------

def write_field(path, grid: TorusGrid, field: np.ndarray, time: float,
                kind: str | None = None) -> None:
    """Dump a scalar or vector field.

    Header: ``torus-field v1; dim; sizes; components; time[; kind]``, then one
    line per grid point in row-major order with comma-separated components.
    """
    arr = field if field.ndim == grid.dim + 1 else field[None]
    ncomp = arr.shape[0]
    sizes = "x".join(str(n) for n in grid.sizes)
    header = f"torus-field v1; {grid.dim}; {sizes}; {ncomp}; {_fmt(time)}"
    if kind:
        header += f"; {kind}"
    flat = arr.reshape(ncomp, -1).T
    lines = [header]
    lines.extend(",".join(_FMT % v for v in row) for row in flat)
    Path(path).write_text("\n".join(lines) + "\n")


def read_field(path):
    """Parse a torus-field dump; returns (grid, array, time, kind)."""
    text = Path(path).read_text().splitlines()
    if not text:
        raise FormatError(f"{path}: empty file")
    head = [p.strip() for p in text[0].split(";")]
    if head[0] != "torus-field v1" or len(head) < 5:
        raise FormatError(f"{path}: line 1: bad header {text[0]!r}")
    dim = int(head[1])
    sizes = tuple(int(s) for s in head[2].split("x"))
    ncomp = int(head[3])
    time = float(head[4])
    kind = head[5] if len(head) > 5 else None
    if len(sizes) != dim:
        raise FormatError(f"{path}: line 1: dim {dim} but sizes {sizes}")
    grid = TorusGrid(sizes)
    npoints = grid.npoints
    rows = text[1:]
    if len(rows) != npoints:
        raise FormatError(f"{path}: expected {npoints} sample rows, found {len(rows)}")
    data = np.empty((npoints, ncomp))
    for i, row in enumerate(rows):
        parts = row.split(",")
        if len(parts) != ncomp:
            raise FormatError(f"{path}: line {i + 2}: expected {ncomp} values, got {len(parts)}")
        try:
            data[i] = [float(p) for p in parts]
        except ValueError as e:
            raise FormatError(f"{path}: line {i + 2}: {e}") from None
    arr = data.T.reshape((ncomp,) + grid.sizes)
    if ncomp == 1:
        arr = arr[0]
    return grid, arr, time, kind


# ---------------------------------------------------------------------------
# residual reports
# ---------------------------------------------------------------------------

def write_residual_report(path, report: ResidualReport) -> None:
    lines = ["residual-report v1",
             f"equation = {report.equation}",
             f"orientation = {report.orientation}",
             f"dim = {len(report.grid_sizes)}",
             "grid = " + "x".join(str(n) for n in report.grid_sizes),
             f"dt = {_fmt(report.dt)}",
             f"M = {report.M}",
             f"sigma = {_fmt(report.sigma)}",
             f"nu = {_fmt(report.nu)}"]
    if report.extras:
        extras = ";".join(f"{k}:{_fmt(v) if isinstance(v, (int, float)) else v}"
                          for k, v in sorted(report.extras.items()))
        lines.append(f"extras = {extras}")
    lines.append("columns = time,l2,linf")
    for t, a, b in zip(report.times, report.l2, report.linf):
        lines.append(f"{_fmt(t)},{_fmt(a)},{_fmt(b)}")
    Path(path).write_text("\n".join(lines) + "\n")


def read_residual_report(path) -> ResidualReport:
    lines = Path(path).read_text().splitlines()
    if not lines or lines[0] != "residual-report v1":
        raise FormatError(f"{path}: line 1: not a residual report")
    meta = {}
    i = 1
    while i < len(lines) and "=" in lines[i]:
        k, v = lines[i].split("=", 1)
        meta[k.strip()] = v.strip()
        i += 1
    if meta.get("columns") != "time,l2,linf":
        raise FormatError(f"{path}: missing or bad columns declaration")
    rows = [list(map(float, ln.split(","))) for ln in lines[i:] if ln.strip()]
    arr = np.array(rows) if rows else np.zeros((0, 3))
    extras = {}
    for item in meta.get("extras", "").split(";"):
        if ":" in item:
            k, v = item.split(":", 1)
            try:
                extras[k] = float(v)
            except ValueError:
                extras[k] = v
    return ResidualReport(meta["equation"], meta["orientation"], arr[:, 0],
                          arr[:, 1], arr[:, 2],
                          tuple(int(s) for s in meta["grid"].split("x")),
                          float(meta["dt"]), int(meta["M"]), float(meta["sigma"]),
                          float(meta["nu"]), extras=extras)


# ---------------------------------------------------------------------------
# comparison records (error vs time, per ensemble size)
# ---------------------------------------------------------------------------

def write_comparison(path, kind: str, meta: dict, rows) -> None:
    """rows: iterable of (M, time, rel_l2)."""
    lines = ["comparison v1", f"kind = {kind}"]
    for k, v in sorted(meta.items()):
        lines.append(f"{k} = {v if isinstance(v, str) else _fmt(v)}")
    lines.append("columns = M,time,rel_l2")
    for M, t, e in rows:
        lines.append(f"{int(M)},{_fmt(t)},{_fmt(e)}")
    Path(path).write_text("\n".join(lines) + "\n")


def read_comparison(path):
    lines = Path(path).read_text().splitlines()
    if not lines or lines[0] != "comparison v1":
        raise FormatError(f"{path}: line 1: not a comparison record")
    meta = {}
    i = 1
    while i < len(lines) and "=" in lines[i]:
        k, v = lines[i].split("=", 1)
        meta[k.strip()] = v.strip()
        i += 1
    if meta.get("columns") != "M,time,rel_l2":
        raise FormatError(f"{path}: missing or bad columns declaration")
    rows = []
    for j, ln in enumerate(lines[i:], start=i + 1):
        if not ln.strip():
            continue
        parts = ln.split(",")
        if len(parts) != 3:
            raise FormatError(f"{path}: line {j}: expected 3 fields")
        rows.append((int(parts[0]), float(parts[1]), float(parts[2])))
    return meta, rows


# ---------------------------------------------------------------------------
# manifests and summaries
# ---------------------------------------------------------------------------

def config_hash(params: dict) -> str:
    blob = "\n".join(f"{k}={params[k]}" for k in sorted(params))
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


def write_manifest(path, scenario: str, params: dict) -> str:
    h = config_hash({**params, "scenario": scenario})
    lines = ["manifest v1", f"scenario = {scenario}", f"config_hash = {h}",
             f"created = {datetime.now(timezone.utc).isoformat()}"]
    for k, v in sorted(params.items()):
        lines.append(f"{k} = {v}")
    Path(path).write_text("\n".join(lines) + "\n")
    return h


def read_manifest(path) -> dict:
    lines = Path(path).read_text().splitlines()
    if not lines or lines[0] != "manifest v1":
        raise FormatError(f"{path}: line 1: not a manifest")
    meta = {}
    for ln in lines[1:]:
        if "=" in ln:
            k, v = ln.split("=", 1)
            meta[k.strip()] = v.strip()
    return meta


def write_summary(path, scenario: str, config_hash_: str, checks: list) -> bool:
    """checks: list of (name, passed, detail). Returns overall pass."""
    lines = ["summary v1", f"scenario = {scenario}", f"config_hash = {config_hash_}"]
    ok = True
    for name, passed, detail in checks:
        ok &= bool(passed)
        lines.append(f"{'PASS' if passed else 'FAIL'} {name}: {detail}")
    lines.append(f"overall = {'PASS' if ok else 'FAIL'}")
    Path(path).write_text("\n".join(lines) + "\n")
    return ok
