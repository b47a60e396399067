"""Field/report file serialization, mesh and table export.

Field and report files are JSON with every float written with 17 significant
digits, which round-trips IEEE doubles exactly; payload arrays are row-major
in x-fastest order.  Meshes use the plain-text Wavefront OBJ polygon format
(two triangles per grid cell, cells touching flagged nodes skipped); tables
are comma-separated with one node per line.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Any

import numpy as np

from .errors import FieldFormatError
from .fields import Grid2D, ScalarField, Vec3Field
from .kernel import GoverningFields, ResidualReport

__all__ = [
    "FORMAT_VERSION",
    "write_field_file",
    "read_field_file",
    "write_report_file",
    "report_to_dict",
    "write_obj",
    "write_table",
]

FORMAT_VERSION = 1

FIELD_NAMES = ("alpha", "xi", "h")


def _fmt(x: float) -> str:
    if not np.isfinite(x):
        raise FieldFormatError(f"cannot serialize non-finite value {x!r}")
    return format(float(x), ".17g")


def _emit(value: Any, indent: int = 0) -> str:
    """Minimal JSON writer with fixed 17-significant-digit floats."""
    pad = "  " * indent
    if isinstance(value, dict):
        if not value:
            return "{}"
        items = ",\n".join(
            f'{pad}  {json.dumps(str(k))}: {_emit(v, indent + 1)}' for k, v in value.items()
        )
        return "{\n" + items + "\n" + pad + "}"
    if isinstance(value, (list, tuple, np.ndarray)):
        seq = list(value)
        return "[" + ", ".join(_emit(v, indent) for v in seq) + "]"
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return _fmt(float(value))
    if value is None:
        return "null"
    return json.dumps(value)


def dump_json(value: Any, path: str | Path) -> None:
    Path(path).write_text(_emit(value) + "\n")


def _grid_header(grid: Grid2D) -> dict:
    return {
        "nx": grid.nx, "ny": grid.ny,
        "x0": grid.x0, "y0": grid.y0,
        "dx": grid.dx, "dy": grid.dy,
    }


def _flat(values: np.ndarray) -> np.ndarray:
    return values.ravel(order="F")  # x-fastest


def write_field_file(
    path: str | Path, g: GoverningFields, seed: dict | None = None
) -> None:
    """Serialize a governing triple; ``seed`` (family + parameters) is kept in
    the header so refinement studies can regenerate the fields on finer grids."""
    doc: dict[str, Any] = {
        "format": "mosurf-fields",
        "version": FORMAT_VERSION,
        "kind": g.kind,
        "qn": g.qn,
        "grid": _grid_header(g.grid),
        "fields": {name: _flat(getattr(g, name).values) for name in FIELD_NAMES},
    }
    if seed is not None:
        doc["seed"] = seed
    dump_json(doc, path)


def _require(doc: dict, key: str, path: str) -> Any:
    if key not in doc:
        raise FieldFormatError(f"{path}: missing required key {key!r}")
    return doc[key]


def read_field_file(path: str | Path) -> tuple[GoverningFields, dict | None]:
    """Parse and validate a field file; non-finite payload entries are
    rejected with the offending field name and flat index."""
    path = str(path)
    try:
        doc = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise FieldFormatError(f"{path}: cannot parse field file: {exc}") from exc
    if not isinstance(doc, dict) or doc.get("format") != "mosurf-fields":
        raise FieldFormatError(f"{path}: not a mosurf field file")
    if int(_require(doc, "version", path)) != FORMAT_VERSION:
        raise FieldFormatError(f"{path}: unsupported format version {doc['version']!r}")
    kind = _require(doc, "kind", path)
    qn = float(_require(doc, "qn", path))
    gh = _require(doc, "grid", path)
    try:
        grid = Grid2D(
            int(gh["nx"]), int(gh["ny"]),
            float(gh["x0"]), float(gh["y0"]), float(gh["dx"]), float(gh["dy"]),
        )
    except (KeyError, ValueError, TypeError) as exc:
        raise FieldFormatError(f"{path}: bad grid header: {exc}") from exc
    payload = _require(doc, "fields", path)
    fields = {}
    for name in FIELD_NAMES:
        raw = _require(payload, name, path)
        arr = np.asarray(raw, dtype=float)
        if arr.shape != (grid.n_nodes,):
            raise FieldFormatError(
                f"{path}: field {name!r} has {arr.size} values, expected {grid.n_nodes}"
            )
        bad = ~np.isfinite(arr)
        if bad.any():
            idx = int(np.argmax(bad))
            raise FieldFormatError(
                f"{path}: non-finite value in field {name!r} at flat index {idx}"
            )
        fields[name] = ScalarField(grid, arr.reshape(grid.shape, order="F"))
    g = GoverningFields(kind=kind, qn=qn, alpha=fields["alpha"], xi=fields["xi"], h=fields["h"])
    return g, doc.get("seed")


def report_to_dict(
    report: ResidualReport,
    kind: str | None = None,
    qn: float | None = None,
    orders: dict | None = None,
    diagnostics: dict | None = None,
) -> dict:
    doc: dict[str, Any] = {
        "format": "mosurf-report",
        "version": FORMAT_VERSION,
        "registry_version": 1,
        "grid": _grid_header(report.grid),
    }
    if kind is not None:
        doc["kind"] = kind
    if qn is not None:
        doc["qn"] = qn
    doc["equations"] = {
        name: {"linf": s.linf, "l2": s.l2, "excluded": s.excluded}
        for name, s in report.entries.items()
    }
    if orders is not None:
        doc["orders"] = {k: v for k, v in orders.items()}
    if diagnostics is not None:
        doc["diagnostics"] = diagnostics
    return doc


def write_report_file(path: str | Path, doc: dict) -> None:
    dump_json(doc, path)


def write_obj(path: str | Path, points: Vec3Field, valid: np.ndarray | None = None) -> int:
    """Triangulated OBJ export; returns the number of faces written.

    Vertices are emitted for valid nodes only; each grid cell whose four
    corners are valid contributes two triangles.
    """
    v = points.values
    nx, ny = points.grid.shape
    if valid is None:
        valid = np.isfinite(v).all(axis=2)
    else:
        valid = valid & np.isfinite(v).all(axis=2)
    index = np.zeros((nx, ny), dtype=int)
    lines = ["# mosurf surface mesh"]
    count = 0
    for j in range(ny):
        for i in range(nx):
            if valid[i, j]:
                count += 1
                index[i, j] = count  # OBJ indices are 1-based
                lines.append(f"v {_fmt(v[i, j, 0])} {_fmt(v[i, j, 1])} {_fmt(v[i, j, 2])}")
    faces = 0
    for j in range(ny - 1):
        for i in range(nx - 1):
            if valid[i, j] and valid[i + 1, j] and valid[i, j + 1] and valid[i + 1, j + 1]:
                a, b = index[i, j], index[i + 1, j]
                c, d = index[i + 1, j + 1], index[i, j + 1]
                lines.append(f"f {a} {b} {c}")
                lines.append(f"f {a} {c} {d}")
                faces += 2
    Path(path).write_text("\n".join(lines) + "\n")
    return faces


def write_table(path: str | Path, grid: Grid2D, columns: dict[str, np.ndarray]) -> None:
    """CSV export, one node per line in x-fastest order; NaN cells are blank.

    Vector-valued columns (nx, ny, 3) expand into ``name_x/_y/_z``.
    """
    flat: dict[str, np.ndarray] = {}
    for name, arr in columns.items():
        if arr.shape == grid.shape:
            flat[name] = _flat(arr)
        elif arr.shape == grid.shape + (3,):
            for k, suffix in enumerate("xyz"):
                flat[f"{name}_{suffix}"] = _flat(arr[:, :, k])
        else:
            raise FieldFormatError(f"column {name!r} has unsupported shape {arr.shape}")
    names = list(flat)
    rows = [",".join(names)]
    n = grid.n_nodes
    for k in range(n):
        cells = []
        for name in names:
            x = flat[name][k]
            cells.append(_fmt(x) if np.isfinite(x) else "")
        rows.append(",".join(cells))
    Path(path).write_text("\n".join(rows) + "\n")
