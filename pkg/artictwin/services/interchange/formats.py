"""
Language-neutral file formats.

  *.ply   binary little-endian PLY, float64 x/y/z, optional int32 `label`;
          organised clouds carry `comment grid H W` and NaN rows for invalid pixels
  *.map   8-byte header (H, W as uint32 LE) + float32 row-major values
  *.seg   same header + int32 row-major segment labels (-1 = none)
  *.txt   correspondences, one `t t' idx_a idx_b conf` record per line
"""
from __future__ import annotations

import csv
import hashlib
from pathlib import Path
from typing import Iterable, Optional

import numpy as np

from artictwin.services.errors import DimensionMismatch, MissingFile, SchemaError
from artictwin.services.observations import CorrespondenceSet

_HEADER = np.dtype([("height", "<u4"), ("width", "<u4")])


def sha256_of(path: str | Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _require(path: Path, field: str) -> None:
    if not path.is_file():
        raise MissingFile(str(path), field, "file does not exist")


# ── PLY ──────────────────────────────────────────────────────────────────────

def write_ply(
    path: str | Path,
    points: np.ndarray,
    labels: Optional[np.ndarray] = None,
    grid: Optional[tuple[int, int]] = None,
) -> None:
    points = np.asarray(points, dtype=np.float64).reshape(-1, 3)
    fields = [("x", "<f8"), ("y", "<f8"), ("z", "<f8")]
    if labels is not None:
        fields.append(("label", "<i4"))
    data = np.empty(len(points), dtype=fields)
    data["x"], data["y"], data["z"] = points[:, 0], points[:, 1], points[:, 2]
    if labels is not None:
        data["label"] = np.asarray(labels, dtype=np.int64).reshape(-1)

    lines = ["ply", "format binary_little_endian 1.0"]
    if grid is not None:
        lines.append(f"comment grid {grid[0]} {grid[1]}")
    lines.append(f"element vertex {len(points)}")
    lines += ["property double x", "property double y", "property double z"]
    if labels is not None:
        lines.append("property int label")
    lines.append("end_header")
    with open(path, "wb") as fh:
        fh.write(("\n".join(lines) + "\n").encode("ascii"))
        fh.write(data.tobytes())


def read_ply(path: str | Path, field: str = "ply") -> tuple[np.ndarray, Optional[np.ndarray], Optional[tuple[int, int]]]:
    """Points, labels (or None) and organised-grid shape (or None)."""
    path = Path(path)
    _require(path, field)
    raw = path.read_bytes()
    end = raw.find(b"end_header\n")
    if not raw.startswith(b"ply\n") or end < 0:
        raise SchemaError(str(path), field, "not a PLY file")
    header = raw[:end].decode("ascii").splitlines()
    body = raw[end + len(b"end_header\n"):]

    count, grid, has_label = None, None, False
    for line in header:
        parts = line.split()
        if parts[:2] == ["format", "binary_little_endian"]:
            continue
        if parts[:1] == ["format"]:
            raise SchemaError(str(path), field, f"unsupported format {line!r}")
        if parts[:2] == ["comment", "grid"]:
            grid = (int(parts[2]), int(parts[3]))
        elif parts[:2] == ["element", "vertex"]:
            count = int(parts[2])
        elif parts[:3] == ["property", "int", "label"]:
            has_label = True
    if count is None:
        raise SchemaError(str(path), field, "missing vertex element")

    fields = [("x", "<f8"), ("y", "<f8"), ("z", "<f8")] + ([("label", "<i4")] if has_label else [])
    dtype = np.dtype(fields)
    if len(body) != count * dtype.itemsize:
        raise SchemaError(str(path), field, f"expected {count} vertices, body holds {len(body) // dtype.itemsize}")
    data = np.frombuffer(body, dtype=dtype)
    points = np.column_stack([data["x"], data["y"], data["z"]]).astype(np.float64)
    labels = data["label"].astype(np.int64) if has_label else None
    if grid is not None and grid[0] * grid[1] != count:
        raise DimensionMismatch(str(path), field, f"grid {grid} does not hold {count} vertices")
    return points, labels, grid


def write_organized_cloud(path: str | Path, points: np.ndarray, valid: np.ndarray) -> None:
    pts = np.array(points, dtype=np.float64)
    pts[~np.asarray(valid, dtype=bool)] = np.nan
    write_ply(path, pts.reshape(-1, 3), grid=valid.shape)


def read_organized_cloud(path: str | Path, field: str = "frame") -> tuple[np.ndarray, np.ndarray]:
    points, _, grid = read_ply(path, field)
    if grid is None:
        raise SchemaError(str(path), field, "organised cloud without grid comment")
    pts = points.reshape(grid[0], grid[1], 3)
    valid = np.all(np.isfinite(pts), axis=2)
    return pts, valid


# ── maps ─────────────────────────────────────────────────────────────────────

def _write_grid(path: str | Path, values: np.ndarray, dtype: str) -> None:
    values = np.asarray(values)
    header = np.array([(values.shape[0], values.shape[1])], dtype=_HEADER)
    with open(path, "wb") as fh:
        fh.write(header.tobytes())
        fh.write(np.ascontiguousarray(values, dtype=dtype).tobytes())


def _read_grid(path: str | Path, dtype: str, field: str, shape: Optional[tuple[int, int]]) -> np.ndarray:
    path = Path(path)
    _require(path, field)
    raw = path.read_bytes()
    if len(raw) < _HEADER.itemsize:
        raise SchemaError(str(path), field, "truncated header")
    header = np.frombuffer(raw[:_HEADER.itemsize], dtype=_HEADER)[0]
    h, w = int(header["height"]), int(header["width"])
    if shape is not None and (h, w) != tuple(shape):
        raise DimensionMismatch(str(path), field, f"grid {h}x{w}, expected {shape[0]}x{shape[1]}")
    values = np.frombuffer(raw[_HEADER.itemsize:], dtype=dtype)
    if values.size != h * w:
        raise SchemaError(str(path), field, f"holds {values.size} values for a {h}x{w} grid")
    return values.reshape(h, w)


def write_map(path: str | Path, values: np.ndarray) -> None:
    _write_grid(path, values, "<f4")


def read_map(path: str | Path, shape: Optional[tuple[int, int]] = None, field: str = "map") -> np.ndarray:
    return _read_grid(path, "<f4", field, shape).astype(np.float64)


def write_segment_map(path: str | Path, labels: np.ndarray) -> None:
    _write_grid(path, labels, "<i4")


def read_segment_map(path: str | Path, shape: Optional[tuple[int, int]] = None, field: str = "segments") -> np.ndarray:
    return _read_grid(path, "<i4", field, shape).astype(np.int64)


# ── correspondences ──────────────────────────────────────────────────────────

def write_correspondences(path: str | Path, corr: CorrespondenceSet) -> None:
    with open(path, "w", encoding="ascii") as fh:
        for a, b, c in zip(corr.idx_a, corr.idx_b, corr.confidence):
            fh.write(f"{corr.frame_a} {corr.frame_b} {int(a)} {int(b)} {float(c)!r}\n")


def read_correspondences(path: str | Path, frame_a: int, frame_b: int, field: str = "correspondences") -> CorrespondenceSet:
    path = Path(path)
    _require(path, field)
    rows = [line.split() for line in path.read_text(encoding="ascii").splitlines() if line.strip()]
    if any(len(r) != 5 for r in rows):
        raise SchemaError(str(path), field, "records must have 5 fields")
    for r in rows:
        if int(r[0]) != frame_a or int(r[1]) != frame_b:
            raise SchemaError(str(path), field, f"record for pair ({r[0]}, {r[1]}) in file of ({frame_a}, {frame_b})")
    return CorrespondenceSet(
        frame_a,
        frame_b,
        np.array([int(r[2]) for r in rows], dtype=np.int64),
        np.array([int(r[3]) for r in rows], dtype=np.int64),
        np.array([float(r[4]) for r in rows], dtype=np.float64),
    )


# ── tabular outputs ──────────────────────────────────────────────────────────

def write_loss_history(path: str | Path, rows: Iterable) -> None:
    """CSV with columns iteration, L_static, L_dynamic, L."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["iteration", "L_static", "L_dynamic", "L"])
        for r in rows:
            writer.writerow([r.iteration, repr(r.static), repr(r.dynamic), repr(r.total)])


def write_partition(path: str | Path, points: np.ndarray, labels: np.ndarray) -> None:
    """Segmented P^O: 0 = static, 1 = movable."""
    write_ply(path, points, labels=labels)


def write_model_json(path: str | Path, model) -> None:
    """Pydantic model as indented JSON; identical models give identical bytes."""
    Path(path).write_text(model.model_dump_json(indent=2) + "\n", encoding="utf-8")
