"""Dataset manifest: one JSON file per video pointing at checksummed data files."""
from __future__ import annotations

import json
import logging
from pathlib import Path
from typing import List, Optional

import numpy as np
from pydantic import BaseModel, Field, ValidationError

from artictwin.services.errors import BadChecksum, DimensionMismatch, MissingFile, SchemaError
from artictwin.services.geometry import JointModel, JointStateSequence, PointCloud, RigidTransform
from artictwin.services.interchange.formats import (
    read_correspondences,
    read_map,
    read_organized_cloud,
    read_ply,
    read_segment_map,
    sha256_of,
    write_correspondences,
    write_map,
    write_organized_cloud,
    write_ply,
    write_segment_map,
)
from artictwin.services.observations import Dataset, FrameObservation, GroundTruth, Intrinsics

logger = logging.getLogger(__name__)

MANIFEST_VERSION = 1
MANIFEST_NAME = "manifest.json"


class FileRef(BaseModel):
    path: str
    sha256: str


class CorrespondenceRef(BaseModel):
    frame_a: int
    frame_b: int
    file: FileRef


class GroundTruthRef(BaseModel):
    joint: dict
    states: List[float]
    cameras: List[List[List[float]]]
    movable_part: int
    moving_maps: List[FileRef]
    surface_labels: FileRef    # PLY of P^O with part labels
    canonical: FileRef         # PLY of every sampled surface point with part labels


class DatasetManifest(BaseModel):
    version: int = MANIFEST_VERSION
    name: str = "video"
    frame_count: int = Field(ge=2)
    height: int = Field(ge=1)
    width: int = Field(ge=1)
    intrinsics: Intrinsics
    frame_ids: List[int]
    surface: FileRef
    frames: List[FileRef]
    moving_maps: List[FileRef]
    segments: List[FileRef]
    correspondences: List[CorrespondenceRef] = Field(default_factory=list)
    ground_truth: Optional[GroundTruthRef] = None
    meta: dict = Field(default_factory=dict)


# ── writing ──────────────────────────────────────────────────────────────────

def _ref(root: Path, relative: str) -> FileRef:
    return FileRef(path=relative, sha256=sha256_of(root / relative))


def write_dataset(dataset: Dataset, out_dir: str | Path) -> Path:
    """Write every array of `dataset` plus manifest.json; returns the manifest path."""
    root = Path(out_dir)
    for sub in ("frames", "maps", "segments", "matches", "gt"):
        (root / sub).mkdir(parents=True, exist_ok=True)

    write_ply(root / "surface.ply", dataset.surface.points)
    frames, maps, segments = [], [], []
    for t, frame in enumerate(dataset.frames):
        fid = frame.frame_id
        write_organized_cloud(root / f"frames/{fid:05d}.ply", frame.points, frame.valid)
        write_map(root / f"maps/{fid:05d}.map", dataset.moving_maps[t])
        write_segment_map(root / f"segments/{fid:05d}.seg", dataset.segment_labels[t])
        frames.append(_ref(root, f"frames/{fid:05d}.ply"))
        maps.append(_ref(root, f"maps/{fid:05d}.map"))
        segments.append(_ref(root, f"segments/{fid:05d}.seg"))

    matches = []
    for corr in dataset.correspondences:
        rel = f"matches/{corr.frame_a:05d}_{corr.frame_b:05d}.txt"
        write_correspondences(root / rel, corr)
        matches.append(CorrespondenceRef(frame_a=corr.frame_a, frame_b=corr.frame_b, file=_ref(root, rel)))

    gt_ref = None
    gt = dataset.ground_truth
    if gt is not None:
        gt_maps = []
        for t, frame in enumerate(dataset.frames):
            rel = f"gt/{frame.frame_id:05d}.map"
            write_map(root / rel, gt.moving_maps[t])
            gt_maps.append(_ref(root, rel))
        write_ply(root / "gt/surface_labels.ply", dataset.surface.points, labels=gt.surface_labels)
        write_ply(root / "gt/canonical.ply", gt.canonical_points, labels=gt.canonical_labels)
        gt_ref = GroundTruthRef(
            joint=gt.joint.to_dict(),
            states=gt.states.states.tolist(),
            cameras=[c.to_list() for c in gt.cameras],
            movable_part=gt.movable_part,
            moving_maps=gt_maps,
            surface_labels=_ref(root, "gt/surface_labels.ply"),
            canonical=_ref(root, "gt/canonical.ply"),
        )

    manifest = DatasetManifest(
        name=dataset.name,
        frame_count=dataset.frame_count,
        height=dataset.height,
        width=dataset.width,
        intrinsics=dataset.intrinsics,
        frame_ids=dataset.frame_ids,
        surface=_ref(root, "surface.ply"),
        frames=frames,
        moving_maps=maps,
        segments=segments,
        correspondences=matches,
        ground_truth=gt_ref,
        meta=dataset.meta,
    )
    path = root / MANIFEST_NAME
    path.write_text(manifest.model_dump_json(indent=2), encoding="utf-8")
    logger.info("io.write_dataset path=%s frames=%d pairs=%d", path, dataset.frame_count, len(matches))
    return path


# ── reading ──────────────────────────────────────────────────────────────────

def load_manifest(path: str | Path) -> DatasetManifest:
    path = Path(path)
    if path.is_dir():
        path = path / MANIFEST_NAME
    if not path.is_file():
        raise MissingFile(str(path), "manifest", "file does not exist")
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise SchemaError(str(path), "manifest", f"invalid JSON: {exc}") from exc
    try:
        return DatasetManifest.model_validate(data)
    except ValidationError as exc:
        first = exc.errors()[0]
        field = ".".join(str(p) for p in first["loc"]) or "manifest"
        raise SchemaError(str(path), field, first["msg"]) from exc


def _checked(root: Path, ref: FileRef, field: str) -> Path:
    path = root / ref.path
    if not path.is_file():
        raise MissingFile(str(path), field, "file does not exist")
    if sha256_of(path) != ref.sha256:
        raise BadChecksum(str(path), field, "sha256 does not match manifest")
    return path


def read_dataset(manifest_path: str | Path) -> Dataset:
    """Load and validate a dataset; every inconsistency names its file and field."""
    manifest_path = Path(manifest_path)
    m = load_manifest(manifest_path)
    root = manifest_path if manifest_path.is_dir() else manifest_path.parent
    where = str(root / MANIFEST_NAME)
    shape = (m.height, m.width)
    T = m.frame_count
    for name, refs in (("frame_ids", m.frame_ids), ("frames", m.frames), ("moving_maps", m.moving_maps), ("segments", m.segments)):
        if len(refs) != T:
            raise DimensionMismatch(where, name, f"{len(refs)} entries for frame_count {T}")
    if len(set(m.frame_ids)) != T:
        raise SchemaError(where, "frame_ids", "frame ids must be unique")

    surface_pts, _, _ = read_ply(_checked(root, m.surface, "surface"), "surface")
    frames, maps, segments = [], [], []
    for t in range(T):
        pts, valid = read_organized_cloud(_checked(root, m.frames[t], f"frames[{t}]"), f"frames[{t}]")
        if valid.shape != shape:
            raise DimensionMismatch(str(root / m.frames[t].path), f"frames[{t}]", f"grid {valid.shape}, expected {shape}")
        frames.append(FrameObservation(m.frame_ids[t], pts, valid))
        maps.append(read_map(_checked(root, m.moving_maps[t], f"moving_maps[{t}]"), shape, f"moving_maps[{t}]"))
        segments.append(read_segment_map(_checked(root, m.segments[t], f"segments[{t}]"), shape, f"segments[{t}]"))

    known = set(m.frame_ids)
    n_pix = m.height * m.width
    correspondences = []
    for k, ref in enumerate(m.correspondences):
        field = f"correspondences[{k}]"
        if ref.frame_a not in known or ref.frame_b not in known:
            raise SchemaError(where, field, f"pair ({ref.frame_a}, {ref.frame_b}) names an unknown frame")
        corr = read_correspondences(_checked(root, ref.file, field), ref.frame_a, ref.frame_b, field)
        if len(corr) and (
            corr.idx_a.min() < 0 or corr.idx_b.min() < 0 or corr.idx_a.max() >= n_pix or corr.idx_b.max() >= n_pix
        ):
            raise DimensionMismatch(str(root / ref.file.path), field, f"pixel index outside a {m.height}x{m.width} grid")
        correspondences.append(corr)

    gt = None
    surface_labels = None
    if m.ground_truth is not None:
        g = m.ground_truth
        if len(g.states) != T or len(g.cameras) != T or len(g.moving_maps) != T:
            raise DimensionMismatch(where, "ground_truth", f"ground truth does not cover {T} frames")
        gt_maps = np.stack([
            read_map(_checked(root, ref, f"ground_truth.moving_maps[{t}]"), shape, f"ground_truth.moving_maps[{t}]")
            for t, ref in enumerate(g.moving_maps)
        ])
        _, surface_labels, _ = read_ply(_checked(root, g.surface_labels, "ground_truth.surface_labels"), "ground_truth.surface_labels")
        if surface_labels is None or len(surface_labels) != len(surface_pts):
            raise DimensionMismatch(where, "ground_truth.surface_labels", "labels do not match the surface cloud")
        canon_pts, canon_labels, _ = read_ply(_checked(root, g.canonical, "ground_truth.canonical"), "ground_truth.canonical")
        gt = GroundTruth(
            joint=JointModel.from_dict(g.joint),
            states=JointStateSequence(np.asarray(g.states)),
            cameras=[RigidTransform.from_matrix(np.asarray(c)) for c in g.cameras],
            moving_maps=gt_maps,
            surface_labels=surface_labels,
            movable_part=g.movable_part,
            canonical_points=canon_pts,
            canonical_labels=canon_labels,
        )

    dataset = Dataset(
        intrinsics=m.intrinsics,
        frames=frames,
        moving_maps=np.stack(maps),
        segment_labels=np.stack(segments),
        correspondences=correspondences,
        surface=PointCloud(surface_pts, labels=surface_labels),
        ground_truth=gt,
        name=m.name,
        meta=m.meta,
    )
    logger.info("io.read_dataset path=%s frames=%d pairs=%d gt=%s", where, T, len(correspondences), gt is not None)
    return dataset
