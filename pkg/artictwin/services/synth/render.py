"""Point-splat z-buffer rendering.

Each surface point covers a small square of pixels sized from the sampling
spacing; every pixel keeps the nearest covering point.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from artictwin.services.observations import Intrinsics

_NEAR = 0.05  # meters


@dataclass(frozen=True)
class ZBuffer:
    """Per-pixel winner: point index (-1 = empty) and depth (inf = empty)."""

    point_index: np.ndarray  # (H, W) int64
    depth: np.ndarray        # (H, W) float64

    @property
    def covered(self) -> np.ndarray:
        return self.point_index >= 0


def render_zbuffer(
    cam_points: np.ndarray,
    spacing: np.ndarray,
    intrinsics: Intrinsics,
    height: int,
    width: int,
) -> ZBuffer:
    """Rasterise camera-frame points with per-point world spacing into a z-buffer."""
    index = np.full(height * width, -1, dtype=np.int64)
    depth = np.full(height * width, np.inf)
    z = cam_points[:, 2]
    front = np.nonzero(z > _NEAR)[0]
    if len(front) == 0:
        return ZBuffer(index.reshape(height, width), depth.reshape(height, width))

    pts = cam_points[front]
    u, v = intrinsics.project(pts)
    radius = np.maximum(0.75 * spacing[front] * intrinsics.fx / pts[:, 2], 0.5)
    reach = int(np.ceil(radius.max()))

    pix_list, depth_list, id_list = [], [], []
    for dv in range(-reach, reach + 1):
        for du in range(-reach, reach + 1):
            pu = np.round(u).astype(np.int64) + du
            pv = np.round(v).astype(np.int64) + dv
            ok = (
                (np.abs(pu - u) <= radius)
                & (np.abs(pv - v) <= radius)
                & (pu >= 0) & (pu < width) & (pv >= 0) & (pv < height)
            )
            pix_list.append(pv[ok] * width + pu[ok])
            depth_list.append(pts[ok, 2])
            id_list.append(front[ok])

    pix = np.concatenate(pix_list)
    dep = np.concatenate(depth_list)
    ids = np.concatenate(id_list)
    if len(pix) == 0:
        return ZBuffer(index.reshape(height, width), depth.reshape(height, width))

    # nearest depth per pixel; ties broken by point index for determinism
    order = np.lexsort((ids, dep, pix))
    pix, dep, ids = pix[order], dep[order], ids[order]
    first = np.ones(len(pix), dtype=bool)
    first[1:] = pix[1:] != pix[:-1]
    index[pix[first]] = ids[first]
    depth[pix[first]] = dep[first]
    return ZBuffer(index.reshape(height, width), depth.reshape(height, width))


def visible_by_depth_test(
    cam_points: np.ndarray,
    zbuffer: ZBuffer,
    intrinsics: Intrinsics,
    tolerance: float,
) -> np.ndarray:
    """Boolean mask of points whose depth is within `tolerance` of the z-buffer at their pixel."""
    height, width = zbuffer.depth.shape
    z = cam_points[:, 2]
    out = np.zeros(len(cam_points), dtype=bool)
    front = np.nonzero(z > _NEAR)[0]
    if len(front) == 0:
        return out
    u, v = intrinsics.project(cam_points[front])
    pu = np.round(u).astype(np.int64)
    pv = np.round(v).astype(np.int64)
    inside = (pu >= 0) & (pu < width) & (pv >= 0) & (pv < height)
    sel = front[inside]
    zb = zbuffer.depth[pv[inside], pu[inside]]
    out[sel] = z[sel] <= zb + tolerance
    return out
