"""The 47-value descriptor computed from mask, contour, color groups, and
both rasters.

Layout (frozen contract, ``FEATURE_LAYOUT_VERSION``):

====== =======================================================================
index  definition (bbox = (x0, y0, w, h); A = mask area; P = perimeter;
       W, H = image size; all values clipped to [0, 1])
====== =======================================================================
0      A / (W*H)
1      w / W
2      h / H
3      P / (2*(W+H))
4      w / (w + h)
5      compactness 4*pi*A / P^2 (1.0 when P == 0)
6-13   radial signature: max centroid-to-contour distance per 45-degree
       sector starting at 0, divided by the global max (empty sector -> 0)
14     solidity A / convex hull area of the contour (degenerate hull -> 1)
15     extent A / (w*h)
16     eccentricity from central second moments
17     tail convexity: foreground fraction of the rearmost 20% of columns
18     edge density: boundary pixel count / A
19-22  intensity std per bbox quadrant (TL, TR, BL, BR), / 128
23     orientation (theta + pi/2) / pi
24-26  dorsum mean R, G, B / 255 (rows above the centroid)
27-29  ventral mean R, G, B / 255 (rows at or below the centroid)
30-32  per-channel contrast (dorsum - ventral + 1) / 2
33     foreground mean intensity / 255
34     foreground intensity std / 128
35     min(color group count, 32) / 32
36-37  topmost contour point relative to bbox
38     upper triangle area / (w*h)  [x-extremes + topmost point]
39-40  bottommost contour point relative to bbox
41     lower triangle area / (w*h)  [x-extremes + bottommost point]
42     triangle similarity min(area)/max(area) (both zero -> 1)
43-44  eye estimate: centroid of the darkest decile of the head band
       (head-side 25% of columns), relative to bbox (empty band -> 0, 0)
45     mouth size: foreground vertical extent in the head-side 5% of
       columns, / h
46     apex angle of the upper triangle at the topmost point, / pi
====== =======================================================================

Every quantity is computed in bbox-local coordinates, so shifting the fish by
whole pixels leaves the vector bit-identical.
"""

from __future__ import annotations

from dataclasses import dataclass
import math

import numpy as np

from .errors import InconsistentInputs
from .imageio import IndexedImage, RgbImage
from .segment import ColorGroups, Contour, FishMask

FEATURE_COUNT = 47
FEATURE_LAYOUT_VERSION = 1

# group boundaries of the layout above
SIZE_SLICE = slice(0, 6)
SHAPE_SLICE = slice(6, 24)
COLOR_SLICE = slice(24, 36)
GEOMETRY_SLICE = slice(36, 47)


@dataclass(frozen=True)
class TrianglePair:
    """Extreme contour points and the two triangles they span."""

    p_xmin: tuple[int, int]
    p_xmax: tuple[int, int]
    p_ymin: tuple[int, int]
    p_ymax: tuple[int, int]
    area_up: float
    area_down: float


def triangle_area(a, b, c) -> float:
    """Shoelace area; exact for integer vertices."""
    return abs(
        (b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1])
    ) / 2.0


def extreme_triangles(contour: Contour) -> TrianglePair:
    return _point_triangles(contour.points)


def _extreme(pts: np.ndarray, axis: int, take_max: bool):
    """Extreme point along an axis; ties take the smallest other coordinate."""
    other = 1 - axis
    key = -pts[:, axis] if take_max else pts[:, axis]
    i = np.lexsort((pts[:, other], key))[0]
    return (int(pts[i, 0]), int(pts[i, 1]))


def find_head_side(mask: FishMask) -> str:
    """'left' or 'right': the bbox half holding more foreground (tie: left).

    Fish bodies are bulkier at the head than at the tail, which makes the
    denser half a reliable head indicator for side-view silhouettes.
    """
    x0, _, w, _ = mask.bbox
    _, xs = np.nonzero(mask.bits)
    left = int(np.count_nonzero(2 * (xs - x0) < w))
    return "left" if left >= mask.area - left else "right"


def extract_features(
    img: RgbImage,
    idx: IndexedImage,
    mask: FishMask,
    contour: Contour,
    groups: ColorGroups,
) -> np.ndarray:
    """Compute the 47-value descriptor; see the module docstring for layout."""
    if not (
        img.width == idx.width == mask.width
        and img.height == idx.height == mask.height
    ):
        raise InconsistentInputs("image, index and mask dimensions differ")
    if groups.group_of.size != mask.area:
        raise InconsistentInputs("color groups do not match the mask")

    W, H = img.width, img.height
    x0, y0, w, h = mask.bbox
    A = mask.area
    P = contour.perimeter

    ys, xs = np.nonzero(mask.bits)  # row-major
    lx = (xs - x0).astype(np.int64)
    ly = (ys - y0).astype(np.int64)
    cxl = float(lx.sum() / A)
    cyl = float(ly.sum() / A)
    cpts = contour.points - np.array([x0, y0], dtype=np.int64)

    f = np.zeros(FEATURE_COUNT, dtype=np.float64)

    # size
    f[0] = A / (W * H)
    f[1] = w / W
    f[2] = h / H
    f[3] = P / (2.0 * (W + H))
    f[4] = w / (w + h)
    f[5] = 1.0 if P == 0 else min(1.0, 4.0 * math.pi * A / (P * P))

    # radial signature over 8 sectors of 45 degrees
    dxc = cpts[:, 0] - cxl
    dyc = cpts[:, 1] - cyl
    radii = np.hypot(dxc, dyc)
    rmax = float(radii.max()) if radii.size else 0.0
    if rmax > 0:
        ang = np.arctan2(dyc, dxc)
        ang = np.mod(ang + 2.0 * math.pi, 2.0 * math.pi)
        sector = np.minimum((ang // (math.pi / 4.0)).astype(np.int64), 7)
        for s in range(8):
            sel = sector == s
            if sel.any():
                f[6 + s] = float(radii[sel].max()) / rmax

    # solidity and extent
    hull_area = _polygon_area(_convex_hull(cpts))
    f[14] = 1.0 if hull_area <= 0.0 else min(1.0, A / hull_area)
    f[15] = A / (w * h)

    # eccentricity and orientation from central second moments
    dx = lx - cxl
    dy = ly - cyl
    s20 = float(dx @ dx) / A
    s02 = float(dy @ dy) / A
    s11 = float(dx @ dy) / A
    half_tr = 0.5 * (s20 + s02)
    root = math.hypot(0.5 * (s20 - s02), s11)
    lam1 = half_tr + root
    lam2 = max(half_tr - root, 0.0)
    f[16] = math.sqrt(max(0.0, 1.0 - lam2 / lam1)) if lam1 > 0 else 0.0
    theta = 0.5 * math.atan2(2.0 * s11, s20 - s02)
    f[23] = (theta + math.pi / 2.0) / math.pi

    # head-dependent bands
    head = find_head_side(mask)
    rear_cols = max(1, (2 * w + 5) // 10)  # round(w / 5)
    if head == "left":
        rear_sel = lx >= w - rear_cols
    else:
        rear_sel = lx < rear_cols
    f[17] = float(np.count_nonzero(rear_sel)) / (rear_cols * h)

    f[18] = _boundary_count(mask.bits) / A

    # per-quadrant intensity spread
    iv = idx.index[ys, xs].astype(np.float64)
    top = ly < h / 2.0
    left_half = lx < w / 2.0
    for qi, sel in enumerate(
        (top & left_half, top & ~left_half, ~top & left_half, ~top & ~left_half)
    ):
        if sel.any():
            f[19 + qi] = min(1.0, float(iv[sel].std()) / 128.0)

    # color signature
    rgb = img.pixels[ys, xs].astype(np.float64)
    dorsum = ly < cyl
    dmean = rgb[dorsum].mean(axis=0) / 255.0 if dorsum.any() else np.zeros(3)
    vmean = rgb[~dorsum].mean(axis=0) / 255.0 if (~dorsum).any() else np.zeros(3)
    f[24:27] = dmean
    f[27:30] = vmean
    f[30:33] = (dmean - vmean + 1.0) / 2.0
    f[33] = float(iv.sum() / A) / 255.0
    f[34] = min(1.0, float(iv.std()) / 128.0)
    f[35] = min(groups.group_count, 32) / 32.0

    # geometric parameters from the extreme-point triangles
    tri = _point_triangles(cpts)
    f[36] = tri.p_ymin[0] / w
    f[37] = tri.p_ymin[1] / h
    f[38] = tri.area_up / (w * h)
    f[39] = tri.p_ymax[0] / w
    f[40] = tri.p_ymax[1] / h
    f[41] = tri.area_down / (w * h)
    big = max(tri.area_up, tri.area_down)
    f[42] = 1.0 if big == 0.0 else min(tri.area_up, tri.area_down) / big

    head_cols = max(1, (w + 2) // 4)  # round(w / 4)
    head_sel = lx < head_cols if head == "left" else lx >= w - head_cols
    if head_sel.any():
        n_dark = max(1, int(np.count_nonzero(head_sel)) // 10)
        hx = lx[head_sel]
        hy = ly[head_sel]
        order = np.argsort(iv[head_sel], kind="stable")[:n_dark]
        f[43] = float(hx[order].sum() / n_dark) / w
        f[44] = float(hy[order].sum() / n_dark) / h

    mouth_cols = max(1, (w + 10) // 20)  # round(w / 20)
    mouth_sel = lx < mouth_cols if head == "left" else lx >= w - mouth_cols
    if mouth_sel.any():
        my = ly[mouth_sel]
        f[45] = float(my.max() - my.min() + 1) / h

    v1 = np.array(tri.p_xmin, dtype=np.float64) - tri.p_ymin
    v2 = np.array(tri.p_xmax, dtype=np.float64) - tri.p_ymin
    n1, n2 = np.hypot(*v1), np.hypot(*v2)
    if n1 > 0 and n2 > 0:
        cos_a = min(1.0, max(-1.0, float(v1 @ v2) / (n1 * n2)))
        f[46] = math.acos(cos_a) / math.pi

    out = np.clip(f, 0.0, 1.0)
    if not np.all(np.isfinite(out)):
        raise InconsistentInputs("feature vector contains non-finite values")
    return out


def _point_triangles(cpts: np.ndarray) -> TrianglePair:
    p_xmin = _extreme(cpts, 0, False)
    p_xmax = _extreme(cpts, 0, True)
    p_ymin = _extreme(cpts, 1, False)
    p_ymax = _extreme(cpts, 1, True)
    return TrianglePair(
        p_xmin,
        p_xmax,
        p_ymin,
        p_ymax,
        triangle_area(p_xmin, p_xmax, p_ymin),
        triangle_area(p_xmin, p_xmax, p_ymax),
    )


def _boundary_count(bits: np.ndarray) -> int:
    """Pixels with a false 4-neighbor or on the image edge."""
    inner = np.zeros_like(bits)
    inner[1:-1, 1:-1] = (
        bits[:-2, 1:-1] & bits[2:, 1:-1] & bits[1:-1, :-2] & bits[1:-1, 2:]
    )
    return int(np.count_nonzero(bits & ~inner))


def _convex_hull(pts: np.ndarray) -> np.ndarray:
    """Andrew monotone chain over integer points; returns hull vertices."""
    uniq = np.unique(pts, axis=0)  # sorted lexicographically by (x, y)
    if len(uniq) <= 2:
        return uniq
    pts_list = [tuple(p) for p in uniq]

    def half(points):
        chain = []
        for p in points:
            while len(chain) >= 2 and _cross(chain[-2], chain[-1], p) <= 0:
                chain.pop()
            chain.append(p)
        return chain

    lower = half(pts_list)
    upper = half(pts_list[::-1])
    return np.array(lower[:-1] + upper[:-1], dtype=np.int64)


def _cross(o, a, b) -> int:
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])


def _polygon_area(pts: np.ndarray) -> float:
    if len(pts) < 3:
        return 0.0
    x = pts[:, 0]
    y = pts[:, 1]
    s = x @ np.roll(y, -1) - np.roll(x, -1) @ y
    return abs(float(s)) / 2.0


def write_features_csv(path, rows) -> None:
    """Write a feature table; ``rows`` yields
    ``(values, family, poison, cluster, split)`` tuples."""
    header = ",".join(f"f{i}" for i in range(FEATURE_COUNT))
    lines = [header + ",family,poison,cluster,split"]
    for values, family, poison, cluster, split in rows:
        nums = ",".join(format(float(v), ".9g") for v in values)
        lines.append(f"{nums},{family},{int(poison)},{cluster},{split}")
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")
