"""Foreground isolation, contour tracing, band division, and color grouping.

Conventions: connected components use 4-connectivity, contour steps use
8-connectivity. Tie-breaks always favor the smallest row-major pixel index so
repeated runs are byte-for-byte reproducible.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage, sparse
from scipy.sparse import csgraph

from .errors import EmptyForeground
from .imageio import RgbImage

_FOUR = np.array([[0, 1, 0], [1, 1, 1], [0, 1, 0]])

# Moore neighborhood in clockwise order (x right, y down):
# W, NW, N, NE, E, SE, S, SW
_MOORE = ((-1, 0), (-1, -1), (0, -1), (1, -1), (1, 0), (1, 1), (0, 1), (-1, 1))
_MOORE_INDEX = {d: i for i, d in enumerate(_MOORE)}


@dataclass(frozen=True, eq=False)
class FishMask:
    """Binary foreground of a single 4-connected component."""

    bits: np.ndarray  # (h, w) bool
    area: int
    bbox: tuple[int, int, int, int]  # x0, y0, w, h
    centroid: tuple[float, float]

    @classmethod
    def from_bits(cls, bits: np.ndarray) -> "FishMask":
        ys, xs = np.nonzero(bits)
        if ys.size == 0:
            raise EmptyForeground("mask has no foreground pixels")
        x0, y0 = int(xs.min()), int(ys.min())
        w = int(xs.max()) - x0 + 1
        h = int(ys.max()) - y0 + 1
        cx = float(xs.sum() / xs.size)
        cy = float(ys.sum() / ys.size)
        return cls(bits, int(ys.size), (x0, y0, w, h), (cx, cy))

    @property
    def width(self) -> int:
        return self.bits.shape[1]

    @property
    def height(self) -> int:
        return self.bits.shape[0]


@dataclass(frozen=True, eq=False)
class Contour:
    """Closed boundary pixel sequence; perimeter sums 1/sqrt(2) step lengths."""

    points: np.ndarray  # (n, 2) int64, columns (x, y)
    perimeter: float


@dataclass(frozen=True, eq=False)
class ColorGroups:
    """Color-similarity grouping of foreground pixels.

    ``group_of[i]`` is the group id of the i-th foreground pixel in row-major
    order; ids are assigned in order of each group's first pixel.
    """

    group_count: int
    group_of: np.ndarray
    mean_color: np.ndarray  # (group_count, 3) float64


def extract_mask(img: RgbImage, background_color, fg_tolerance: float) -> FishMask:
    """Keep the largest 4-connected component farther than ``fg_tolerance``
    from the background color (ties: the component containing the smallest
    row-major pixel index)."""
    if fg_tolerance <= 0:
        raise ValueError("fg_tolerance must be > 0")
    bg = np.asarray(background_color, dtype=np.int32)
    # squared-distance comparison is exact for integer pixel deltas
    diff = img.pixels.astype(np.int32) - bg
    fg = np.sum(diff * diff, axis=2) > fg_tolerance * fg_tolerance
    if not fg.any():
        raise EmptyForeground("no pixel exceeds the foreground tolerance")
    labels, count = ndimage.label(fg, structure=_FOUR)
    sizes = np.bincount(labels.ravel())
    sizes[0] = 0
    best_size = sizes.max()
    flat = labels.ravel()
    # first row-major pixel belonging to any largest component wins
    winner = flat[int(np.argmax(sizes[flat] == best_size))]
    return FishMask.from_bits(labels == winner)


def trace_contour(mask: FishMask) -> Contour:
    """Clockwise Moore boundary trace from the smallest row-major pixel."""
    bits = mask.bits
    h, w = bits.shape
    ys, xs = np.nonzero(bits)
    start = (int(xs[0]), int(ys[0]))

    def fg(x, y):
        return 0 <= x < w and 0 <= y < h and bits[y, x]

    back0 = (start[0] - 1, start[1])  # virtual entry from the west
    points = [start]
    state0 = (start, back0)
    seen = {state0}
    cur, back = start, back0
    while True:
        cx, cy = cur
        k = _MOORE_INDEX[(back[0] - cx, back[1] - cy)]
        step = None
        for i in range(1, 9):
            dx, dy = _MOORE[(k + i) % 8]
            if fg(cx + dx, cy + dy):
                pdx, pdy = _MOORE[(k + i - 1) % 8]
                step = ((cx + dx, cy + dy), (cx + pdx, cy + pdy))
                break
        if step is None:
            break  # isolated pixel
        if step == state0 or step in seen:
            break
        seen.add(step)
        points.append(step[0])
        cur, back = step
    if len(points) >= 2 and points[-1] == points[0]:
        points.pop()
    pts = np.array(points, dtype=np.int64)
    if len(pts) < 2:
        return Contour(pts, 0.0)
    diffs = pts - np.roll(pts, 1, axis=0)  # includes the closing step
    perim = float(np.hypot(diffs[:, 0], diffs[:, 1]).sum())
    return Contour(pts, perim)


def divide_segments(mask: FishMask, img: RgbImage, k: int):
    """Split the mask bbox into k vertical bands of equal width (the last
    band absorbs the remainder; when k exceeds the bbox width the extra
    trailing bands are zero-width). Returns a list of
    ``((x0, y0, w, h), mean_rgb, pixel_count)`` per band."""
    if k < 1:
        raise ValueError("k must be >= 1")
    x0, y0, w, h = mask.bbox
    base = max(1, w // k)
    ys, xs = np.nonzero(mask.bits)
    colors = img.pixels[ys, xs].astype(np.float64)
    bands = []
    for i in range(k):
        lo = x0 + min(i * base, w)
        hi = x0 + w if i == k - 1 else x0 + min((i + 1) * base, w)
        hi = max(hi, lo)
        sel = (xs >= lo) & (xs < hi)
        n = int(sel.sum())
        if n:
            mean = tuple(float(v) for v in colors[sel].mean(axis=0))
        else:
            mean = (0.0, 0.0, 0.0)
        bands.append(((int(lo), y0, int(hi - lo), h), mean, n))
    return bands


def group_by_color(mask: FishMask, img: RgbImage, eps: float) -> ColorGroups:
    """Group 4-adjacent foreground pixels whose colors differ by at most
    ``eps`` (Euclidean RGB); groups are maximal under that relation."""
    if eps < 0:
        raise ValueError("eps must be >= 0")
    ys, xs = np.nonzero(mask.bits)
    n = ys.size
    h, w = mask.bits.shape
    index = np.full((h, w), -1, dtype=np.int64)
    index[ys, xs] = np.arange(n)
    colors = img.pixels[ys, xs].astype(np.float64)

    rows_a, rows_b = [], []
    for dx, dy in ((1, 0), (0, 1)):
        nx, ny = xs + dx, ys + dy
        ok = (nx < w) & (ny < h)
        ok[ok] &= mask.bits[ny[ok], nx[ok]]
        a = np.nonzero(ok)[0]
        b = index[ny[a], nx[a]]
        d2 = np.sum((colors[a] - colors[b]) ** 2, axis=1)
        near = d2 <= eps * eps
        rows_a.append(a[near])
        rows_b.append(b[near])
    a = np.concatenate(rows_a)
    b = np.concatenate(rows_b)
    graph = sparse.coo_matrix((np.ones(a.size), (a, b)), shape=(n, n))
    count, raw = csgraph.connected_components(graph, directed=False)
    # renumber so group ids follow each group's first row-major pixel
    first = np.full(count, n, dtype=np.int64)
    np.minimum.at(first, raw, np.arange(n))
    new_of_old = np.empty(count, dtype=np.int64)
    new_of_old[np.argsort(first, kind="stable")] = np.arange(count)
    group_of = new_of_old[raw]
    sums = np.zeros((count, 3), dtype=np.float64)
    np.add.at(sums, group_of, colors)
    sizes = np.bincount(group_of, minlength=count).astype(np.float64)
    return ColorGroups(int(count), group_of, sums / sizes[:, np.newaxis])
