"""Discrete geometry of sampled paths.

Cells are unit squares of side ``cell_size``; cell ``(i, j)`` covers
``[i c, (i + 1) c) x [j c, (j + 1) c)``.  Occupied sets and the complement
flood fill both use 4-connectivity.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numba
import numpy as np
from scipy import ndimage

from .errors import ConfigurationError, DomainError
from .fitting import PowerLawFit, fit_power_law
from .paths import LatticeWalk, Path2D

__all__ = [
    "GridMask",
    "IndexSet",
    "rasterize",
    "hull",
    "frontier",
    "cut_times",
    "pioneer_times",
    "disconnects",
    "box_dimension",
    "walk_mask",
]

_CROSS = ndimage.generate_binary_structure(2, 1)


@dataclass(frozen=True, eq=False)
class GridMask:
    """Set of grid cells stored as a tight boolean bitmap.

    ``bitmap[a, b]`` is cell ``(origin[0] + a, origin[1] + b)``.  The
    constructor crops the bitmap to the bounding box of its set cells.
    """

    cell_size: float
    origin: tuple
    bitmap: np.ndarray

    def __post_init__(self):
        if not self.cell_size > 0:
            raise ValueError("cell_size must be positive")
        bm = np.asarray(self.bitmap, dtype=bool)
        if bm.ndim != 2:
            raise ValueError("bitmap must be 2-d")
        ox, oy = int(self.origin[0]), int(self.origin[1])
        if bm.any():
            xs = np.flatnonzero(bm.any(axis=1))
            ys = np.flatnonzero(bm.any(axis=0))
            bm = bm[xs[0]:xs[-1] + 1, ys[0]:ys[-1] + 1]
            ox, oy = ox + int(xs[0]), oy + int(ys[0])
        else:
            bm = np.zeros((0, 0), dtype=bool)
            ox = oy = 0
        bm = np.ascontiguousarray(bm)
        bm.setflags(write=False)
        object.__setattr__(self, "bitmap", bm)
        object.__setattr__(self, "origin", (ox, oy))
        object.__setattr__(self, "cell_size", float(self.cell_size))

    @classmethod
    def from_cells(cls, cells, cell_size: float = 1.0) -> "GridMask":
        c = np.asarray(cells, dtype=np.int64).reshape(-1, 2)
        if len(c) == 0:
            return cls(cell_size, (0, 0), np.zeros((0, 0), dtype=bool))
        lo = c.min(axis=0)
        hi = c.max(axis=0)
        bm = np.zeros(tuple(hi - lo + 1), dtype=bool)
        bm[c[:, 0] - lo[0], c[:, 1] - lo[1]] = True
        return cls(cell_size, (int(lo[0]), int(lo[1])), bm)

    @property
    def bounds(self) -> tuple:
        """Inclusive ``(imin, jmin, imax, jmax)``; ``None`` for an empty mask."""
        if self.count == 0:
            return None
        nx, ny = self.bitmap.shape
        return (self.origin[0], self.origin[1],
                self.origin[0] + nx - 1, self.origin[1] + ny - 1)

    @property
    def count(self) -> int:
        return int(self.bitmap.sum())

    def __len__(self):
        return self.count

    def cells(self) -> np.ndarray:
        """Set cells as an ``(k, 2)`` array in lexicographic order."""
        a, b = np.nonzero(self.bitmap)
        return np.stack([a + self.origin[0], b + self.origin[1]], axis=1)

    def cell_set(self) -> set:
        return {(int(a), int(b)) for a, b in self.cells()}

    def __contains__(self, cell) -> bool:
        a = int(cell[0]) - self.origin[0]
        b = int(cell[1]) - self.origin[1]
        nx, ny = self.bitmap.shape
        return 0 <= a < nx and 0 <= b < ny and bool(self.bitmap[a, b])

    def __eq__(self, other):
        if not isinstance(other, GridMask):
            return NotImplemented
        return (self.cell_size == other.cell_size and self.origin == other.origin
                and np.array_equal(self.bitmap, other.bitmap))

    def __or__(self, other: "GridMask") -> "GridMask":
        if self.cell_size != other.cell_size:
            raise ConfigurationError("cannot combine masks with different cell sizes")
        return GridMask.from_cells(np.concatenate([self.cells(), other.cells()]),
                                   self.cell_size)

    def issubset(self, other: "GridMask") -> bool:
        return all(tuple(c) in other for c in self.cells())

    def contains_point(self, z: complex) -> bool:
        c = self.cell_size
        return (math.floor(z.real / c), math.floor(z.imag / c)) in self

    def padded(self, pad: int = 1):
        """Bitmap with ``pad`` empty cells on every side, and its origin."""
        bm = np.pad(self.bitmap, pad)
        return bm, (self.origin[0] - pad, self.origin[1] - pad)

    def to_pbm(self, path) -> None:
        """Plain PBM; rows run from the top (largest j) down."""
        nx, ny = self.bitmap.shape
        rows = self.bitmap.T[::-1].astype(np.uint8)
        lines = ["P1",
                 f"# cell_size={self.cell_size!r} origin={self.origin[0]},{self.origin[1]}",
                 f"{nx} {ny}"]
        lines += [" ".join(str(v) for v in r) for r in rows]
        with open(path, "w") as fh:
            fh.write("\n".join(lines) + "\n")

    @classmethod
    def from_pbm(cls, path) -> "GridMask":
        cell, origin = 1.0, (0, 0)
        tokens = []
        with open(path) as fh:
            for line in fh:
                if line.startswith("#"):
                    for kv in line[1:].split():
                        k, _, v = kv.partition("=")
                        if k == "cell_size":
                            cell = float(v)
                        elif k == "origin":
                            origin = tuple(int(t) for t in v.split(","))
                    continue
                tokens += line.split()
        if not tokens or tokens[0] != "P1":
            raise ValueError("not a plain PBM file")
        nx, ny = int(tokens[1]), int(tokens[2])
        body = "".join(tokens[3:])
        vals = np.array([ch == "1" for ch in body], dtype=bool)
        if vals.size != nx * ny:
            raise ValueError("PBM body has the wrong size")
        return cls(cell, origin, vals.reshape(ny, nx)[::-1].T)


@dataclass(frozen=True)
class IndexSet:
    """Sorted step indices into a path with ``length`` points."""

    indices: np.ndarray
    length: int

    def __post_init__(self):
        idx = np.unique(np.asarray(self.indices, dtype=np.int64))
        if len(idx) and (idx[0] < 0 or idx[-1] >= self.length):
            raise ValueError("indices outside the path")
        object.__setattr__(self, "indices", idx)

    def __len__(self):
        return len(self.indices)

    def __iter__(self):
        return iter(int(i) for i in self.indices)

    def __contains__(self, k) -> bool:
        i = np.searchsorted(self.indices, k)
        return bool(i < len(self.indices) and self.indices[i] == k)

    def tolist(self) -> list:
        return [int(i) for i in self.indices]

    def to_csv(self, path) -> None:
        with open(path, "w") as fh:
            fh.write(f"index\n# length={self.length}\n")
            fh.writelines(f"{i}\n" for i in self.indices)

    @classmethod
    def from_csv(cls, path) -> "IndexSet":
        length = None
        idx = []
        with open(path) as fh:
            next(fh)
            for line in fh:
                if line.startswith("# length="):
                    length = int(line.split("=")[1])
                elif line.strip():
                    idx.append(int(line))
        if length is None:
            length = (max(idx) + 1) if idx else 0
        return cls(np.array(idx, dtype=np.int64), length)


# -- rasterization -----------------------------------------------------------

@numba.njit(cache=True)
def _supercover(xs, ys):
    """Cells met by the polyline through ``(xs, ys)`` (cell units)."""
    cap = 2 * len(xs) + 16
    out = np.empty((cap, 2), dtype=np.int64)
    n = 0
    ix = int(math.floor(xs[0]))
    iy = int(math.floor(ys[0]))
    out[0, 0] = ix
    out[0, 1] = iy
    n = 1
    for k in range(len(xs) - 1):
        x0 = xs[k]
        y0 = ys[k]
        dx = xs[k + 1] - x0
        dy = ys[k + 1] - y0
        ix = int(math.floor(x0))
        iy = int(math.floor(y0))
        jx = int(math.floor(xs[k + 1]))
        jy = int(math.floor(ys[k + 1]))
        nx = abs(jx - ix)
        ny = abs(jy - iy)
        sx = 1 if jx > ix else -1
        sy = 1 if jy > iy else -1
        if dx > 0:
            tx = (ix + 1 - x0) / dx
            ddx = 1.0 / dx
        elif dx < 0:
            tx = (x0 - ix) / -dx
            ddx = -1.0 / dx
        else:
            tx = np.inf
            ddx = np.inf
        if dy > 0:
            ty = (iy + 1 - y0) / dy
            ddy = 1.0 / dy
        elif dy < 0:
            ty = (y0 - iy) / -dy
            ddy = -1.0 / dy
        else:
            ty = np.inf
            ddy = np.inf
        if n + nx + ny + 1 > cap:
            while n + nx + ny + 1 > cap:
                cap *= 2
            o2 = np.empty((cap, 2), dtype=np.int64)
            o2[:n] = out[:n]
            out = o2
        # the step counts are fixed by the endpoints, so rounding in the
        # crossing times can reorder steps but never miss the target cell
        while nx > 0 or ny > 0:
            if ny == 0 or (nx > 0 and tx < ty):
                ix += sx
                tx += ddx
                nx -= 1
            else:
                iy += sy
                ty += ddy
                ny -= 1
            out[n, 0] = ix
            out[n, 1] = iy
            n += 1
    return out[:n]


def _as_points(obj) -> np.ndarray:
    if isinstance(obj, Path2D):
        return obj.points
    if isinstance(obj, LatticeWalk):
        return obj.sites[:, 0] + 1j * obj.sites[:, 1]
    a = np.asarray(obj)
    if np.iscomplexobj(a):
        return a.ravel().astype(np.complex128)
    a = a.astype(float).reshape(-1, 2)
    return a[:, 0] + 1j * a[:, 1]


def rasterize(path, cell_size: float) -> GridMask:
    """Supercover rasterization of a polyline (``Path2D`` or complex array)."""
    if not cell_size > 0:
        raise DomainError("cell_size must be positive")
    pts = _as_points(path)
    if len(pts) == 0:
        raise DomainError("empty path")
    cells = _supercover(pts.real / cell_size, pts.imag / cell_size)
    return GridMask.from_cells(cells, cell_size)


def walk_mask(walk: LatticeWalk) -> GridMask:
    """Sites visited by a lattice walk, one unit cell per site."""
    return GridMask.from_cells(walk.sites, 1.0)


# -- hull and frontier -------------------------------------------------------

def _exterior(bm: np.ndarray) -> np.ndarray:
    """Cells of the padded bitmap ``bm`` 4-connected to its border."""
    lab, _ = ndimage.label(~bm, structure=_CROSS)
    return lab == lab[0, 0]


def hull(mask: GridMask) -> GridMask:
    """Mask plus every cell not 4-connected to infinity in its complement."""
    if mask.count == 0:
        raise DomainError("hull of an empty mask")
    bm, org = mask.padded(1)
    return GridMask(mask.cell_size, org, ~_exterior(bm))


def frontier(mask: GridMask) -> GridMask:
    """Hull cells with a 4-neighbour in the unbounded complementary component."""
    if mask.count == 0:
        raise DomainError("frontier of an empty mask")
    bm, org = mask.padded(1)
    ext = _exterior(bm)
    near = np.zeros_like(ext)
    near[1:, :] |= ext[:-1, :]
    near[:-1, :] |= ext[1:, :]
    near[:, 1:] |= ext[:, :-1]
    near[:, :-1] |= ext[:, 1:]
    return GridMask(mask.cell_size, org, ~ext & near)


# -- cut and pioneer times ---------------------------------------------------

def _site_ids(sites: np.ndarray):
    s = sites - sites.min(axis=0)
    key = s[:, 0] * (int(s[:, 1].max()) + 1) + s[:, 1]
    return np.unique(key, return_index=True, return_inverse=True, return_counts=True)


def cut_times(walk: LatticeWalk) -> IndexSet:
    """Indices ``0 < k < n`` with ``{S_0..S_{k-1}}``, ``{S_k}`` and ``{S_{k+1}..S_n}``
    pairwise disjoint, in O(n log n) via first/last visit intervals."""
    sites = walk.sites
    n = len(sites) - 1
    if n < 2:
        return IndexSet(np.empty(0, dtype=np.int64), n + 1)
    _, first, ids, counts = _site_ids(sites)
    ids = ids.ravel()
    last = n - _site_ids(sites[::-1])[1]
    # a revisited site covers every k with first < k < last
    rep = last > first
    diff = np.bincount(first[rep] + 1, minlength=n + 2).astype(np.int64)
    diff -= np.bincount(last[rep], minlength=n + 2)
    covered = np.cumsum(diff)[: n + 1]
    k = np.arange(n + 1)
    ok = (covered == 0) & (counts[ids] == 1) & (k > 0) & (k < n)
    return IndexSet(np.flatnonzero(ok), n + 1)


@numba.njit(cache=True)
def _find(parent, a):
    root = a
    while parent[root] != root:
        root = parent[root]
    while parent[a] != root:
        nxt = parent[a]
        parent[a] = root
        a = nxt
    return root


@numba.njit(cache=True)
def _union(parent, a, b):
    ra = _find(parent, a)
    rb = _find(parent, b)
    if ra != rb:
        if ra < rb:
            parent[ra] = rb
        else:
            parent[rb] = ra


@numba.njit(cache=True)
def _pioneer_reverse(cell, is_first, W, H):
    """Remove sites in reverse time order; union-find tracks the exterior."""
    N = W * H
    ext = N  # largest id, so it stays a root under union-by-index
    parent = np.arange(N + 1)
    occ = np.zeros(N, dtype=np.bool_)
    for c in cell:
        occ[c] = True
    for c in range(N):
        if occ[c]:
            continue
        x = c // H
        y = c % H
        if x == 0 or y == 0 or x == W - 1 or y == H - 1:
            _union(parent, c, ext)
        if x + 1 < W and not occ[c + H]:
            _union(parent, c, c + H)
        if y + 1 < H and not occ[c + 1]:
            _union(parent, c, c + 1)
    n = len(cell)
    out = np.zeros(n, dtype=np.bool_)
    nb = np.empty(4, dtype=np.int64)
    for s in range(n - 1, -1, -1):
        c = cell[s]
        nb[0] = c + H
        nb[1] = c - H
        nb[2] = c + 1
        nb[3] = c - 1
        re = _find(parent, ext)
        for q in nb:
            if not occ[q] and _find(parent, q) == re:
                out[s] = True
                break
        if is_first[s]:
            occ[c] = False
            for q in nb:
                if not occ[q]:
                    _union(parent, c, q)
    return out


def _pioneer_naive(sites: np.ndarray) -> np.ndarray:
    s = sites - sites.min(axis=0) + 1
    W, H = s.max(axis=0) + 2
    out = np.zeros(len(s), dtype=bool)
    occ = np.zeros((W, H), dtype=bool)
    for k, (x, y) in enumerate(s):
        occ[x, y] = True
        ext = _exterior(occ)
        out[k] = ext[x + 1, y] or ext[x - 1, y] or ext[x, y + 1] or ext[x, y - 1]
    return out


def pioneer_times(walk: LatticeWalk, method: str = "reverse") -> IndexSet:
    """Indices ``s`` at which ``S_s`` touches the unbounded component of the
    complement of ``{S_0..S_s}``.

    ``method="reverse"`` deletes sites backwards in time so that the exterior
    only grows and a union-find structure answers every query (near-linear
    time); ``method="naive"`` redoes a full flood fill per index.
    """
    sites = walk.sites
    if method == "naive":
        return IndexSet(np.flatnonzero(_pioneer_naive(sites)), len(sites))
    if method != "reverse":
        raise ConfigurationError(f"unknown pioneer method {method!r}")
    s = sites - sites.min(axis=0) + 1
    W, H = (int(v) for v in s.max(axis=0) + 2)
    cell = (s[:, 0] * H + s[:, 1]).astype(np.int64)
    _, first, ids, _ = _site_ids(sites)
    is_first = np.zeros(len(sites), dtype=bool)
    is_first[first] = True
    out = _pioneer_reverse(cell, is_first, W, H)
    return IndexSet(np.flatnonzero(out), len(sites))


# -- disconnection -----------------------------------------------------------

def disconnects(mask: GridMask, r_inner: float, r_outer: float) -> bool:
    """Whether the occupied cells separate the circle ``|z| = r_inner`` from
    ``|z| = r_outer``: no 4-connected chain of free cells meeting the annulus
    joins a cell crossed by the inner circle to one crossed by the outer."""
    if not 0 < r_inner < r_outer:
        raise DomainError("need 0 < r_inner < r_outer")
    c = mask.cell_size
    if 2 * r_inner / c < 8:
        raise ConfigurationError("inner circle spans fewer than 8 cells", "cell_size")
    lo = math.floor(-r_outer / c) - 1
    hi = math.floor(r_outer / c) + 1
    idx = np.arange(lo, hi + 1)
    x0 = idx * c
    x1 = x0 + c
    # distance range from the origin over each cell
    near1 = np.where(x1 < 0, x1, np.where(x0 > 0, x0, 0.0))
    far1 = np.maximum(np.abs(x0), np.abs(x1))
    dmin = np.hypot(near1[:, None], near1[None, :])
    dmax = np.hypot(far1[:, None], far1[None, :])
    inner = (dmin <= r_inner) & (dmax >= r_inner)
    outer = (dmin <= r_outer) & (dmax >= r_outer)
    annulus = (dmax >= r_inner) & (dmin <= r_outer)
    occ = np.zeros_like(annulus)
    cells = mask.cells()
    if len(cells):
        a = cells[:, 0] - lo
        b = cells[:, 1] - lo
        keep = (a >= 0) & (a < len(idx)) & (b >= 0) & (b < len(idx))
        occ[a[keep], b[keep]] = True
    free = annulus & ~occ
    lab, _ = ndimage.label(free, structure=_CROSS)
    li = np.unique(lab[inner & free])
    lo_ = np.unique(lab[outer & free])
    return len(np.intersect1d(li[li > 0], lo_[lo_ > 0])) == 0


# -- box counting ------------------------------------------------------------

def box_dimension(points, scales) -> PowerLawFit:
    """Box-counting dimension: slope of ``log N(eps)`` against ``log(1/eps)``.

    Up to two of the largest scales are discarded when they hold fewer than
    16 boxes, since saturated counts bias the slope.
    """
    pts = _as_points(points)
    if len(pts) < 100:
        raise ConfigurationError("box counting needs at least 100 points")
    eps = np.array(sorted(float(e) for e in scales))
    if len(eps) < 3 or np.any(eps <= 0) or len(np.unique(eps)) != len(eps):
        raise ConfigurationError("need at least 3 distinct positive scales")
    if eps[-1] / eps[0] < 4.0:
        raise ConfigurationError("scales must span at least two octaves")
    xy = np.stack([pts.real, pts.imag], axis=1)
    counts = []
    for e in eps:
        boxes = np.floor(xy / e).astype(np.int64)
        counts.append(len(np.unique(boxes, axis=0)))
    counts = np.array(counts)
    keep = len(eps)
    for _ in range(2):
        if keep > 3 and counts[keep - 1] < 16:
            keep -= 1
    return fit_power_law([(e, n, len(pts)) for e, n in zip(eps[:keep], counts[:keep])])
