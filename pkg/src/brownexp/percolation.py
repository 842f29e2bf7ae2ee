"""Critical site percolation on the triangular lattice.

Sites use axial coordinates ``(q, r)`` with Cartesian position
``mesh * (q + r / 2, r * sqrt(3) / 2)``; the six neighbours in
counterclockwise order are the offsets in ``DIRECTIONS``.  A site is white
with probability 1/2, decided by a hash of ``(seed, site)`` so that a site
has the same colour whether it is coloured up front or on first probe.

Two region shapes are supported, both with ``width`` sites per row and
``height`` rows:

* ``rhombus``: ``0 <= q < width``, ``0 <= r < height``.  A rhombus with equal
  sides is self-dual, so its left-right crossing probability is exactly 1/2.
* ``rectangle``: rows shifted alternately (brick wall), column
  ``c = q + r // 2`` with ``0 <= c < width``.  Its aspect ratio is
  ``width / (height * sqrt(3) / 2)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numba
import numpy as np

from .errors import ConfigurationError, DomainError, NonTermination
from .extremal import x_of_L
from .formulas import cardy_crossing
from .paths import svg_polyline
from .rng import as_seed, site_uniform

__all__ = [
    "DIRECTIONS",
    "TriRegion",
    "ExplorationPath",
    "sample_region",
    "explore",
    "crossings",
    "crossing_probability",
    "cardy_rectangle",
    "region_dimensions",
]

DIRECTIONS = np.array([(1, 0), (0, 1), (-1, 1), (-1, 0), (0, -1), (1, -1)], dtype=np.int64)
WHITE, BLACK, UNSET = 1, 0, -1
_SHAPES = ("rhombus", "rectangle")
_SQ3 = math.sqrt(3.0)


@numba.njit(cache=True)
def _site_color(key, W, H, c, r):
    return WHITE if site_uniform(key, c * H + r) < 0.5 else BLACK


@numba.njit(cache=True)
def _fill_colors(key, W, H):
    out = np.empty((W, H), dtype=np.int8)
    for c in range(W):
        for r in range(H):
            out[c, r] = _site_color(key, W, H, c, r)
    return out


@dataclass
class TriRegion:
    """Coloured region.  ``colors[c, r]`` is ``WHITE``, ``BLACK`` or ``UNSET``.

    The boundary condition used by :func:`explore` lives on the ring of
    sites just outside a rhombus: the left column and top row are black,
    the bottom row and right column white.  The interface therefore runs
    from the bottom-left corner to the top-right corner.
    """

    shape: str
    width: int
    height: int
    mesh: float
    key: int
    colors: np.ndarray

    @property
    def brick(self) -> bool:
        return self.shape == "rectangle"

    def position(self, c, r):
        """Cartesian position of the site at column ``c``, row ``r``."""
        c = np.asarray(c, dtype=float)
        r = np.asarray(r, dtype=float)
        q = c - (np.floor_divide(r, 2) if self.brick else 0)
        return self.mesh * ((q + r / 2) + 1j * (r * _SQ3 / 2))

    def white_fraction(self) -> float:
        return float((self.colors == WHITE).mean())

    def to_ppm(self, path, scale: int = 4) -> None:
        """Binary-free (P3) PPM of the colouring; row 0 is at the bottom."""
        img = self.colors.T[::-1]
        h, w = img.shape
        lut = {WHITE: "255 255 255", BLACK: "20 20 20", UNSET: "160 160 160"}
        lines = ["P3", f"{w * scale} {h * scale}", "255"]
        for row in img:
            line = " ".join(lut[int(v)] for v in row for _ in range(scale))
            lines += [line] * scale
        with open(path, "w") as fh:
            fh.write("\n".join(lines) + "\n")


def sample_region(shape: str, width: int, height: int, seed, mesh: float = 1.0,
                  fill: str = "random", precolor: bool = True) -> TriRegion:
    """Colour a region; ``fill`` may force ``"white"`` or ``"black"`` sites.

    With ``precolor=False`` the sites stay ``UNSET`` and :func:`explore`
    colours them on first probe from the same hash.
    """
    if shape not in _SHAPES:
        raise ConfigurationError(f"unknown shape {shape!r}", "shape")
    if width < 1 or height < 1:
        raise ConfigurationError("region needs at least one site", "width")
    if not mesh > 0:
        raise DomainError("mesh must be positive")
    key = as_seed(seed).key64()
    if fill == "random":
        colors = _fill_colors(np.uint64(key), width, height) if precolor else \
            np.full((width, height), UNSET, dtype=np.int8)
    elif fill in ("white", "black"):
        colors = np.full((width, height), WHITE if fill == "white" else BLACK, dtype=np.int8)
    else:
        raise ConfigurationError(f"unknown fill {fill!r}", "fill")
    return TriRegion(shape, int(width), int(height), float(mesh), key, colors)


# -- crossings ----------------------------------------------------------------

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
def _crossings(colors, brick):
    """(white joins left and right columns, black joins bottom and top rows)."""
    W, H = colors.shape
    N = W * H
    pw = np.arange(N + 2)
    pb = np.arange(N + 2)
    for c in range(W):
        for r in range(H):
            i = c * H + r
            col = colors[c, r]
            par = pw if col == WHITE else pb
            if col == WHITE:
                if c == 0:
                    par[_find(par, i)] = _find(par, N)
                if c == W - 1:
                    par[_find(par, i)] = _find(par, N + 1)
            else:
                if r == 0:
                    par[_find(par, i)] = _find(par, N)
                if r == H - 1:
                    par[_find(par, i)] = _find(par, N + 1)
            q = c - (r >> 1) if brick else c
            # three forward neighbours: (q+1, r), (q, r+1), (q-1, r+1)
            for k in range(3):
                if k == 0:
                    qq, rr = q + 1, r
                elif k == 1:
                    qq, rr = q, r + 1
                else:
                    qq, rr = q - 1, r + 1
                if rr >= H:
                    continue
                cc = qq + (rr >> 1) if brick else qq
                if cc < 0 or cc >= W:
                    continue
                if colors[cc, rr] == col:
                    a = _find(par, i)
                    b = _find(par, cc * H + rr)
                    if a != b:
                        par[a] = b
    return _find(pw, N) == _find(pw, N + 1), _find(pb, N) == _find(pb, N + 1)


def crossings(region: TriRegion):
    """``(white left-right, black bottom-top)``; exactly one holds."""
    if np.any(region.colors == UNSET):
        raise ConfigurationError("region has uncoloured sites", "colors")
    a, b = _crossings(region.colors, region.brick)
    return bool(a), bool(b)


def region_dimensions(aspect: float, mesh_sites: int):
    """``(shape, width, height)`` with at least ``mesh_sites`` on the short side."""
    if not aspect > 0:
        raise DomainError("aspect must be positive")
    if aspect == 1.0:
        return "rhombus", mesh_sites, mesh_sites
    if aspect > 1:
        H = mesh_sites
        W = round(aspect * H * _SQ3 / 2)
    else:
        W = mesh_sites
        H = round(W / (aspect * _SQ3 / 2))
    return "rectangle", int(W), int(H)


@numba.njit(cache=True)
def _crossing_trials(keys, W, H, brick):
    n = len(keys)
    out = np.empty(n, dtype=np.bool_)
    for t in range(n):
        colors = _fill_colors(keys[t], W, H)
        a, b = _crossings(colors, brick)
        out[t] = a
    return out


def crossing_samples(aspect: float, mesh_sites: int, trials: int, seed, start: int = 0):
    """Per-trial white left-right crossing indicators; trial ``i`` uses ``seed.child(i)``."""
    shape, W, H = region_dimensions(aspect, mesh_sites)
    s = as_seed(seed)
    keys = np.array([s.child(start + i).key64() for i in range(trials)], dtype=np.uint64)
    return _crossing_trials(keys, W, H, shape == "rectangle")


def crossing_probability(aspect: float, mesh_sites: int, trials: int, seed):
    """Fraction of white left-right crossings of a region of conformal aspect
    ``aspect`` (width over height).  Returns ``(estimate, stderr)``."""
    if mesh_sites < 32:
        raise ConfigurationError("mesh_sites must be >= 32", "mesh_sites")
    if trials < 1000:
        raise ConfigurationError("trials must be >= 1000", "trials")
    hits = crossing_samples(aspect, mesh_sites, trials, seed)
    p = float(hits.mean())
    return p, math.sqrt(max(p * (1 - p), 0.0) / trials)


def cardy_rectangle(aspect: float) -> float:
    """Continuum probability of crossing a rectangle between its vertical
    sides, ``1 - F(x)`` with ``x`` the cross-ratio for ``L = pi * aspect``."""
    return 1.0 - cardy_crossing(x_of_L(math.pi * aspect))


# -- exploration --------------------------------------------------------------

@numba.njit(cache=True)
def _color_at(colors, key, W, H, q, r, lazy):
    """Colour of rhombus site (q, r) including the boundary ring, or -2 if off-grid."""
    if q == -1 and 0 <= r <= H:
        return BLACK
    if r == H and 0 <= q <= W - 1:
        return BLACK
    if r == -1 and 0 <= q <= W:
        return WHITE
    if q == W and 0 <= r <= H - 1:
        return WHITE
    if 0 <= q < W and 0 <= r < H:
        v = colors[q, r]
        if v == UNSET:
            if not lazy:
                return -2
            v = _site_color(key, W, H, q, r)
            colors[q, r] = v
        return v
    return -2


@numba.njit(cache=True)
def _on_ring(q, r, W, H):
    return q == -1 or q == W or r == -1 or r == H


@numba.njit(cache=True)
def _explore(colors, key, W, H, lazy, max_steps):
    dq = np.array([1, 0, -1, -1, 0, 1])
    dr = np.array([0, 1, 1, 0, -1, -1])
    Lq, Lr = -1, 0   # black
    Rq, Rr = 0, -1   # white
    n = max_steps
    tri = np.empty((n, 6), dtype=np.int64)
    k = 0
    while True:
        if k == n:
            return tri[:k], -1
        # direction from L to R, then rotate 60 degrees counterclockwise
        d = -1
        for j in range(6):
            if Lq + dq[j] == Rq and Lr + dr[j] == Rr:
                d = j
        if d < 0:
            return tri[:k], -3
        j = (d + 1) % 6
        Fq = Lq + dq[j]
        Fr = Lr + dr[j]
        col = _color_at(colors, key, W, H, Fq, Fr, lazy)
        if col == -2:
            return tri[:k], -2
        tri[k, 0] = Lq
        tri[k, 1] = Lr
        tri[k, 2] = Rq
        tri[k, 3] = Rr
        tri[k, 4] = Fq
        tri[k, 5] = Fr
        k += 1
        if col == WHITE:
            Rq, Rr = Fq, Fr
        else:
            Lq, Lr = Fq, Fr
        if _on_ring(Lq, Lr, W, H) and _on_ring(Rq, Rr, W, H):
            return tri[:k], 0


@dataclass(frozen=True)
class ExplorationPath:
    """Interface between the black and white clusters.

    ``vertices`` are hexagon corners (triangle centroids) as complex
    Cartesian points; ``left`` and ``right`` list the black and white sites
    bordering each edge of the path, in axial coordinates.
    """

    vertices: np.ndarray
    left: np.ndarray
    right: np.ndarray
    mesh: float = 1.0

    def __len__(self):
        return len(self.vertices)

    def is_simple(self) -> bool:
        # centroid coordinates are multiples of 1/6 and sqrt(3)/6 mesh units
        v = self.vertices / self.mesh
        x = np.round(v.real * 6.0).astype(np.int64)
        y = np.round(v.imag * 6.0 / _SQ3).astype(np.int64)
        return len(np.unique(np.stack([x, y], axis=1), axis=0)) == len(x)

    def to_svg(self, path, **kw) -> None:
        with open(path, "w") as fh:
            fh.write(svg_polyline([self.vertices], **kw))


def explore(region: TriRegion, max_steps: int | None = None) -> ExplorationPath:
    """Walk the interface from the bottom-left corner with black on the left.

    The region must be a rhombus; sites left ``UNSET`` are coloured when the
    walker first probes them.
    """
    if region.shape != "rhombus":
        raise ConfigurationError("exploration needs a rhombus region", "shape")
    W, H = region.width, region.height
    lazy = bool(np.any(region.colors == UNSET))
    if max_steps is None:
        max_steps = 2 * (W + 2) * (H + 2) + 16
    tri, status = _explore(region.colors, np.uint64(region.key), W, H, lazy, int(max_steps))
    if status == -1:
        raise NonTermination("exploration did not reach the far corner", max_steps)
    if status < 0:
        raise ConfigurationError("malformed boundary condition or colouring", "colors")
    q = tri[:, [0, 2, 4]].astype(float)
    r = tri[:, [1, 3, 5]].astype(float)
    cen = region.mesh * ((q + r / 2).mean(axis=1) + 1j * (r * _SQ3 / 2).mean(axis=1))
    return ExplorationPath(cen, tri[:, 0:2].copy(), tri[:, 2:4].copy(), region.mesh)
