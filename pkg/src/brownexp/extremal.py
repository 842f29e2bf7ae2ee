"""Extremal length: ``L`` is pi times the extremal distance between two arcs.

Numerically ``L = pi / E`` where ``E`` is the Dirichlet energy of the
potential that is 0 on one side, 1 on the other and has zero normal
derivative elsewhere.  The energy is computed with the 5-point stencil on
square cells; side cells sit just outside the domain so the Dirichlet data
lives on the shared cell face (conductance 2 across that half cell).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy import ndimage
from scipy.sparse.linalg import spsolve
from scipy.special import ellipk, ellipkm1

from .errors import ConfigurationError, DomainError, NumericError
from .geometry import GridMask

__all__ = [
    "INFINITE",
    "is_infinite",
    "annulus_L",
    "rectangle_L",
    "Quadrilateral",
    "rectangle_quadrilateral",
    "annulus_quadrilateral",
    "modulus_numeric",
    "L_of_x",
    "x_of_L",
]


class _Infinite:
    """Tagged 'no connecting path' value; deliberately not a number."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "INFINITE"

    def __reduce__(self):
        return (_Infinite, ())


INFINITE = _Infinite()


def is_infinite(value) -> bool:
    return value is INFINITE


def annulus_L(r: float) -> float:
    """``L`` between the circles of the annulus ``r < |z| < 1``."""
    r = float(r)
    if not 0.0 < r < 1.0:
        raise DomainError(f"r={r} outside (0, 1)")
    return 0.5 * math.log(1.0 / r)


def rectangle_L(width: float, height: float) -> float:
    """``L`` between the vertical edges of a ``width x height`` rectangle."""
    if not (width > 0 and height > 0):
        raise DomainError("rectangle sides must be positive")
    return math.pi * float(width) / float(height)


@dataclass(frozen=True)
class Quadrilateral:
    """Discrete quadrilateral on the cell grid.

    ``domain`` holds the cells of the region, ``side_a`` and ``side_b`` are
    cells outside it that touch it across a face.  With ``period`` set, the
    second cell index is taken modulo ``period`` (a cylinder).  ``aspect`` is
    the cell height over the cell width; ``domain.cell_size`` is the width.
    """

    domain: GridMask
    side_a: GridMask
    side_b: GridMask
    period: int | None = None
    aspect: float = 1.0

    def __post_init__(self):
        for name in ("side_a", "side_b"):
            m = getattr(self, name)
            if m.count == 0:
                raise ConfigurationError(f"{name} is empty", name)
            if m.cell_size != self.domain.cell_size:
                raise ConfigurationError("cell sizes differ", name)
        if self.domain.count == 0:
            raise ConfigurationError("empty domain", "domain")
        if not self.aspect > 0:
            raise ConfigurationError("aspect must be positive", "aspect")
        a = self._keys(self.side_a)
        b = self._keys(self.side_b)
        d = self._keys(self.domain)
        if np.intersect1d(a, b).size:
            raise ConfigurationError("sides overlap", "side_b")
        if np.intersect1d(a, d).size or np.intersect1d(b, d).size:
            raise ConfigurationError("side cells must lie outside the domain", "side_a")
        for name, m in (("side_a", self.side_a), ("side_b", self.side_b)):
            nb = np.concatenate([self._keys(m, shift) for shift in _SHIFTS])
            touching = np.isin(nb.reshape(4, -1), d).any(axis=0)
            if not touching.all():
                raise ConfigurationError(f"{name} has cells not adjacent to the domain", name)

    def _wrap(self, cells):
        if self.period:
            cells = cells.copy()
            cells[:, 1] %= self.period
        return cells

    def _keys(self, mask, shift=(0, 0)):
        c = self._wrap(mask.cells() + np.asarray(shift))
        return c[:, 0] * (1 << 31) + c[:, 1]

    def to_files(self, prefix) -> None:
        """``prefix.pbm`` for the domain, ``prefix.json`` for the sides."""
        self.domain.to_pbm(f"{prefix}.pbm")
        with open(f"{prefix}.json", "w") as fh:
            json.dump({"cell_size": self.domain.cell_size, "period": self.period,
                       "aspect": self.aspect,
                       "side_a": self.side_a.cells().tolist(),
                       "side_b": self.side_b.cells().tolist()}, fh, sort_keys=True)

    @classmethod
    def from_files(cls, prefix) -> "Quadrilateral":
        dom = GridMask.from_pbm(f"{prefix}.pbm")
        with open(f"{prefix}.json") as fh:
            d = json.load(fh)
        c = d["cell_size"]
        return cls(dom, GridMask.from_cells(d["side_a"], c),
                   GridMask.from_cells(d["side_b"], c), d["period"],
                   d.get("aspect", 1.0))


_SHIFTS = ((1, 0), (-1, 0), (0, 1), (0, -1))


def rectangle_quadrilateral(nx: int, ny: int, aspect: float = 1.0,
                            period: int | None = None) -> Quadrilateral:
    """``nx x ny`` cells, sides are the left and right edges."""
    dom = GridMask(1.0, (0, 0), np.ones((nx, ny), dtype=bool))
    ys = np.arange(ny)
    a = GridMask.from_cells(np.stack([np.full(ny, -1), ys], axis=1))
    b = GridMask.from_cells(np.stack([np.full(ny, nx), ys], axis=1))
    return Quadrilateral(dom, a, b, period, aspect)


def annulus_quadrilateral(r: float, n: int, coords: str = "cartesian") -> Quadrilateral:
    """Annulus ``r < |z| < 1`` with ``n`` cells across the unit radius.

    ``coords="logpolar"`` uses the conformal image ``log z`` on a cylinder,
    where the annulus is an exact rectangle; ``"cartesian"`` staircases both
    circles on a square grid.
    """
    if not 0 < r < 1:
        raise DomainError("r must lie in (0, 1)")
    if coords == "logpolar":
        m = max(8, int(n))
        ns = max(1, round(math.log(1 / r) * m / (2 * math.pi)))
        aspect = (2 * math.pi / m) / (math.log(1 / r) / ns)
        return rectangle_quadrilateral(ns, m, aspect, period=m)
    if coords != "cartesian":
        raise ConfigurationError(f"unknown coords {coords!r}", "coords")
    h = 1.0 / n
    idx = np.arange(-n - 2, n + 2)
    cx = (idx + 0.5) * h
    rr = np.hypot(cx[:, None], cx[None, :])
    dom = (rr > r) & (rr < 1)
    inside = rr <= r
    outside = rr >= 1
    nb = np.zeros_like(dom)
    nb[1:, :] |= dom[:-1, :]
    nb[:-1, :] |= dom[1:, :]
    nb[:, 1:] |= dom[:, :-1]
    nb[:, :-1] |= dom[:, 1:]
    o = (int(idx[0]), int(idx[0]))
    return Quadrilateral(GridMask(h, o, dom), GridMask(h, o, inside & nb),
                         GridMask(h, o, outside & nb))


def modulus_numeric(q: Quadrilateral, rtol: float = 1e-8):
    """``pi / E`` for the discrete potential of ``q``; ``INFINITE`` when no
    chain of domain cells joins the two sides."""
    allc = np.concatenate([q.domain.cells(), q.side_a.cells(), q.side_b.cells()])
    allc = q._wrap(allc)
    lo = allc.min(axis=0)
    shape = tuple(allc.max(axis=0) - lo + 1)
    if q.period:
        lo[1] = 0
        shape = (shape[0], q.period)

    def grid(m):
        g = np.zeros(shape, dtype=bool)
        c = q._wrap(m.cells()) - lo
        g[c[:, 0], c[:, 1]] = True
        return g

    dom, ga, gb = grid(q.domain), grid(q.side_a), grid(q.side_b)
    # components of the domain; only those touching both sides carry energy
    structure = ndimage.generate_binary_structure(2, 1)
    lab, nlab = ndimage.label(dom, structure=structure)
    if q.period:
        lab = _merge_periodic(lab, nlab)
    near_a = _dilate(ga, q.period) & dom
    near_b = _dilate(gb, q.period) & dom
    both = np.intersect1d(np.unique(lab[near_a]), np.unique(lab[near_b]))
    both = both[both > 0]
    if both.size == 0:
        return INFINITE
    act = np.isin(lab, both)
    nact = int(act.sum())
    ids = -np.ones(shape, dtype=np.int64)
    ids[act] = np.arange(nact)

    rows, cols, vals = [], [], []
    diag = np.zeros(nact)
    rhs = np.zeros(nact)
    for dx, dy in _SHIFTS:
        # conductance of a face: its length over the centre-to-centre distance
        c = q.aspect if dx else 1.0 / q.aspect
        if q.period:
            src = act
            tx = np.roll(np.roll(ids, -dx, axis=0), -dy, axis=1)
            t_act = np.roll(np.roll(act, -dx, axis=0), -dy, axis=1)
            t_b = np.roll(np.roll(gb, -dx, axis=0), -dy, axis=1)
            t_a = np.roll(np.roll(ga, -dx, axis=0), -dy, axis=1)
            if dx:  # no wrap along the first axis
                edge = np.zeros(shape, dtype=bool)
                edge[-1 if dx > 0 else 0, :] = True
                src = src & ~edge
        else:
            src = act
            tx, t_act, t_a, t_b = (_shift(arr, dx, dy, fill) for arr, fill in
                                   ((ids, -1), (act, False), (ga, False), (gb, False)))
        m = src & t_act
        rows.append(ids[m])
        cols.append(tx[m])
        vals.append(np.full(int(m.sum()), -c))
        np.add.at(diag, ids[m], c)
        ma = src & t_a
        np.add.at(diag, ids[ma], 2.0 * c)
        mb = src & t_b
        np.add.at(diag, ids[mb], 2.0 * c)
        np.add.at(rhs, ids[mb], 2.0 * c)
    rows.append(np.arange(nact))
    cols.append(np.arange(nact))
    vals.append(diag)
    A = sp.csr_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                      shape=(nact, nact))
    u = spsolve(A.tocsc(), rhs)
    res = np.linalg.norm(A @ u - rhs) / max(np.linalg.norm(rhs), 1e-300)
    if not np.all(np.isfinite(u)) or res > rtol:
        raise NumericError(f"Laplace solve failed, relative residual {res:.3g}")
    # energy of the discrete potential equals the current into side b
    energy = float(u @ (A @ u) - 2 * (rhs @ u) + _side_b_constant(rhs))
    if not energy > 0:
        raise NumericError("nonpositive Dirichlet energy")
    return math.pi / energy


def _side_b_constant(rhs):
    # a domain-side_b face of conductance c contributes 2c (1 - u)^2; the
    # quadratic form holds 2c u^2, the rhs term -4c u, and this the 2c
    return float(rhs.sum())


def _shift(arr, dx, dy, fill):
    """``out[i, j] = arr[i + dx, j + dy]`` with ``fill`` outside."""
    out = np.full_like(arr, fill)
    nx, ny = arr.shape
    xs = slice(max(0, -dx), nx - max(0, dx))
    ys = slice(max(0, -dy), ny - max(0, dy))
    xt = slice(max(0, dx), nx - max(0, -dx) if dx < 0 else nx)
    yt = slice(max(0, dy), ny - max(0, -dy) if dy < 0 else ny)
    out[xs, ys] = arr[xt, yt]
    return out


def _dilate(g, period):
    out = g.copy()
    out[1:, :] |= g[:-1, :]
    out[:-1, :] |= g[1:, :]
    if period:
        out |= np.roll(g, 1, axis=1) | np.roll(g, -1, axis=1)
    else:
        out[:, 1:] |= g[:, :-1]
        out[:, :-1] |= g[:, 1:]
    return out


def _merge_periodic(lab, nlab):
    parent = np.arange(nlab + 1)

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    first, last = lab[:, 0], lab[:, -1]
    for a, b in zip(first, last):
        if a and b:
            ra, rb = find(a), find(b)
            if ra != rb:
                parent[ra] = rb
    roots = np.array([find(i) for i in range(nlab + 1)])
    return roots[lab]


# -- half-plane quadrilateral -------------------------------------------------

def L_of_x(x: float, method: str = "elliptic", n: int = 64, span: float = 6.0,
           richardson: bool = True) -> float:
    """``L`` between ``(-oo, 0]`` and ``[x, 1]`` in the upper half-plane.

    This is the rectangle length ``L`` for which a conformal map of
    ``[0, L] x [0, pi]`` onto the half-plane sends ``0, L, L + i pi, i pi``
    to ``1, oo, 0, x``.  It increases from 0 to infinity as ``x`` runs over
    (0, 1); ``L(1/2) = pi``.

    ``method="elliptic"`` evaluates ``pi K(x) / K(1 - x)`` (parameter
    convention ``m = k^2``).  ``method="numeric"`` solves the Laplace problem
    in ``w = log z``, where the half-plane becomes the strip
    ``0 < Im w < pi``; ``n`` cells span the strip height, cell widths are
    chosen so the image ``[log x, 0]`` of the segment is a whole number of
    cells, and the strip is cut ``span * pi`` beyond it at both ends.  The
    discretization error is first order (the potential has square-root
    singularities at the segment ends), so by default the results at ``n``
    and ``n // 2`` are combined as ``2 L_n - L_{n/2}``.
    """
    x = float(x)
    if not 0.0 < x < 1.0:
        raise DomainError(f"x={x} outside (0, 1)")
    if method == "elliptic":
        return math.pi * float(ellipk(x)) / float(ellipkm1(x))
    if method != "numeric":
        raise ConfigurationError(f"unknown method {method!r}", "method")
    if richardson:
        return 2.0 * _L_strip(x, n, span) - _L_strip(x, n // 2, span)
    return _L_strip(x, n, span)


def _L_strip(x, n, span):
    hy = math.pi / n
    seg = -math.log(x)
    k = max(4, round(seg / hy))
    if hy * k / seg > 16:
        raise ConfigurationError("x too close to 1 for the grid resolution", "n")
    if seg / hy > 50 * n:
        raise ConfigurationError("x too close to 0 for the grid resolution", "n")
    hx = seg / k
    i_lo = -k - math.ceil(span * math.pi / hx)
    i_hi = math.ceil(span * math.pi / hx)
    dom = GridMask(hx, (i_lo, 0), np.ones((i_hi - i_lo, n), dtype=bool))
    ia = np.arange(-k, 0)
    side_a = GridMask.from_cells(np.stack([ia, np.full(k, -1)], axis=1), hx)
    ib = np.arange(i_lo, i_hi)
    side_b = GridMask.from_cells(np.stack([ib, np.full(len(ib), n)], axis=1), hx)
    return modulus_numeric(Quadrilateral(dom, side_a, side_b, aspect=hy / hx))


def x_of_L(L: float) -> float:
    """Inverse of the elliptic ``L_of_x``.

    Bisection on ``log x`` for ``L <= pi``; larger ``L`` goes through the
    duality ``L(x) L(1 - x) = pi^2``.
    """
    L = float(L)
    if not L > 0:
        raise DomainError("L must be positive")
    if L > math.pi:
        return 1.0 - x_of_L(math.pi**2 / L)
    lo, hi = -700.0, math.log(0.5)
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if L_of_x(math.exp(mid)) > L:
            hi = mid
        else:
            lo = mid
    return math.exp(0.5 * (lo + hi))
