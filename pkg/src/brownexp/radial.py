"""Radial Loewner evolution in the unit disk.

The flow is taken in its expanding form ``dg/dt = g (zeta + g) / (zeta - g)``
so that ``g_t'(0) = e^t`` and ``g_t`` maps the disk minus the hull onto the
disk.  For constant ``zeta = 1`` the function ``k(z) = z / (1 + z)^2``
linearizes the flow, ``k(g_t(z)) = e^t k(z)``, which gives exact slit maps
for a piecewise constant drive; a general ``zeta`` is handled by rotation.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numba
import numpy as np
from scipy import ndimage

from .errors import ConfigurationError, DomainError, NonTermination
from .extremal import INFINITE, Quadrilateral, modulus_numeric
from .fitting import PowerLawFit, fit_power_law
from .geometry import GridMask, _supercover
from .paths import Path2D
from .rng import as_seed

__all__ = [
    "RadialChain",
    "RadialHull",
    "radial_advance",
    "radial_evaluate",
    "radial_inverse",
    "radial_hull_to_radius",
    "radial_L",
    "radial_xi_estimate",
]


@dataclass(frozen=True)
class RadialChain:
    """Steps ``(delta_i, theta_i)`` with drive ``zeta_i = exp(i theta_i)``."""

    deltas: np.ndarray
    thetas: np.ndarray

    def __post_init__(self):
        d = np.asarray(self.deltas, dtype=np.float64).ravel()
        th = np.asarray(self.thetas, dtype=np.float64).ravel()
        if d.shape != th.shape:
            raise ValueError("deltas and thetas differ in length")
        if np.any(~(d > 0)):
            raise ValueError("step durations must be positive")
        object.__setattr__(self, "deltas", d)
        object.__setattr__(self, "thetas", th)

    @classmethod
    def empty(cls) -> "RadialChain":
        return cls(np.empty(0), np.empty(0))

    def __len__(self):
        return len(self.deltas)

    @property
    def total_time(self) -> float:
        return float(math.fsum(self.deltas))


def radial_advance(chain: RadialChain, theta: float, delta: float) -> RadialChain:
    if not delta > 0:
        raise DomainError("delta must be positive")
    return RadialChain(np.append(chain.deltas, float(delta)),
                       np.append(chain.thetas, float(theta)))


@numba.njit(cache=True)
def _k(z):
    return z / ((1.0 + z) * (1.0 + z))


@numba.njit(cache=True)
def _dk(z):
    return (1.0 - z) / ((1.0 + z) ** 3)


@numba.njit(cache=True)
def _k_inv(c):
    """Root of ``k(g) = c`` in the closed unit disk."""
    s = cmath.sqrt(1.0 - 4.0 * c)
    a1 = 1.0 - 2.0 * c + s
    a2 = 1.0 - 2.0 * c - s
    big = a1 if abs(a1) >= abs(a2) else a2
    return 2.0 * c / big


@numba.njit(cache=True)
def _r_fwd(z, theta, d):
    zeta = cmath.exp(1j * theta)
    u = z / zeta
    G = _k_inv(math.exp(d) * _k(u))
    return zeta * G, math.exp(d) * _dk(u) / _dk(G)


@numba.njit(cache=True)
def _r_inv(w, theta, d):
    zeta = cmath.exp(1j * theta)
    return zeta * _k_inv(math.exp(-d) * _k(w / zeta))


@numba.njit(cache=True)
def _r_evaluate(zs, deltas, thetas):
    g = np.empty(len(zs), dtype=np.complex128)
    dg = np.empty(len(zs), dtype=np.complex128)
    for i in range(len(zs)):
        z = zs[i]
        d = 1.0 + 0.0j
        for k in range(len(deltas)):
            z, f = _r_fwd(z, thetas[k], deltas[k])
            d *= f
        g[i] = z
        dg[i] = d
    return g, dg


@numba.njit(cache=True)
def _r_inverse(ws, deltas, thetas):
    out = np.empty(len(ws), dtype=np.complex128)
    for i in range(len(ws)):
        z = ws[i]
        for k in range(len(deltas) - 1, -1, -1):
            z = _r_inv(z, thetas[k], deltas[k])
        out[i] = z
    return out


def radial_evaluate(chain: RadialChain, z):
    """``(g(z), g'(z))`` through the radial chain."""
    scalar = np.ndim(z) == 0
    g, dg = _r_evaluate(np.atleast_1d(np.asarray(z, dtype=np.complex128)),
                        chain.deltas, chain.thetas)
    return (complex(g[0]), complex(dg[0])) if scalar else (g, dg)


def radial_inverse(chain: RadialChain, w):
    scalar = np.ndim(w) == 0
    out = _r_inverse(np.atleast_1d(np.asarray(w, dtype=np.complex128)),
                     chain.deltas, chain.thetas)
    return complex(out[0]) if scalar else out


@numba.njit(cache=True)
def _radial_run(rng, kappa, dt, r, max_steps):
    """Drive ``theta = sqrt(kappa) B``; trace until ``|gamma| <= r``."""
    cap = 1024
    th = np.empty(cap)
    gam = np.empty(cap + 1, dtype=np.complex128)
    gam[0] = 1.0 + 0.0j
    theta = 0.0
    sd = math.sqrt(kappa * dt)
    for k in range(max_steps):
        theta += sd * rng.standard_normal()
        if k == cap:
            cap *= 2
            t2 = np.empty(cap)
            t2[:k] = th[:k]
            th = t2
            g2 = np.empty(cap + 1, dtype=np.complex128)
            g2[:k + 1] = gam[:k + 1]
            gam = g2
        th[k] = theta
        z = cmath.exp(1j * theta)
        for m in range(k, -1, -1):
            z = _r_inv(z, th[m], dt)
        gam[k + 1] = z
        if abs(z) <= r:
            return th[:k + 1], gam[:k + 2], True
    return th[:max_steps], gam[:max_steps + 1], False


@dataclass(frozen=True)
class RadialHull:
    """Hull of a radial trace on a log-polar grid of the annulus ``r < |z| < 1``.

    Cell ``(i, j)`` covers ``log|z|`` in ``[log r + i hs, log r + (i + 1) hs)``
    and angle in ``[j ht, (j + 1) ht)``, with ``ht = 2 pi / sectors``.
    """

    mask: GridMask
    trace: Path2D
    r: float
    rings: int
    sectors: int

    @property
    def aspect(self) -> float:
        return (2 * math.pi / self.sectors) / (math.log(1 / self.r) / self.rings)


def _logpolar_hull(trace: np.ndarray, r: float, sectors: int):
    ht = 2 * math.pi / sectors
    rings = max(1, round(math.log(1 / r) / ht))
    hs = math.log(1 / r) / rings
    s = np.log(np.abs(trace))
    ang = np.unwrap(np.angle(trace))
    # clip the final segment at the inner circle
    if s[-1] < math.log(r):
        a = (math.log(r) - s[-2]) / (s[-1] - s[-2])
        s = np.append(s[:-1], math.log(r))
        ang = np.append(ang[:-1], ang[-2] + a * (ang[-1] - ang[-2]))
    s = np.minimum(s, -1e-12)
    cells = _supercover((s - math.log(r)) / hs, ang / ht)
    cells[:, 0] = np.clip(cells[:, 0], 0, rings - 1)
    cells[:, 1] %= sectors
    occ = np.zeros((rings, sectors), dtype=bool)
    occ[cells[:, 0], cells[:, 1]] = True
    # free cells joined to the inner circle (periodic in angle) are outside the hull
    free = ~occ
    lab, n = ndimage.label(free, structure=ndimage.generate_binary_structure(2, 1))
    parent = np.arange(n + 1)

    def find(a):
        while parent[a] != a:
            a = parent[a]
        return a

    for a, b in zip(lab[:, 0], lab[:, -1]):
        if a and b and find(a) != find(b):
            parent[find(a)] = find(b)
    roots = np.array([find(i) for i in range(n + 1)])
    lab = roots[lab]
    inner = np.unique(lab[0][lab[0] > 0])
    hull = ~np.isin(lab, inner) | occ
    return hull, rings


def radial_hull_to_radius(kappa: float, r: float, dt: float, seed, *,
                          sectors: int | None = None, max_steps: int = 10**6) -> RadialHull:
    """Radial SLE(kappa) from 1, stopped when the trace first reaches ``|z| = r``."""
    if not 0 < r < 1:
        raise DomainError("r must lie in (0, 1)")
    if not (dt > 0 and kappa >= 0):
        raise DomainError("need dt > 0 and kappa >= 0")
    gen = as_seed(seed).generator()
    th, gam, done = _radial_run(gen, float(kappa), float(dt), float(r), int(max_steps))
    if not done:
        raise NonTermination(f"radial trace did not reach radius {r}", max_steps)
    if sectors is None:
        sectors = max(16, int(round(2 * math.pi / math.sqrt(max(kappa, 1.0) * dt))))
    hull, rings = _logpolar_hull(gam, r, sectors)
    mask = GridMask(1.0, (0, 0), hull)
    return RadialHull(mask, Path2D(gam, dt * np.arange(len(gam))), float(r), rings, sectors)


def radial_L(h: RadialHull):
    """``L`` between the two circles in the annulus minus the hull."""
    rings, sectors = h.rings, h.sectors
    full = np.zeros((rings, sectors), dtype=bool)
    c = h.mask.cells()
    full[c[:, 0], c[:, 1]] = True
    dom = ~full
    j = np.arange(sectors)
    a_cells = np.stack([np.full(sectors, -1), j], axis=1)[dom[0]]
    b_cells = np.stack([np.full(sectors, rings), j], axis=1)[dom[-1]]
    if len(a_cells) == 0 or len(b_cells) == 0:
        return INFINITE
    q = Quadrilateral(GridMask(1.0, (0, 0), dom), GridMask.from_cells(a_cells),
                      GridMask.from_cells(b_cells), period=sectors, aspect=h.aspect)
    return modulus_numeric(q)


def radial_samples(r: float, trials: int, dt: float, seed, kappa: float = 6.0,
                   start: int = 0) -> np.ndarray:
    """``L`` for trials ``start ..``; ``nan`` marks an infinite value."""
    s = as_seed(seed)
    out = np.empty(trials)
    for i in range(trials):
        L = radial_L(radial_hull_to_radius(kappa, r, dt, s.child(start + i)))
        out[i] = np.nan if L is INFINITE else L
    return out


def radial_xi_estimate(lam: float, radii, trials: int, dt: float, seed, *,
                       kappa: float = 6.0, samples=None) -> PowerLawFit:
    """Fit ``E[exp(-lam L)] ~ r^xi`` over the given inner radii."""
    rs = sorted((float(v) for v in radii), reverse=True)
    if len(rs) < 3:
        raise ConfigurationError("need at least 3 radii", "radii")
    s = as_seed(seed)
    pts, errs = [], []
    for j, r in enumerate(rs):
        Ls = samples[j] if samples is not None else radial_samples(r, trials, dt, s.child(j), kappa)
        v = np.where(np.isnan(Ls), 0.0, np.exp(-lam * np.nan_to_num(Ls)))
        pts.append((1.0 / r, float(v.mean()), len(v)))
        errs.append(max(float(v.std(ddof=1) / math.sqrt(len(v))), 1e-300))
    return fit_power_law(pts, errs)
