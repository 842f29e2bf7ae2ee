"""Sampling primitives: planar Brownian paths, lattice walks, Loewner driving
functions and the Bessel process that governs boundary swallowing."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numba
import numpy as np

from .errors import ConfigurationError, DomainError, NonTermination
from .rng import Seed, as_seed

__all__ = [
    "Path2D",
    "LatticeWalk",
    "DrivingFunction",
    "sample_brownian_increments",
    "sample_to_radius",
    "sample_srw",
    "sample_bessel_hit",
    "sample_driving",
    "svg_polyline",
]


@dataclass(frozen=True)
class Path2D:
    """Sampled continuous path: complex points with strictly increasing times."""

    points: np.ndarray
    times: np.ndarray

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=np.complex128)
        ts = np.asarray(self.times, dtype=np.float64)
        if pts.ndim != 1 or pts.shape != ts.shape or len(pts) < 1:
            raise ValueError("points and times must be 1-d, equal length >= 1")
        if ts[0] != 0.0 or np.any(np.diff(ts) <= 0):
            raise ValueError("times must start at 0 and increase strictly")
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "times", ts)

    def __len__(self):
        return len(self.points)

    @property
    def end(self) -> complex:
        return complex(self.points[-1])

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t", "re", "im"])
            for t, z in zip(self.times, self.points):
                w.writerow([repr(float(t)), repr(float(z.real)), repr(float(z.imag))])

    @classmethod
    def from_csv(cls, path) -> "Path2D":
        data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
        return cls(data[:, 1] + 1j * data[:, 2], data[:, 0])

    def to_svg(self, path, **kw) -> None:
        Path(path).write_text(svg_polyline([self.points], **kw))


@dataclass(frozen=True)
class LatticeWalk:
    """Nearest-neighbour walk on Z^2; ``sites`` has shape (n + 1, 2)."""

    sites: np.ndarray

    def __post_init__(self):
        s = np.asarray(self.sites, dtype=np.int64)
        if s.ndim != 2 or s.shape[1] != 2 or len(s) < 1:
            raise ValueError("sites must have shape (n + 1, 2)")
        if len(s) > 1 and np.any(np.abs(np.diff(s, axis=0)).sum(axis=1) != 1):
            raise ValueError("consecutive sites must be nearest neighbours")
        object.__setattr__(self, "sites", s)

    def __len__(self):
        return len(self.sites)

    @property
    def steps(self) -> int:
        return len(self.sites) - 1


@dataclass(frozen=True)
class DrivingFunction:
    """Real driving function sampled at ``k * dt``, ``k = 0 .. len - 1``."""

    dt: float
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64)
        if v.ndim != 1 or len(v) < 1:
            raise ValueError("values must be a non-empty 1-d array")
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "dt", float(self.dt))

    def __len__(self):
        return len(self.values)

    @property
    def times(self) -> np.ndarray:
        return self.dt * np.arange(len(self.values))


# -- Brownian paths ----------------------------------------------------------

def sample_brownian_increments(n: int, dt: float, seed) -> Path2D:
    """Planar Brownian motion from the origin, ``n`` steps of length ``dt``."""
    if n < 0:
        raise DomainError("n must be >= 0")
    if not dt > 0:
        raise DomainError("dt must be positive")
    g = as_seed(seed).generator()
    inc = g.standard_normal((n, 2)) * math.sqrt(dt)
    pts = np.zeros(n + 1, dtype=np.complex128)
    pts[1:] = np.cumsum(inc[:, 0] + 1j * inc[:, 1])
    return Path2D(pts, dt * np.arange(n + 1))


@numba.njit(cache=True)
def _run_to_radius(rng, z0, t0, dt, radius, adaptive, max_steps):
    """Euler steps from ``z0`` until ``|z| >= radius``.

    With ``adaptive`` the variance of a step at ``|z| > 1`` is ``dt * |z|^2``,
    a discrete version of the time change under which ``log z`` is a
    Brownian motion.  Returns (points, times, finished); the start point is
    included.
    """
    cap = 1024
    pts = np.empty(cap, dtype=np.complex128)
    ts = np.empty(cap)
    pts[0] = z0
    ts[0] = t0
    n = 1
    z = z0
    t = t0
    r2 = radius * radius
    while z.real * z.real + z.imag * z.imag < r2:
        if n > max_steps:
            return pts[:n], ts[:n], False
        h = dt
        if adaptive:
            a2 = z.real * z.real + z.imag * z.imag
            if a2 > 1.0:
                h = dt * a2
        s = math.sqrt(h)
        x = rng.standard_normal()
        y = rng.standard_normal()
        z = z + s * complex(x, y)
        t += h
        if n == cap:
            cap *= 2
            p2 = np.empty(cap, dtype=np.complex128)
            t2 = np.empty(cap)
            p2[:n] = pts[:n]
            t2[:n] = ts[:n]
            pts = p2
            ts = t2
        pts[n] = z
        ts[n] = t
        n += 1
    return pts[:n], ts[:n], True


def circle_exit_fraction(a: complex, b: complex, radius: float) -> float:
    """Fraction ``s`` in (0, 1] with ``|a + s (b - a)| = radius`` (|a| < radius <= |b|)."""
    d = b - a
    A = d.real * d.real + d.imag * d.imag
    B = a.real * d.real + a.imag * d.imag
    C = a.real * a.real + a.imag * a.imag - radius * radius
    disc = max(B * B - A * C, 0.0)
    # -C > 0, so the root with the + sign is positive; this form avoids cancellation
    s = -C / (B + math.sqrt(disc)) if B >= 0 else (math.sqrt(disc) - B) / A
    return min(max(s, 0.0), 1.0)


def truncate_at_radius(points: np.ndarray, times: np.ndarray, radius: float):
    """Cut a raw path at its first exit of the disk, interpolating onto the circle."""
    r = np.abs(points)
    out = np.flatnonzero(r >= radius)
    if len(out) == 0:
        raise ValueError("path never reaches the radius")
    e = int(out[0])
    if e == 0:
        return points[:1].copy(), times[:1].copy()
    s = circle_exit_fraction(complex(points[e - 1]), complex(points[e]), radius)
    zp = points[e - 1] + s * (points[e] - points[e - 1])
    tp = times[e - 1] + s * (times[e] - times[e - 1])
    if s == 0.0:
        return points[:e].copy(), times[:e].copy()
    return np.append(points[:e], zp), np.append(times[:e], tp)


def uniform_start(gen: np.random.Generator) -> complex:
    theta = 2.0 * math.pi * gen.random()
    return complex(math.cos(theta), math.sin(theta))


def sample_to_radius(R: float, dt: float, seed, start=None, *, adaptive: bool = False,
                     max_steps: int = 10**8) -> Path2D:
    """Brownian path from the unit circle stopped on the circle of radius ``R``.

    ``start`` is a point on the unit circle or ``None`` for a uniform start.
    The last raw step is cut back onto ``|z| = R`` by linear interpolation.
    """
    if not R > 1:
        raise DomainError("R must exceed 1")
    if not dt > 0:
        raise DomainError("dt must be positive")
    gen = as_seed(seed).generator()
    z0 = uniform_start(gen) if start is None else complex(start)
    if start is not None and abs(abs(z0) - 1.0) > 1e-12:
        raise DomainError("start must lie on the unit circle")
    pts, ts, done = _run_to_radius(gen, z0, 0.0, dt, R, adaptive, max_steps)
    if not done:
        raise NonTermination(f"no exit of radius {R} within {max_steps} steps", max_steps)
    pts, ts = truncate_at_radius(pts, ts, R)
    return Path2D(pts, ts)


# -- lattice walks -----------------------------------------------------------

_STEPS = np.array([[1, 0], [0, 1], [-1, 0], [0, -1]], dtype=np.int64)


def sample_srw(n: int, seed, start=(0, 0)) -> LatticeWalk:
    """Simple random walk on Z^2 with ``n`` steps."""
    if n < 0:
        raise DomainError("n must be >= 0")
    g = as_seed(seed).generator()
    sites = np.empty((n + 1, 2), dtype=np.int64)
    sites[0] = start
    if n:
        sites[1:] = np.cumsum(_STEPS[g.integers(0, 4, size=n)], axis=0) + np.asarray(start)
    return LatticeWalk(sites)


# -- Bessel process ----------------------------------------------------------

@numba.njit(cache=True)
def _bessel_kernel(rng, kappa, y0, dt, horizon, c_abs):
    drift = 2.0 / kappa
    threshold = c_abs * math.sqrt(dt)
    sq = math.sqrt(dt)
    y = y0
    t = 0.0
    n = int(math.ceil(horizon / dt))
    for _ in range(n):
        if y <= threshold:
            return True, t
        y = y + drift / y * dt - sq * rng.standard_normal()
        t += dt
    if y <= threshold:
        return True, t
    return False, -1.0


def sample_bessel_hit(kappa: float, y0: float, dt: float, horizon: float, seed,
                      c_abs: float = 1.0):
    """Euler scheme for ``dY = 2/(kappa Y) dt - dB`` absorbed at ``c_abs * sqrt(dt)``.

    Returns ``(hit, hit_time)``; ``hit_time`` is ``None`` without a hit.
    """
    for name, v in (("kappa", kappa), ("y0", y0), ("dt", dt), ("horizon", horizon)):
        if not v > 0:
            raise DomainError(f"{name} must be positive")
    hit, t = _bessel_kernel(as_seed(seed).generator(), float(kappa), float(y0),
                            float(dt), float(horizon), float(c_abs))
    return bool(hit), (float(t) if hit else None)


# -- driving functions -------------------------------------------------------

def sample_driving(kappa: float, n: int, dt: float, seed) -> DrivingFunction:
    """``W = sqrt(kappa) * B`` on the grid ``k * dt``, ``W_0 = 0``."""
    if kappa < 0:
        raise DomainError("kappa must be >= 0")
    if n < 0:
        raise DomainError("n must be >= 0")
    if not dt > 0:
        raise DomainError("dt must be positive")
    g = as_seed(seed).generator()
    w = np.zeros(n + 1)
    w[1:] = np.cumsum(g.standard_normal(n)) * math.sqrt(kappa * dt)
    return DrivingFunction(dt, w)


# -- figures -----------------------------------------------------------------

def svg_polyline(curves, size: int = 600, stroke: float = 1.0, colors=None) -> str:
    """Render complex polylines into a standalone SVG document (y axis up)."""
    curves = [np.asarray(c, dtype=np.complex128) for c in curves if len(c)]
    if not curves:
        raise ConfigurationError("nothing to draw")
    allp = np.concatenate(curves)
    x0, x1 = allp.real.min(), allp.real.max()
    y0, y1 = allp.imag.min(), allp.imag.max()
    span = max(x1 - x0, y1 - y0, 1e-12)
    scale = (size - 20) / span
    colors = colors or ["#1f3b73", "#b3202a", "#2a7a3b", "#7a4a9e"]
    lines = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" '
             f'viewBox="0 0 {size} {size}">']
    for i, c in enumerate(curves):
        xs = 10 + (c.real - x0) * scale
        ys = size - 10 - (c.imag - y0) * scale
        pts = " ".join(f"{x:.2f},{y:.2f}" for x, y in zip(xs, ys))
        lines.append(f'<polyline fill="none" stroke="{colors[i % len(colors)]}" '
                     f'stroke-width="{stroke}" points="{pts}"/>')
    lines.append("</svg>")
    return "\n".join(lines) + "\n"
