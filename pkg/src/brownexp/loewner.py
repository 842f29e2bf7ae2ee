"""Chordal Loewner evolution by exact slit maps (the zipper discretization).

Over a step of duration ``delta`` with constant drive ``w`` the Loewner flow
``dg/dt = 2 / (g - w)`` is solved exactly by
``g(z) = w + sqrt((z - w)^2 + 4 delta)``, branch chosen so that the upper
half-plane maps into itself.  A piecewise constant drive therefore produces
a chain of such maps and the only error is the discretization of the drive.
"""

from __future__ import annotations

import cmath
import json
import math
from dataclasses import dataclass

import numba
import numpy as np

from .errors import ConfigurationError, DomainError, NonTermination, NumericError, Swallowed
from .extremal import L_of_x
from .fitting import PowerLawFit, fit_power_law
from .paths import DrivingFunction, Path2D
from .rng import as_seed

__all__ = [
    "ConformalChain",
    "Sle6State",
    "ZERO_SIDE",
    "ONE_SIDE",
    "chordal_advance",
    "evaluate",
    "inverse",
    "chordal_trace",
    "sle6_swallow_experiment",
    "swallow_samples",
    "xi_hat_estimate",
]

ZERO_SIDE = "zero-side"
ONE_SIDE = "one-side"


@dataclass(frozen=True)
class ConformalChain:
    """Composition of elementary slit maps, applied first to last."""

    deltas: np.ndarray
    drives: np.ndarray

    def __post_init__(self):
        d = np.asarray(self.deltas, dtype=np.float64).ravel()
        w = np.asarray(self.drives, dtype=np.float64).ravel()
        if d.shape != w.shape:
            raise ValueError("deltas and drives differ in length")
        if np.any(~(d > 0)):
            raise ValueError("step durations must be positive")
        d.setflags(write=False)
        w.setflags(write=False)
        object.__setattr__(self, "deltas", d)
        object.__setattr__(self, "drives", w)

    @classmethod
    def empty(cls) -> "ConformalChain":
        return cls(np.empty(0), np.empty(0))

    @classmethod
    def from_drive(cls, drive: DrivingFunction) -> "ConformalChain":
        """Step ``k`` (``k >= 1``) runs for ``dt`` with drive ``values[k]``."""
        n = len(drive) - 1
        return cls(np.full(n, drive.dt), drive.values[1:])

    def __len__(self):
        return len(self.deltas)

    @property
    def total_time(self) -> float:
        return float(math.fsum(self.deltas))

    @property
    def steps(self) -> list:
        return list(zip(self.deltas.tolist(), self.drives.tolist()))

    def to_json(self) -> str:
        return json.dumps({"steps": self.steps})

    @classmethod
    def from_json(cls, text: str) -> "ConformalChain":
        steps = json.loads(text)["steps"]
        if not steps:
            return cls.empty()
        d, w = zip(*steps)
        return cls(np.array(d), np.array(w))


def chordal_advance(chain: ConformalChain, w: float, delta: float) -> ConformalChain:
    """Append the exact map for constant drive ``w`` over time ``delta``."""
    if not delta > 0:
        raise DomainError("delta must be positive")
    return ConformalChain(np.append(chain.deltas, float(delta)),
                          np.append(chain.drives, float(w)))


# -- kernels -----------------------------------------------------------------

@numba.njit(cache=True)
def _fwd(z, w, d):
    zw = z - w
    s = cmath.sqrt(zw * zw + 4.0 * d)
    if s.imag < 0.0 or (s.imag == 0.0 and zw.real < 0.0):
        s = -s
    return w + s, zw / s


@numba.njit(cache=True)
def _inv(z, w, d):
    r = 2.0 * math.sqrt(d)
    p = cmath.sqrt(z - w - r) * cmath.sqrt(z - w + r)
    if p.imag < 0.0:
        p = -p
    return w + p


@numba.njit(cache=True)
def _evaluate(zs, deltas, drives, strict):
    n = len(zs)
    g = np.empty(n, dtype=np.complex128)
    dg = np.empty(n, dtype=np.complex128)
    hit = np.full(n, -1.0)
    for i in range(n):
        z = zs[i]
        d = 1.0 + 0.0j
        real = z.imag == 0.0
        side = 0.0
        t = 0.0
        for k in range(len(deltas)):
            w = drives[k]
            if real:
                s = z.real - w
                if s == 0.0 or (side != 0.0 and s * side < 0.0):
                    if hit[i] < 0.0:
                        hit[i] = t
                    if strict:
                        break
                side = s
            zw = z - w
            z, f = _fwd(z, w, deltas[k])
            d *= f
            if not real and z.imag <= 0.0 and hit[i] < 0.0:
                # within a step the image hits w after time -(z - w)^2 / 4
                tau = -(zw * zw).real / 4.0
                hit[i] = t + min(max(tau, 0.0), deltas[k])
                if strict:
                    break
            t += deltas[k]
        g[i] = z
        dg[i] = d
    return g, dg, hit


@numba.njit(cache=True)
def _inverse(zs, deltas, drives):
    out = np.empty(len(zs), dtype=np.complex128)
    for i in range(len(zs)):
        z = zs[i]
        for k in range(len(deltas) - 1, -1, -1):
            z = _inv(z, drives[k], deltas[k])
        out[i] = z
    return out


@numba.njit(cache=True)
def _trace(deltas, drives, w0, idx):
    """``gamma`` after ``idx[j]`` steps: undo steps ``idx[j] - 1 .. 0`` from the drive."""
    out = np.empty(len(idx), dtype=np.complex128)
    bad = -1
    for j in range(len(idx)):
        k = idx[j]
        if k == 0:
            out[j] = complex(w0, 0.0)
            continue
        z = complex(drives[k - 1], 0.0)
        for m in range(k - 1, -1, -1):
            z = _inv(z, drives[m], deltas[m])
        if not (math.isfinite(z.real) and math.isfinite(z.imag)):
            bad = k
            break
        out[j] = z
    return out, bad


def evaluate(chain: ConformalChain, z, strict: bool = True):
    """``(g(z), g'(z))`` for the composed chain.

    Raises :class:`Swallowed` if ``z`` is absorbed: for a real point when the
    drive passes over it, for a point of the upper half-plane when its image
    reaches the real line.  The error carries the estimated absorption time.
    With ``strict=False`` the composition is carried on through the
    continuous extension of the maps instead.
    """
    scalar = np.ndim(z) == 0
    zs = np.atleast_1d(np.asarray(z, dtype=np.complex128))
    if np.any(zs.imag < 0):
        raise DomainError("points must lie in the closed upper half-plane")
    g, dg, hit = _evaluate(zs, chain.deltas, chain.drives, strict)
    bad = np.flatnonzero(hit >= 0)
    if strict and bad.size:
        t = float(hit[bad[0]])
        raise Swallowed(f"point {zs[bad[0]]} swallowed at t~{t:.6g}", t)
    if scalar:
        return complex(g[0]), complex(dg[0])
    return g, dg


def inverse(chain: ConformalChain, w):
    """Preimage under the chain of points in the closed upper half-plane."""
    scalar = np.ndim(w) == 0
    out = _inverse(np.atleast_1d(np.asarray(w, dtype=np.complex128)),
                   chain.deltas, chain.drives)
    return complex(out[0]) if scalar else out


def chordal_trace(drive: DrivingFunction, stride: int = 8) -> Path2D:
    """Trace ``gamma(t_k) = g_{t_k}^{-1}(W_{t_k})`` every ``stride`` grid times.

    The final grid time is always included.  Cost is quadratic in the number
    of steps divided by ``stride``.
    """
    if stride < 1:
        raise ConfigurationError("stride must be >= 1", "stride")
    chain = ConformalChain.from_drive(drive)
    n = len(chain)
    idx = np.arange(0, n + 1, stride)
    if idx[-1] != n:
        idx = np.append(idx, n)
    pts, bad = _trace(chain.deltas, chain.drives, float(drive.values[0]), idx)
    if bad >= 0:
        raise NumericError(f"inverse map failed at step {bad}")
    return Path2D(pts, drive.dt * idx)


# -- SLE(6) from x in (0, 1) ---------------------------------------------------

@dataclass(frozen=True)
class Sle6State:
    """Boundary data of chordal SLE(6) from ``x``, normalized to fix 0 and 1.

    ``w = (W - g(0)) / (g(1) - g(0))`` and ``u = g'(1) / (g(1) - g(0))``.
    """

    w: float
    u: float
    g0: float
    g1: float
    time: float
    steps: int
    chain: ConformalChain | None = None


@numba.njit(cache=True)
def _swallow_kernel(rng, x, dt, max_steps, record, refine, near):
    """Run until the drive leaves ``(g(0), g(1))``.

    Steps have length ``dt * (g(1) - g(0))^2`` so that the resolution is
    uniform in the scale-invariant coordinates.  A Brownian-bridge test
    catches excursions past an endpoint that occur inside a step.
    """
    W = x
    a = 0.0
    b = 1.0
    gp = 1.0
    t = 0.0
    cap = 1024 if record else 1
    ds = np.empty(cap)
    ws = np.empty(cap)
    for k in range(max_steps):
        D = b - a
        # refine near the endpoints: the step std stays below ``near`` times
        # the distance to the nearer one, down to dt * refine
        m = min(W - a, b - W) / D
        d = D * D * min(dt, max(dt * refine, m * m * near * near / 6.0))
        var = 6.0 * d
        Wn = W + math.sqrt(var) * rng.standard_normal()
        u = rng.random()
        side = -1
        if Wn <= a:
            side = 0
        elif Wn >= b:
            side = 1
        else:
            pa = math.exp(-2.0 * (W - a) * (Wn - a) / var)
            pb = math.exp(-2.0 * (b - W) * (b - Wn) / var)
            if u < pa:
                side = 0
            elif u < pa + pb:
                side = 1
        if side >= 0:
            return side, a, b, gp, t, k, ds[:k if record else 0], ws[:k if record else 0]
        sa = math.sqrt((a - Wn) ** 2 + 4.0 * d)
        sb = math.sqrt((b - Wn) ** 2 + 4.0 * d)
        gp *= (b - Wn) / sb
        a = Wn - sa
        b = Wn + sb
        W = Wn
        t += d
        if record:
            if k == cap:
                cap *= 2
                d2 = np.empty(cap)
                w2 = np.empty(cap)
                d2[:k] = ds[:k]
                w2[:k] = ws[:k]
                ds = d2
                ws = w2
            ds[k] = d
            ws[k] = Wn
    return -1, a, b, gp, t, max_steps, ds[:0], ws[:0]


def sle6_swallow_experiment(x: float, dt: float, seed, *, max_steps: int = 10**7,
                            record_chain: bool = False, refine: float = 1e-12,
                            near: float = 0.1):
    """Chordal SLE(6) from ``x`` until its hull meets ``(-oo, 0] u [1, oo)``.

    Returns ``(side, state)``: ``ZERO_SIDE`` when the hull reaches the
    negative half-line first, ``ONE_SIDE`` otherwise.  ``dt`` is the step
    length relative to the squared distance ``g(1) - g(0)``.
    """
    x = float(x)
    if not 0.0 < x < 1.0:
        raise DomainError(f"x={x} outside (0, 1)")
    if not dt > 0:
        raise DomainError("dt must be positive")
    gen = as_seed(seed).generator()
    side, a, b, gp, t, k, ds, ws = _swallow_kernel(gen, x, float(dt), int(max_steps),
                                                   record_chain, float(refine), float(near))
    if side < 0:
        raise NonTermination(f"SLE(6) from x={x} did not exit in {max_steps} steps", max_steps)
    D = b - a
    chain = ConformalChain(ds, ws) if record_chain else None
    state = Sle6State(w=float(side), u=gp / D, g0=a, g1=b, time=t, steps=int(k), chain=chain)
    return (ONE_SIDE if side == 1 else ZERO_SIDE), state


def swallow_samples(x: float, dt: float, seed, trials: int, *,
                    max_steps: int = 10**7, start: int = 0):
    """Run trials ``start .. start + trials - 1``; trial ``i`` uses ``seed.child(i)``.

    Returns ``(one_side, u)`` arrays with ``u`` the value of ``u_T``.
    """
    s = as_seed(seed)
    one = np.empty(trials, dtype=bool)
    u = np.empty(trials)
    for i in range(trials):
        side, st = sle6_swallow_experiment(x, dt, s.child(start + i), max_steps=max_steps)
        one[i] = side == ONE_SIDE
        u[i] = st.u
    return one, u


def xi_hat_values(x: float, lam: float, one_side: np.ndarray, u: np.ndarray) -> np.ndarray:
    """Samples of ``((1 - x) u_T)^lam`` with infinite-length samples set to 0."""
    v = np.where(one_side, 0.0, ((1.0 - x) * u) ** lam)
    if lam == 0:
        v = np.where(one_side, 0.0, 1.0)
    return v


def xi_hat_estimate(lam: float, x_grid, trials: int, dt: float, seed, *,
                    synthetic: bool = False, max_steps: int = 10**7,
                    samples=None) -> PowerLawFit:
    """Slope of ``-log E[((1 - x) u_T)^lam]`` against ``L(x)``.

    ``samples`` may supply precomputed ``(one_side, u)`` pairs per grid point
    (the CLI uses this to spread trials over processes).  With
    ``synthetic=True`` every sample is replaced by ``exp(-lam L(x))``, which
    must return the slope ``lam``.
    """
    if lam < 0:
        raise DomainError("lam must be >= 0")
    xs = sorted(float(v) for v in x_grid)
    if len(xs) < 3:
        raise ConfigurationError("need at least 3 grid points", "x_grid")
    Ls = [L_of_x(v) for v in xs]
    if Ls[-1] < 3 * Ls[0]:
        raise ConfigurationError("x_grid must span a factor 3 in L(x)", "x_grid")
    s = as_seed(seed)
    pts, errs = [], []
    for j, (x, L) in enumerate(zip(xs, Ls)):
        if synthetic:
            pts.append((L, math.exp(-lam * L), trials))
            continue
        if samples is not None:
            one, u = samples[j]
        else:
            one, u = swallow_samples(x, dt, s.child(j), trials, max_steps=max_steps)
        v = xi_hat_values(x, lam, one, u)
        m = float(v.mean())
        if m <= 0:
            raise NumericError(f"no finite-length samples at x={x}")
        pts.append((L, m, len(v)))
        errs.append(float(v.std(ddof=1) / math.sqrt(len(v))))
    if synthetic:
        return fit_power_law(pts, log_scale=False)
    errs = [max(e, 1e-300) for e in errs]
    return fit_power_law(pts, errs, log_scale=False)
