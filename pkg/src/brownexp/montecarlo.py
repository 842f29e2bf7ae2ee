"""Monte Carlo estimators for intersection exponents and path dimensions.

Every trial runs its paths through a nested sequence of radii ``R_1 < R_2 <
...`` and reports the index of the first radius at which the event under
study fails, so one trial serves all radii.  A trial stops as soon as that
index is known.

Paths are Euler discretizations of planar Brownian motion whose step
variance is ``dt * max(|z|, 1)^2``; outside the unit disk this is a uniform
step in ``log z``.  Cells follow the same scaling: a Cartesian grid of side
``h = 0.25 sqrt(dt)`` inside the unit disk, and a grid of side ``h`` in
``(log|z|, arg z)`` outside it.  Each segment is rasterized exactly (every
cell it meets), so two polylines that cross always share a cell.
"""

from __future__ import annotations

import math
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numba
import numpy as np

from .errors import ConfigurationError, NonTermination
from .fitting import PowerLawFit, binomial_stderr, fit_power_law
from .geometry import box_dimension, cut_times, frontier, pioneer_times, walk_mask
from .paths import sample_srw
from .rng import Seed, as_seed

__all__ = [
    "ExperimentPlan",
    "RadiusTable",
    "DimensionEstimate",
    "failure_levels",
    "radius_table",
    "fit_table",
    "estimate_nonintersection",
    "estimate_disconnection",
    "estimate_halfplane",
    "estimate_zr_moment",
    "zr_samples",
    "estimate_dimension",
    "dimension_counts",
]

NONINTERSECT, DISCONNECT, HALFPLANE = 0, 1, 2
_MAX_STEPS = 10**8


@dataclass(frozen=True)
class ExperimentPlan:
    radii: tuple = (2.0, 4.0, 8.0, 16.0, 32.0, 64.0)
    trials_per_radius: int = 2000
    dt: float = 0.01
    inner_samples: int = 100
    seed: Seed = Seed(0)

    def __post_init__(self):
        r = tuple(float(v) for v in self.radii)
        object.__setattr__(self, "radii", r)
        object.__setattr__(self, "seed", as_seed(self.seed))
        if len(r) < 3:
            raise ConfigurationError("need at least 3 radii", "radii")
        if r[0] <= 1 or any(b <= a for a, b in zip(r, r[1:])):
            raise ConfigurationError("radii must exceed 1 and increase strictly", "radii")
        if int(self.trials_per_radius) < 100:
            raise ConfigurationError("need at least 100 trials per radius", "trials_per_radius")
        if not (self.dt > 0 and self.dt <= 0.25):
            raise ConfigurationError("dt must lie in (0, 0.25]", "dt")
        if int(self.inner_samples) < 1:
            raise ConfigurationError("inner_samples must be positive", "inner_samples")

    def to_dict(self) -> dict:
        return {"radii": list(self.radii), "trials_per_radius": int(self.trials_per_radius),
                "dt": self.dt, "inner_samples": int(self.inner_samples),
                "seed": self.seed.to_dict()}

    @classmethod
    def from_dict(cls, d) -> "ExperimentPlan":
        return cls(tuple(d["radii"]), d["trials_per_radius"], d["dt"],
                   d.get("inner_samples", 100), Seed.from_dict(d["seed"]))


# -- grid ---------------------------------------------------------------------

@dataclass(frozen=True)
class _Grid:
    h: float
    sectors: int
    rows: int
    half: int

    @classmethod
    def make(cls, dt: float, rmax: float) -> "_Grid":
        h = 0.25 * math.sqrt(dt)
        sectors = max(8, int(round(2 * math.pi / h)))
        rows = int(math.ceil(math.log(rmax) / h)) + 2
        half = int(math.ceil(1.0 / h)) + 1
        return cls(h, sectors, rows, half)

    @property
    def ncells(self) -> int:
        return self.rows * self.sectors + 4 * self.half * self.half


@numba.njit(cache=True)
def _exit_frac(a, b, radius):
    d = b - a
    A = d.real * d.real + d.imag * d.imag
    B = a.real * d.real + a.imag * d.imag
    C = a.real * a.real + a.imag * a.imag - radius * radius
    disc = max(B * B - A * C, 0.0)
    if B >= 0:
        s = -C / (B + math.sqrt(disc)) if B + math.sqrt(disc) > 0 else 0.0
    else:
        s = (math.sqrt(disc) - B) / A
    return min(max(s, 0.0), 1.0)


@numba.njit(cache=True)
def _dda(x0, y0, x1, y1, buf, n):
    """Append to ``buf`` (from position ``n``) the cells met by a segment."""
    ix = int(math.floor(x0))
    iy = int(math.floor(y0))
    jx = int(math.floor(x1))
    jy = int(math.floor(y1))
    dx = x1 - x0
    dy = y1 - y0
    sx = 1 if dx > 0 else -1
    sy = 1 if dy > 0 else -1
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
    buf[n, 0] = ix
    buf[n, 1] = iy
    n += 1
    steps = abs(jx - ix) + abs(jy - iy)
    for _ in range(steps):
        # an axis already at its target cell never steps (guards rounding near corners)
        if iy == jy or (tx < ty and ix != jx):
            ix += sx
            tx += ddx
        elif ix == jx or ty < tx:
            iy += sy
            ty += ddy
        else:
            # through a corner: include both side cells
            buf[n, 0] = ix + sx
            buf[n, 1] = iy
            n += 1
            ix += sx
            iy += sy
            tx += ddx
            ty += ddy
        buf[n, 0] = ix
        buf[n, 1] = iy
        n += 1
        if ix == jx and iy == jy:
            break
    return n


@numba.njit(cache=True)
def _segment_ids(a, b, h, sectors, rows, half, buf, ids):
    """Cell ids met by the segment ``a -> b``; returns their number."""
    ra = abs(a)
    rb = abs(b)
    n = 0
    if (ra < 1.0) != (rb < 1.0):
        s = _exit_frac(a, b, 1.0) if ra < 1.0 else 1.0 - _exit_frac(b, a, 1.0)
        m = a + s * (b - a)
        if ra < 1.0:
            n = _cart(a, m, h, half, buf, n)
            n = _polar(m, b, h, sectors, buf, n)
        else:
            n = _polar(a, m, h, sectors, buf, n)
            n = _cart(m, b, h, half, buf, n)
    elif ra < 1.0:
        n = _cart(a, b, h, half, buf, n)
    else:
        n = _polar(a, b, h, sectors, buf, n)
    base = rows * sectors
    for i in range(n):
        if buf[i, 0] >= (1 << 39):
            ix = buf[i, 0] - (1 << 40)
            iy = buf[i, 1]
            ix = min(max(ix, -half), half - 1)
            iy = min(max(iy, -half), half - 1)
            ids[i] = base + (ix + half) * 2 * half + (iy + half)
        else:
            r = min(max(buf[i, 0], 0), rows - 1)
            ids[i] = r * sectors + buf[i, 1] % sectors
    return n


@numba.njit(cache=True)
def _cart(a, b, h, half, buf, n):
    n0 = n
    n = _dda(a.real / h, a.imag / h, b.real / h, b.imag / h, buf, n)
    for i in range(n0, n):
        buf[i, 0] += 1 << 40
    return n


@numba.njit(cache=True)
def _polar(a, b, h, sectors, buf, n):
    ht = 2 * math.pi / sectors
    ua = math.log(max(abs(a), 1.0)) / h
    ub = math.log(max(abs(b), 1.0)) / h
    va = math.atan2(a.imag, a.real)
    if va < 0:
        va += 2 * math.pi
    q = b / a
    vb = va + math.atan2(q.imag, q.real)
    return _dda(ua, va / ht, ub, vb / ht, buf, n)


# -- union-find with winding, for disconnection --------------------------------

@numba.njit(cache=True)
def _find(par, off, c):
    # returns (root, offset of c relative to root)
    r = c
    o = 0
    while par[r] != r:
        o += off[r]
        r = par[r]
    # path compression
    x = c
    ox = o
    while par[x] != x:
        nxt = par[x]
        nx_off = ox - off[x]
        par[x] = r
        off[x] = ox
        x = nxt
        ox = nx_off
    return r, o


@numba.njit(cache=True)
def _add_wrap_cell(c, rows, sectors, owner, par, off):
    """Insert an occupied annulus cell; True if its cluster now winds around."""
    par[c] = c
    off[c] = 0
    row = c // sectors
    col = c % sectors
    wrapped = False
    for dr in (-1, 0, 1):
        rr = row + dr
        if rr < 0 or rr >= rows:
            continue
        for dc in (-1, 0, 1):
            if dr == 0 and dc == 0:
                continue
            nb = rr * sectors + (col + dc) % sectors
            if owner[nb] == 0:
                continue
            rc, oc = _find(par, off, c)
            rn, on = _find(par, off, nb)
            if rc == rn:
                if on - oc != dc:
                    wrapped = True
            else:
                par[rn] = rc
                off[rn] = dc - on + oc
    return wrapped


# -- trial kernels ----------------------------------------------------------------

@numba.njit(cache=True)
def _start(rng, upper):
    th = (math.pi if upper else 2 * math.pi) * rng.random()
    return complex(math.cos(th), math.sin(th))


@numba.njit(cache=True)
def _event_trial(rng, mode, j, k, radii, dt, h, sectors, rows, half,
                 owner, par, off, touched, buf, ids, max_steps):
    """First radius index at which the event fails (``len(radii)`` if never)."""
    npath = j + k if mode != DISCONNECT else j
    zs = np.empty(npath, dtype=np.complex128)
    for p in range(npath):
        zs[p] = _start(rng, mode == HALFPLANE)
    nt = 0
    result = len(radii)
    steps = 0
    for m in range(len(radii)):
        R = radii[m]
        failed = False
        for p in range(npath):
            bit = 1 if p < j else 2
            z = zs[p]
            if mode == HALFPLANE and z.imag <= 0:
                failed = True
                break
            while abs(z) < R:
                steps += 1
                if steps > max_steps:
                    for i in range(nt):
                        owner[touched[i]] = 0
                    return -1
                s = math.sqrt(dt) * max(abs(z), 1.0)
                zn = z + s * complex(rng.standard_normal(), rng.standard_normal())
                if abs(zn) >= R:
                    zn = z + _exit_frac(z, zn, R) * (zn - z)
                    if abs(zn) < R:
                        zn = zn * (R / abs(zn))
                if mode == HALFPLANE and zn.imag <= 0:
                    failed = True
                    break
                nc = _segment_ids(z, zn, h, sectors, rows, half, buf, ids)
                for i in range(nc):
                    c = ids[i]
                    if mode == DISCONNECT:
                        if c >= rows * sectors or owner[c] != 0:
                            continue
                        owner[c] = 1
                        touched[nt] = c
                        nt += 1
                        if _add_wrap_cell(c, rows, sectors, owner, par, off):
                            failed = True
                    else:
                        o = owner[c]
                        if o == 0:
                            touched[nt] = c
                            nt += 1
                        if k > 0 and (o | bit) == 3:
                            failed = True
                        owner[c] = o | bit
                z = zn
                if failed:
                    break
            zs[p] = z
            if failed:
                break
        if failed:
            result = m
            break
    for i in range(nt):
        owner[touched[i]] = 0
    return result


@numba.njit(cache=True)
def _zr_trial(rng, j, n_inner, radii, dt, h, sectors, rows, half,
              plev, touched, buf, ids, out, max_steps):
    """Fix a packet of ``j`` paths, then record for each of ``n_inner`` fresh
    paths the first radius index at which it meets the packet."""
    nr = len(radii)
    nt = 0
    steps = 0
    for p in range(j):
        z = _start(rng, False)
        for m in range(nr):
            R = radii[m]
            while abs(z) < R:
                steps += 1
                if steps > max_steps:
                    for i in range(nt):
                        plev[touched[i]] = -1
                    return False
                s = math.sqrt(dt) * max(abs(z), 1.0)
                zn = z + s * complex(rng.standard_normal(), rng.standard_normal())
                if abs(zn) >= R:
                    zn = z + _exit_frac(z, zn, R) * (zn - z)
                nc = _segment_ids(z, zn, h, sectors, rows, half, buf, ids)
                for i in range(nc):
                    c = ids[i]
                    if plev[c] < 0:
                        plev[c] = m
                        touched[nt] = c
                        nt += 1
                    elif plev[c] > m:
                        plev[c] = m
                z = zn
    for q in range(n_inner):
        z = _start(rng, False)
        first = nr
        for m in range(nr):
            R = radii[m]
            while abs(z) < R:
                steps += 1
                if steps > max_steps:
                    for i in range(nt):
                        plev[touched[i]] = -1
                    return False
                s = math.sqrt(dt) * max(abs(z), 1.0)
                zn = z + s * complex(rng.standard_normal(), rng.standard_normal())
                if abs(zn) >= R:
                    zn = z + _exit_frac(z, zn, R) * (zn - z)
                nc = _segment_ids(z, zn, h, sectors, rows, half, buf, ids)
                for i in range(nc):
                    lv = plev[ids[i]]
                    if lv >= 0:
                        f = max(lv, m)
                        if f < first:
                            first = f
                z = zn
            if first <= m:
                break
        out[q] = first
    for i in range(nt):
        plev[touched[i]] = -1
    return True


def _workspace():
    # one step spans a few dozen cells at most; steps of 1000 standard deviations do not occur
    return np.empty((1 << 14, 2), dtype=np.int64), np.empty(1 << 14, dtype=np.int64)


def _levels_chunk(args):
    mode, j, k, radii, dt, seed, start, count = args
    radii = np.asarray(radii, dtype=np.float64)
    g = _Grid.make(dt, radii[-1])
    owner = np.zeros(g.ncells, dtype=np.int8)
    par = np.zeros(g.rows * g.sectors, dtype=np.int64)
    off = np.zeros(g.rows * g.sectors, dtype=np.int64)
    touched = np.empty(g.ncells, dtype=np.int64)
    buf, ids = _workspace()
    s = as_seed(seed)
    out = np.empty(count, dtype=np.int64)
    for i in range(count):
        rng = s.child(start + i).generator()
        f = _event_trial(rng, mode, j, k, radii, dt, g.h, g.sectors, g.rows, g.half,
                         owner, par, off, touched, buf, ids, _MAX_STEPS)
        if f < 0:
            raise NonTermination("path step budget exhausted", _MAX_STEPS)
        out[i] = f
    return out


def _zr_chunk(args):
    j, n_inner, radii, dt, seed, start, count = args
    radii = np.asarray(radii, dtype=np.float64)
    g = _Grid.make(dt, radii[-1])
    plev = np.full(g.ncells, -1, dtype=np.int64)
    touched = np.empty(g.ncells, dtype=np.int64)
    buf, ids = _workspace()
    s = as_seed(seed)
    out = np.empty((count, n_inner), dtype=np.int64)
    for i in range(count):
        rng = s.child(start + i).generator()
        if not _zr_trial(rng, j, n_inner, radii, dt, g.h, g.sectors, g.rows, g.half,
                         plev, touched, buf, ids, out[i], _MAX_STEPS):
            raise NonTermination("path step budget exhausted", _MAX_STEPS)
    return out


def run_chunks(fn, make_args, total: int, threads: int = 1, chunk: int | None = None):
    """Apply ``fn`` to index ranges covering ``range(total)`` and concatenate.

    ``make_args(start, count)`` builds the argument for one range.  Ranges are
    fixed by ``chunk`` alone, so the output never depends on ``threads``.
    """
    chunk = chunk or max(1, min(1000, total))
    jobs = [make_args(s, min(chunk, total - s)) for s in range(0, total, chunk)]
    if threads <= 1 or len(jobs) == 1:
        parts = [fn(a) for a in jobs]
    else:
        with ProcessPoolExecutor(max_workers=threads) as ex:
            parts = list(ex.map(fn, jobs))
    return np.concatenate(parts) if parts else np.empty(0, dtype=np.int64)


def failure_levels(mode: int, j: int, k: int, plan: ExperimentPlan, *,
                   threads: int = 1, start: int = 0, count: int | None = None) -> np.ndarray:
    """Per trial, the index of the first radius at which the event fails."""
    count = plan.trials_per_radius if count is None else count
    return run_chunks(
        _levels_chunk,
        lambda s, c: (mode, j, k, plan.radii, plan.dt, plan.seed, start + s, c),
        count, threads)


# -- tables and fits ----------------------------------------------------------------

@dataclass(frozen=True)
class RadiusTable:
    """Per radius: the estimate, its standard error and the number of trials."""

    radii: tuple
    values: tuple
    stderrs: tuple
    n: tuple

    def rows(self):
        return list(zip(self.radii, self.values, self.stderrs, self.n))


def radius_table(levels: np.ndarray, radii) -> RadiusTable:
    n = len(levels)
    vals, errs = [], []
    for m in range(len(radii)):
        c = np.count_nonzero(levels > m)
        vals.append(c / n)
        # shrink towards 1/2 so that all-or-nothing counts keep a nonzero error
        errs.append(binomial_stderr((c + 0.5) / (n + 1), n))
    return RadiusTable(tuple(float(r) for r in radii), tuple(vals), tuple(errs), (n,) * len(radii))


def fit_table(table: RadiusTable, *, drop_first_above: float = 0.5) -> PowerLawFit:
    """Fit ``value ~ R^{-xi}``.

    Radii with a zero estimate are dropped with a warning; the smallest radius
    is dropped when its value exceeds ``drop_first_above`` (pre-asymptotic),
    provided three radii remain.
    """
    rows = [r for r in table.rows() if r[1] > 0]
    if len(rows) < len(table.radii):
        warnings.warn(f"dropped {len(table.radii) - len(rows)} radii with zero estimate",
                      RuntimeWarning, stacklevel=2)
    if len(rows) > 3 and rows[0][0] == table.radii[0] and rows[0][1] > drop_first_above:
        rows = rows[1:]
    return fit_power_law([(R, v, n) for R, v, _, n in rows], [e for _, _, e, _ in rows])


def estimate_nonintersection(j: int, k: int, plan: ExperimentPlan, *, threads: int = 1,
                             return_table: bool = False):
    """Fit of ``P(packet of j paths and packet of k paths are disjoint) ~ R^{-xi(j,k)}``."""
    if j < 1 or k < 1:
        raise ConfigurationError("j and k must be positive", "j" if j < 1 else "k")
    tab = radius_table(failure_levels(NONINTERSECT, j, k, plan, threads=threads), plan.radii)
    fit = fit_table(tab)
    return (fit, tab) if return_table else fit


def estimate_disconnection(j: int, plan: ExperimentPlan, *, threads: int = 1,
                           return_table: bool = False):
    """Fit of ``P(j paths do not disconnect the two circles) ~ R^{-xi(j,0)}``."""
    if j < 1:
        raise ConfigurationError("j must be positive", "j")
    tab = radius_table(failure_levels(DISCONNECT, j, 0, plan, threads=threads), plan.radii)
    fit = fit_table(tab)
    return (fit, tab) if return_table else fit


def estimate_halfplane(j: int, k: int, plan: ExperimentPlan, *, threads: int = 1,
                       return_table: bool = False):
    """Fit of the half-plane exponent: all paths start on the upper unit
    semicircle and must stay in the upper half-plane; with ``k >= 1`` the two
    packets must also be disjoint."""
    if j < 1 or k < 0:
        raise ConfigurationError("need j >= 1 and k >= 0", "j" if j < 1 else "k")
    tab = radius_table(failure_levels(HALFPLANE, j, k, plan, threads=threads), plan.radii)
    fit = fit_table(tab)
    return (fit, tab) if return_table else fit


def zr_samples(j: int, plan: ExperimentPlan, *, threads: int = 1) -> np.ndarray:
    """Array ``(trials, inner_samples)`` of first-failure indices of fresh paths."""
    return run_chunks(
        _zr_chunk,
        lambda s, c: (j, int(plan.inner_samples), plan.radii, plan.dt, plan.seed, s, c),
        plan.trials_per_radius, threads, chunk=max(1, min(100, plan.trials_per_radius)))


def _moment(z_counts: np.ndarray, n: int, lam: float) -> np.ndarray:
    """Per-trial estimate of ``Z^lam`` from ``z_counts`` successes out of ``n``.

    For integer ``lam`` the falling-factorial ratio is exactly unbiased; other
    exponents use the plug-in ``(c / n)^lam``.
    """
    c = z_counts.astype(np.float64)
    if float(lam).is_integer() and lam <= n:
        out = np.ones_like(c)
        for i in range(int(lam)):
            out *= (c - i) / (n - i)
        return np.maximum(out, 0.0)
    return (c / n) ** lam


def zr_table(samples: np.ndarray, radii, lam: float) -> RadiusTable:
    T, n = samples.shape
    vals, errs = [], []
    for m in range(len(radii)):
        c = np.count_nonzero(samples > m, axis=1)
        v = _moment(c, n, lam)
        vals.append(float(v.mean()))
        errs.append(float(v.std(ddof=1) / math.sqrt(T)))
    return RadiusTable(tuple(float(r) for r in radii), tuple(vals), tuple(errs), (T,) * len(radii))


@dataclass(frozen=True)
class ZrEstimate:
    fit: PowerLawFit
    table: RadiusTable
    jensen_fit: PowerLawFit | None
    jensen_z: float

    @property
    def jensen_ok(self) -> bool:
        return not abs(self.jensen_z) > 2.0


def estimate_zr_moment(j: int, lam: float, plan: ExperimentPlan, *, threads: int = 1,
                       samples: np.ndarray | None = None) -> ZrEstimate:
    """Fit of ``E[Z_R^lam] ~ R^{-xi(j, lam)}`` by nested sampling.

    The fit is repeated with the first quarter of the inner samples; the
    difference of the two slopes in units of its standard error is reported
    as ``jensen_z`` (plug-in moments are biased when ``lam`` is not an
    integer, and the bias grows as the inner sample shrinks).
    """
    if j < 1:
        raise ConfigurationError("j must be positive", "j")
    if not lam > 0:
        raise ConfigurationError("lam must be positive", "lam")
    if plan.inner_samples < 100:
        raise ConfigurationError("inner_samples must be at least 100", "inner_samples")
    if samples is None:
        samples = zr_samples(j, plan, threads=threads)
    tab = zr_table(samples, plan.radii, lam)
    fit = fit_table(tab)
    q = samples[:, : max(1, samples.shape[1] // 4)]
    try:
        jfit = fit_table(zr_table(q, plan.radii, lam))
        jz = (fit.slope - jfit.slope) / math.hypot(fit.stderr, jfit.stderr)
    except ConfigurationError:
        jfit, jz = None, float("nan")
    return ZrEstimate(fit, tab, jfit, jz)


# -- dimensions -----------------------------------------------------------------------

KINDS = ("frontier", "cut", "pioneer")


def _exceptional(kind: str, walk):
    """Points of the exceptional set of a walk (complex cell centres or sites)."""
    if kind == "frontier":
        c = frontier(walk_mask(walk)).cells()
        return c[:, 0] + 1j * c[:, 1]
    idx = cut_times(walk) if kind == "cut" else pioneer_times(walk)
    s = walk.sites[np.asarray(idx.indices, dtype=np.int64)]
    return s[:, 0] + 1j * s[:, 1]


def dimension_counts(kind: str, n: int, trials: int, seed, start: int = 0) -> np.ndarray:
    s = as_seed(seed)
    return np.array([len(_exceptional(kind, sample_srw(n, s.child(start + i))))
                     for i in range(trials)], dtype=np.float64)


@dataclass(frozen=True)
class DimensionEstimate:
    kind: str
    fit: PowerLawFit
    box: PowerLawFit | None
    counts: dict = field(default_factory=dict)

    @property
    def dimension(self) -> float:
        return 2.0 * self.fit.slope

    @property
    def stderr(self) -> float:
        return 2.0 * self.fit.stderr

    @property
    def box_dimension(self) -> float:
        return self.box.slope if self.box is not None else float("nan")


def estimate_dimension(kind: str, sizes, trials: int, seed, *, threads: int = 1) -> DimensionEstimate:
    """Dimension of an exceptional set from how its size grows with walk length.

    An ``n``-step walk has diameter about ``n^{1/2}``, so a set of dimension
    ``d`` has about ``n^{d/2}`` points; the reported dimension is twice the
    growth exponent of the mean count.  The box-counting slope of the set on
    one walk of the largest size is kept as a cross-check.
    """
    if kind not in KINDS:
        raise ConfigurationError(f"unknown kind {kind!r}", "kind")
    sizes = [int(n) for n in sizes]
    if len(sizes) < 3 or any(n < 2 or n & (n - 1) for n in sizes) or sorted(set(sizes)) != sizes:
        raise ConfigurationError("need at least 3 increasing powers of two", "sizes")
    if trials < 2:
        raise ConfigurationError("need at least 2 trials per size", "trials")
    s = as_seed(seed)
    pts, errs, counts = [], [], {}
    for i, n in enumerate(sizes):
        c = run_chunks(_dim_chunk, lambda st, ct, n=n, i=i: (kind, n, s.child(i), st, ct),
                       trials, threads, chunk=max(1, -(-trials // max(threads, 1))))
        counts[n] = c.tolist()
        mean = float(c.mean())
        if mean <= 0:
            warnings.warn(f"no {kind} points at size {n}; size dropped", RuntimeWarning,
                          stacklevel=2)
            continue
        pts.append((float(n), mean, trials))
        errs.append(max(float(c.std(ddof=1) / math.sqrt(trials)), 1e-12 * mean))
    fit = fit_power_law(pts, errs)
    box = None
    big = _exceptional(kind, sample_srw(sizes[-1], s.child(len(sizes))))
    side = math.sqrt(sizes[-1])
    scales = [2.0 ** e for e in range(1, 16) if 2.0 ** e <= side / 4]
    if len(big) >= 100 and len(scales) >= 3:
        box = box_dimension(big, scales)
    return DimensionEstimate(kind, PowerLawFit(-fit.slope, fit.stderr, fit.points,
                                               fit.r_squared, fit.intercept), box, counts)


def _dim_chunk(args):
    kind, n, seed, start, count = args
    return dimension_counts(kind, n, count, seed, start)
