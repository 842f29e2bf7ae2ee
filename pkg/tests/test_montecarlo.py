import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.stats import binom

from oracles import annulus_free_connected, segment_cells

from brownexp.errors import ConfigurationError
from brownexp.montecarlo import (
    DISCONNECT,
    HALFPLANE,
    NONINTERSECT,
    ExperimentPlan,
    RadiusTable,
    _add_wrap_cell,
    _dda,
    _dim_chunk,
    _levels_chunk,
    _moment,
    dimension_counts,
    estimate_dimension,
    estimate_nonintersection,
    estimate_zr_moment,
    failure_levels,
    fit_table,
    radius_table,
    run_chunks,
    zr_samples,
    zr_table,
)
from brownexp.rng import Seed

coord = st.floats(-15, 15, allow_nan=False)
SMALL = (2.0, 4.0, 8.0, 16.0)


def small_plan(trials=1000, seed=0, radii=SMALL, dt=0.04, inner=100):
    return ExperimentPlan(radii, trials, dt, inner, Seed(seed))


@given(coord, coord, coord, coord)
def test_dda_supercover(x0, y0, x1, y1):
    buf = np.empty((400, 2), dtype=np.int64)
    n = _dda(x0, y0, x1, y1, buf, 0)
    cells = [tuple(c) for c in buf[:n].tolist()]
    got = set(cells)
    assert segment_cells(x0, y0, x1, y1) <= got
    assert cells[0] == (math.floor(x0), math.floor(y0))
    assert cells[-1] == (math.floor(x1), math.floor(y1))
    for (a, b), (c, d) in zip(cells, cells[1:]):
        assert abs(a - c) + abs(b - d) == 1


@settings(max_examples=25)
@given(st.integers(0, 2**32), st.integers(2, 7), st.integers(4, 12))
def test_wrap_union_find_matches_bfs(seed, rows, sectors):
    rng = np.random.default_rng(seed)
    order = rng.permutation(rows * sectors)
    owner = np.zeros(rows * sectors, dtype=np.int8)
    par = np.zeros(rows * sectors, dtype=np.int64)
    off = np.zeros(rows * sectors, dtype=np.int64)
    wound = False
    occupied = []
    for c in order:
        owner[c] = 1
        wound |= _add_wrap_cell(int(c), rows, sectors, owner, par, off)
        occupied.append((int(c) // sectors, int(c) % sectors))
        assert wound == (not annulus_free_connected(occupied, 1.0, sectors, rows))


def test_plan_validation_and_roundtrip():
    p = small_plan()
    assert ExperimentPlan.from_dict(p.to_dict()) == p
    bad = [dict(radii=(2.0, 4.0)), dict(radii=(1.0, 2.0, 4.0)), dict(radii=(2.0, 8.0, 4.0)),
           dict(trials_per_radius=10), dict(dt=0.5), dict(dt=0.0), dict(inner_samples=0)]
    for kw in bad:
        with pytest.raises(ConfigurationError):
            ExperimentPlan(**kw)


def test_levels_deterministic_and_sliceable():
    p = small_plan(200)
    a = failure_levels(NONINTERSECT, 1, 1, p)
    b = failure_levels(NONINTERSECT, 1, 1, p)
    c = failure_levels(NONINTERSECT, 1, 1, p, start=150, count=50)
    assert np.array_equal(a, b) and np.array_equal(a[150:], c)
    assert a.min() >= 0 and a.max() <= len(SMALL)


def test_run_chunks_thread_independent():
    p = small_plan(200)

    def args(s, c):
        return (DISCONNECT, 1, 0, p.radii, p.dt, p.seed, s, c)

    one = run_chunks(_levels_chunk, args, 200, threads=1, chunk=50)
    two = run_chunks(_levels_chunk, args, 200, threads=2, chunk=50)
    assert np.array_equal(one, two)
    assert np.array_equal(one, run_chunks(_levels_chunk, args, 200, threads=1, chunk=200))


@given(st.lists(st.integers(0, 5), min_size=1, max_size=300))
def test_radius_table_monotone(levels):
    t = radius_table(np.array(levels), (2.0, 4.0, 8.0, 16.0, 32.0))
    assert all(a >= b for a, b in zip(t.values, t.values[1:]))
    assert all(e > 0 for e in t.stderrs)


def test_fit_table_drops():
    t = RadiusTable((2.0, 4.0, 8.0, 16.0, 32.0), (0.9, 0.25, 0.0625, 1 / 64, 0.0),
                    (0.01,) * 5, (100,) * 5)
    with pytest.warns(RuntimeWarning):
        f = fit_table(t)
    assert [p[0] for p in f.points] == [4.0, 8.0, 16.0]
    assert f.slope == pytest.approx(2.0)


@pytest.mark.parametrize("lam", [1, 2, 3])
@pytest.mark.parametrize("p", [0.1, 0.5, 0.83])
def test_moment_unbiased(lam, p):
    n = 20
    c = np.arange(n + 1)
    assert float((binom.pmf(c, n, p) * _moment(c, n, lam)).sum()) == pytest.approx(p**lam)


def test_exchangeable():
    a = radius_table(failure_levels(NONINTERSECT, 1, 2, small_plan(1000, 1)), SMALL)
    b = radius_table(failure_levels(NONINTERSECT, 2, 1, small_plan(1000, 2)), SMALL)
    for m in range(len(SMALL)):
        assert abs(a.values[m] - b.values[m]) < 2 * math.hypot(a.stderrs[m], b.stderrs[m])


def test_more_paths_fewer_successes():
    p11 = radius_table(failure_levels(NONINTERSECT, 1, 1, small_plan(1000, 3)), SMALL)
    p21 = radius_table(failure_levels(NONINTERSECT, 2, 1, small_plan(1000, 4)), SMALL)
    assert p21.values[-1] < p11.values[-1]
    d2 = radius_table(failure_levels(DISCONNECT, 2, 0, small_plan(1000, 5)), SMALL)
    d3 = radius_table(failure_levels(DISCONNECT, 3, 0, small_plan(1000, 6)), SMALL)
    assert d3.values[-1] < d2.values[-1]


def test_halfplane_single_path_probability():
    # one path from the upper unit semicircle stays in the half-plane to radius R
    # with probability close to the harmonic measure bound ~ c / R
    t = radius_table(failure_levels(HALFPLANE, 1, 0, small_plan(2000, 7)), SMALL)
    ratios = [a / b for a, b in zip(t.values, t.values[1:])]
    assert all(1.5 < r < 2.6 for r in ratios[1:])


def test_tower_rule():
    """E[Z_R] is the probability that one fresh path misses the packet."""
    z = estimate_zr_moment(1, 1.0, small_plan(300, 8, inner=100))
    d = estimate_nonintersection(1, 1, small_plan(3000, 9))
    assert abs(z.fit.slope - d.slope) < 2 * math.hypot(z.fit.stderr, d.stderr)


def test_zr_estimate_validation():
    with pytest.raises(ConfigurationError):
        estimate_zr_moment(0, 1.0, small_plan())
    with pytest.raises(ConfigurationError):
        estimate_zr_moment(1, 0.0, small_plan())
    with pytest.raises(ConfigurationError):
        estimate_zr_moment(1, 1.0, small_plan(inner=10))


def test_zr_synthetic_samples():
    # fresh paths independent of the packet, surviving radius r with probability r^-1/2
    rng = np.random.default_rng(0)
    radii = np.array(SMALL)
    u = rng.random((400, 100))
    levels = (u[:, :, None] < radii ** -0.5).sum(axis=2)
    est = estimate_zr_moment(1, 2.0, small_plan(400, inner=100), samples=levels)
    assert est.fit.slope == pytest.approx(1.0, abs=0.05)
    assert est.jensen_ok


def test_dimension_counts_and_validation():
    a = dimension_counts("cut", 256, 5, Seed(1))
    assert np.array_equal(a, _dim_chunk(("cut", 256, Seed(1), 0, 5)))
    with pytest.raises(ConfigurationError):
        estimate_dimension("corner", [64, 128, 256], 4, Seed(0))
    with pytest.raises(ConfigurationError):
        estimate_dimension("cut", [64, 100, 256], 4, Seed(0))
    with pytest.raises(ConfigurationError):
        estimate_dimension("cut", [64, 128, 256], 1, Seed(0))


def test_dimension_small_walks():
    e = estimate_dimension("frontier", [1024, 4096, 16384], 8, Seed(2))
    assert e.dimension == pytest.approx(2 * e.fit.slope)
    assert 1.0 < e.dimension < 1.7
    assert set(e.counts) == {1024, 4096, 16384}


def test_dt_refinement_stable():
    a = estimate_nonintersection(1, 1, small_plan(2000, 10, dt=0.04))
    b = estimate_nonintersection(1, 1, small_plan(2000, 11, dt=0.01))
    assert abs(a.slope - b.slope) < 2 * math.hypot(a.stderr, b.stderr)
