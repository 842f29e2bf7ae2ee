import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import special, stats

from brownexp.errors import DomainError
from brownexp.paths import (
    DrivingFunction,
    LatticeWalk,
    Path2D,
    circle_exit_fraction,
    sample_bessel_hit,
    sample_brownian_increments,
    sample_driving,
    sample_srw,
    sample_to_radius,
    svg_polyline,
    truncate_at_radius,
)
from brownexp.rng import Seed


def test_path_validation():
    with pytest.raises(ValueError):
        Path2D([0, 1], [0.0, 0.0])
    with pytest.raises(ValueError):
        Path2D([0, 1], [0.1, 0.2])
    with pytest.raises(ValueError):
        LatticeWalk([[0, 0], [1, 1]])
    with pytest.raises(ValueError):
        DrivingFunction(0.0, [0.0])


def test_path_csv_roundtrip(tmp_path):
    p = sample_brownian_increments(50, 0.01, Seed(1))
    p.to_csv(tmp_path / "p.csv")
    q = Path2D.from_csv(tmp_path / "p.csv")
    assert np.array_equal(p.points, q.points) and np.array_equal(p.times, q.times)


def test_increment_statistics():
    p = sample_brownian_increments(20000, 0.5, Seed(2))
    d = np.diff(p.points)
    # each coordinate is N(0, dt)
    for comp in (d.real, d.imag):
        assert stats.kstest(comp / math.sqrt(0.5), "norm").pvalue > 1e-3


@pytest.mark.parametrize("adaptive", [False, True])
def test_sample_to_radius_stops_on_circle(adaptive):
    for i in range(20):
        p = sample_to_radius(4.0, 0.01, Seed(3).child(i), adaptive=adaptive)
        assert abs(abs(p.points[0]) - 1.0) < 1e-12
        assert abs(abs(p.end) - 4.0) < 1e-9
        assert np.all(np.abs(p.points[:-1]) < 4.0)


def test_exit_angle_uniform():
    # by rotation invariance the exit point is uniform when the start is
    ang = [np.angle(sample_to_radius(3.0, 0.02, Seed(4).child(i), adaptive=True).end)
           for i in range(400)]
    assert stats.kstest((np.array(ang) + math.pi) / (2 * math.pi), "uniform").pvalue > 1e-3


def test_sample_to_radius_domain():
    with pytest.raises(DomainError):
        sample_to_radius(1.0, 0.01, Seed(0))
    with pytest.raises(DomainError):
        sample_to_radius(2.0, 0.01, Seed(0), start=0.5)


@given(st.complex_numbers(max_magnitude=0.99), st.complex_numbers(min_magnitude=1.0, max_magnitude=5))
def test_exit_fraction_lands_on_circle(a, b):
    s = circle_exit_fraction(a, b, 1.0)
    assert 0.0 <= s <= 1.0
    assert abs(abs(a + s * (b - a)) - 1.0) < 1e-9


def test_truncate():
    pts = np.array([0, 0.5, 1.5, 3.0], dtype=complex)
    p, t = truncate_at_radius(pts, np.arange(4.0), 1.0)
    assert p[-1] == pytest.approx(1.0) and t[-1] == pytest.approx(1.5)


@given(st.integers(0, 300), st.integers(0, 2**32))
def test_srw_steps(n, seed):
    w = sample_srw(n, Seed(seed))
    assert w.steps == n
    assert np.all(np.abs(np.diff(w.sites, axis=0)).sum(axis=1) == 1)


def test_srw_diffusive():
    ends = np.array([sample_srw(400, Seed(5).child(i)).sites[-1] for i in range(2000)])
    # E|S_n|^2 = n
    assert np.mean((ends ** 2).sum(axis=1)) == pytest.approx(400, rel=0.08)


def test_driving_variance():
    w = np.array([sample_driving(6.0, 10, 0.1, Seed(6).child(i)).values[-1] for i in range(4000)])
    assert w.var() == pytest.approx(6.0, rel=0.08)
    assert sample_driving(0.0, 5, 0.1, Seed(0)).values.tolist() == [0.0] * 6


def test_bessel_hit_gamma_law():
    # for dimension d < 2 the hitting time of 0 from y0 is y0^2 / (2 G), G ~ Gamma(1 - d/2)
    kappa, y0, h = 6.0, 1.0, 1.0
    d = 1 + 4 / kappa
    exact = special.gammaincc(1 - d / 2, y0 ** 2 / (2 * h))
    hits = [sample_bessel_hit(kappa, y0, 1e-4, h, Seed(7).child(i))[0] for i in range(3000)]
    p = np.mean(hits)
    se = math.sqrt(exact * (1 - exact) / len(hits))
    assert abs(p - exact) < 3 * se + 0.01


def test_bessel_no_hit_above_dimension_two():
    hits = [sample_bessel_hit(2.0, 1.0, 1e-3, 1.0, Seed(8).child(i))[0] for i in range(300)]
    assert np.mean(hits) < 0.02


def test_svg():
    svg = svg_polyline([np.array([0, 1 + 1j])])
    assert svg.startswith("<svg") and "polyline" in svg


def test_brownian_scaling():
    s = Seed(31)
    a = [abs(sample_brownian_increments(16, 0.01, s.child(i)).points[-1]) for i in range(2000)]
    b = [abs(sample_brownian_increments(16, 0.04, s.child(5000 + i)).points[-1]) / 2
         for i in range(2000)]
    assert stats.ks_2samp(a, b).pvalue > 0.01


def test_bessel_long_horizon():
    # dimension 3 stays away from 0 up to the absorbing-threshold artifact
    hits = [sample_bessel_hit(2.0, 1.0, 1e-3, 100.0, Seed(9).child(i))[0] for i in range(1000)]
    assert np.mean(hits) < 0.05
    # dimension 5/3 by time 100: the gamma law, approached from above as dt shrinks
    exact = special.gammaincc(1 / 6, 1 / 200)
    p = [np.mean([sample_bessel_hit(6.0, 1.0, dt, 100.0, Seed(10).child(i))[0]
                  for i in range(1000)]) for dt in (1e-2, 1e-3)]
    se = math.sqrt(exact * (1 - exact) / 1000)
    assert p[1] < p[0] and p[1] > exact - 3 * se and p[0] < 0.95
