import math

import mpmath
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from brownexp.errors import ConfigurationError, DomainError
from brownexp.extremal import (
    INFINITE,
    L_of_x,
    Quadrilateral,
    annulus_L,
    annulus_quadrilateral,
    is_infinite,
    modulus_numeric,
    rectangle_L,
    rectangle_quadrilateral,
    x_of_L,
)
from brownexp.geometry import GridMask


@pytest.mark.parametrize("nx,ny,aspect", [(4, 4, 1.0), (10, 3, 1.0), (5, 8, 0.5), (7, 7, 2.0)])
def test_rectangle_exact(nx, ny, aspect):
    # potential is linear, so the discrete energy is exact
    q = rectangle_quadrilateral(nx, ny, aspect)
    assert modulus_numeric(q) == pytest.approx(rectangle_L(nx, ny * aspect), rel=1e-10)


@pytest.mark.parametrize("r", [0.5, 0.25, 0.1])
def test_annulus_logpolar_exact(r):
    q = annulus_quadrilateral(r, 64, "logpolar")
    assert modulus_numeric(q) == pytest.approx(annulus_L(r), rel=1e-9)


def test_annulus_cartesian_converges():
    r = 0.3
    errs = [abs(modulus_numeric(annulus_quadrilateral(r, n)) - annulus_L(r)) for n in (16, 32, 64)]
    assert errs[2] < errs[0]
    assert errs[2] / annulus_L(r) < 0.03


def test_annulus_L_value():
    assert annulus_L(math.exp(-2)) == pytest.approx(1.0)
    with pytest.raises(DomainError):
        annulus_L(1.0)


def mp_L(x):
    return float(mpmath.pi * mpmath.ellipk(x) / mpmath.ellipk(1 - x))


@given(st.floats(1e-6, 1 - 1e-6))
def test_L_of_x_elliptic_oracle(x):
    assert L_of_x(x) == pytest.approx(mp_L(x), rel=1e-10)


@given(st.floats(1e-4, 1 - 1e-4))
def test_L_duality(x):
    assert L_of_x(x) * L_of_x(1 - x) == pytest.approx(math.pi**2, rel=1e-9)


@given(st.floats(1e-4, 0.999), st.floats(1e-4, 0.999))
def test_L_monotone(a, b):
    if a < b:
        assert L_of_x(a) <= L_of_x(b)


def test_L_half():
    assert L_of_x(0.5) == pytest.approx(math.pi, rel=1e-12)


@given(st.floats(0.05, 12))
def test_x_of_L_inverse(L):
    assert L_of_x(x_of_L(L)) == pytest.approx(L, rel=1e-8)


@pytest.mark.parametrize("x", [0.1, 0.5, 0.8])
def test_L_numeric_matches_elliptic(x):
    assert L_of_x(x, "numeric", n=64) == pytest.approx(L_of_x(x), rel=0.01)


def test_L_errors():
    with pytest.raises(DomainError):
        L_of_x(0.0)
    with pytest.raises(ConfigurationError):
        L_of_x(0.5, "magic")
    with pytest.raises(DomainError):
        x_of_L(-1)


def test_infinite_when_blocked():
    dom = np.ones((6, 5), dtype=bool)
    dom[3, :] = False
    q = Quadrilateral(GridMask(1.0, (0, 0), dom),
                      GridMask.from_cells([(-1, y) for y in range(5)]),
                      GridMask.from_cells([(6, y) for y in range(5)]))
    v = modulus_numeric(q)
    assert v is INFINITE and is_infinite(v)
    assert not is_infinite(1e300)


def test_quadrilateral_validation():
    dom = GridMask(1.0, (0, 0), np.ones((3, 3), dtype=bool))
    a = GridMask.from_cells([(-1, 0)])
    with pytest.raises(ConfigurationError):
        Quadrilateral(dom, a, a)
    with pytest.raises(ConfigurationError):
        Quadrilateral(dom, a, GridMask.from_cells([(1, 1)]))
    with pytest.raises(ConfigurationError):
        Quadrilateral(dom, a, GridMask.from_cells([(9, 9)]))
    with pytest.raises(ConfigurationError):
        Quadrilateral(dom, GridMask.from_cells([]), a)


def test_quadrilateral_file_roundtrip(tmp_path):
    q = annulus_quadrilateral(0.4, 32, "logpolar")
    q.to_files(tmp_path / "q")
    q2 = Quadrilateral.from_files(tmp_path / "q")
    assert q2.period == q.period and q2.aspect == pytest.approx(q.aspect)
    assert modulus_numeric(q2) == pytest.approx(modulus_numeric(q), rel=1e-12)


def test_rectangle_200_by_100():
    q = rectangle_quadrilateral(200, 100)
    assert modulus_numeric(q) == pytest.approx(2 * math.pi, rel=0.01)


def test_rectangle_reciprocity():
    a = modulus_numeric(rectangle_quadrilateral(30, 20))
    b = modulus_numeric(rectangle_quadrilateral(20, 30))
    assert a * b == pytest.approx(math.pi**2, rel=0.02)


def test_annulus_half_refinement():
    a = modulus_numeric(annulus_quadrilateral(0.5, 100))
    b = modulus_numeric(annulus_quadrilateral(0.5, 200))
    assert b == pytest.approx(0.5 * math.log(2), rel=0.02)
    assert abs(a - b) / b < 0.01


@given(st.integers(0, 2**32))
def test_obstacles_never_decrease_L(seed):
    rng = np.random.default_rng(seed)
    nx, ny = 12, 8
    dom = np.ones((nx, ny), dtype=bool)
    a = GridMask.from_cells([(-1, y) for y in range(ny)])
    b = GridMask.from_cells([(nx, y) for y in range(ny)])
    prev = modulus_numeric(Quadrilateral(GridMask(1.0, (0, 0), dom.copy()), a, b))
    for _ in range(6):
        # interior columns only, so the side arcs stay attached
        dom[rng.integers(1, nx - 1), rng.integers(ny)] = False
        v = modulus_numeric(Quadrilateral(GridMask(1.0, (0, 0), dom.copy()), a, b))
        if is_infinite(v):
            break
        assert v >= prev - 1e-9
        prev = v


def test_L_of_x_ordering_and_limits():
    xs = np.linspace(0.01, 0.99, 25)
    Ls = [L_of_x(x) for x in xs]
    assert all(a < b for a, b in zip(Ls, Ls[1:]))
    assert L_of_x(1e-12) < 0.5 and L_of_x(1 - 1e-12) > 20
