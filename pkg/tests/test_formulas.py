import math

import mpmath
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from brownexp import formulas as F
from brownexp.errors import DomainError, NumericError

lam = st.floats(0.0, 5.0, allow_nan=False)
big = st.floats(1.0, 5.0, allow_nan=False)


def test_special_values():
    # published closed-form values
    assert F.xi_j_lambda(2, 0) == pytest.approx(2 / 3, abs=1e-15)
    assert F.xi_j_lambda(1, 1) == pytest.approx(5 / 4, abs=1e-15)
    assert F.xi_j_lambda(1, 0) == pytest.approx(1 / 4, abs=1e-15)
    assert F.xi_hat_sle6(0) == pytest.approx(1 / 3, abs=1e-15)
    assert F.xi_tilde(1) == pytest.approx(1.0, abs=1e-15)
    assert F.xi_tilde(1 / 3, 1 / 3) == pytest.approx(1.0, abs=1e-15)


def test_derived_values():
    # independent arithmetic on the closed forms
    assert F.xi_tilde(1, 1) == pytest.approx(10 / 3, abs=1e-14)
    assert F.xi_j_lambda(1, 2) == pytest.approx(2.0, abs=1e-14)
    assert F.xi_hat_sle6(1) == pytest.approx(2.0, abs=1e-14)
    assert F.xi_radial_sle6(1) == pytest.approx(5 / 4, abs=1e-14)
    assert F.xi_plane(1, 1) == pytest.approx(5 / 4, abs=1e-14)


def test_exponent_table():
    t = F.exponent_table()
    assert t["dimensions"] == pytest.approx(
        {"frontier": 4 / 3, "cut_points": 3 / 4, "pioneer_points": 7 / 4}, abs=1e-15)


def test_identity_suite_passes():
    checks = F.identity_checks()
    bad = [c for c in checks if not c["ok"]]
    assert not bad, bad[:3]
    names = {c["name"] for c in checks}
    assert {"casc1", "casc2", "hat_vs_tilde_third", "tilde_one_vs_hat_hat",
            "two_sided_vs_tilde", "radial_vs_plane", "cardy_symmetry"} <= names


@given(st.lists(lam, min_size=1, max_size=4))
def test_tilde_symmetric(a):
    assert F.xi_tilde(*a) == pytest.approx(F.xi_tilde(*reversed(a)), abs=1e-12)


@given(lam, lam, lam, lam)
def test_casc1(a, b, c, d):
    assert F.xi_tilde(a, b, c, d) == pytest.approx(F.xi_tilde(a, b, F.xi_tilde(c, d)), abs=1e-11)


@given(big, big, lam, lam)
def test_casc2(a, b, c, d):
    assert F.xi_plane(a, b, c, d) == pytest.approx(F.xi_plane(a, b, F.xi_tilde(c, d)), abs=1e-11)


@given(lam, lam)
def test_tilde_monotone(a, b):
    lo, hi = sorted((a, b))
    assert F.xi_tilde(lo) <= F.xi_tilde(hi) + 1e-15
    assert F.xi_j_lambda(1, lo) <= F.xi_j_lambda(1, hi) + 1e-15


@given(lam)
def test_sle_identities(x):
    assert F.xi_hat_sle6(x) == pytest.approx(F.xi_tilde(1 / 3, x), abs=1e-12)
    assert F.xi_tilde(1, x) == pytest.approx(F.xi_hat_sle6(F.xi_hat_sle6(x)), abs=1e-12)


def test_radial_validity_flag():
    v, ok = F.xi_radial_sle6(0.5, return_valid=True)
    assert not ok and v == pytest.approx((2 + 1 + math.sqrt(13)) / 8)
    assert F.xi_radial_sle6(2, return_valid=True)[1]


@pytest.mark.parametrize("call", [
    lambda: F.xi_tilde(),
    lambda: F.xi_tilde(-0.1),
    lambda: F.xi_tilde(float("nan")),
    lambda: F.xi_plane(1, 0.5),
    lambda: F.xi_j_lambda(0, 1),
    lambda: F.xi_j_lambda(1.5, 1),
    lambda: F.xi_hat_sle6(-1),
    lambda: F.cardy_crossing(1.5),
    lambda: F.hypergeometric_2f1(1, 1, -2, 0.5),
    lambda: F.hypergeometric_2f1(1, 1, 2, -0.1),
])
def test_domain_errors(call):
    with pytest.raises(DomainError):
        call()


def test_2f1_diverges_at_one():
    with pytest.raises(NumericError):
        F.hypergeometric_2f1(1, 1, 2, 1.0)


@pytest.mark.parametrize("a,b,c", [(1 / 3, 2 / 3, 4 / 3), (0.5, 0.5, 1.0), (1.0, 1.0, 2.0),
                                   (0.2, 1.7, 3.3), (-2.0, 1.5, 2.5), (0.3, 0.4, 0.5)])
@pytest.mark.parametrize("x", [0.0, 0.1, 0.45, 0.5, 0.55, 0.8, 0.97, 0.999])
def test_2f1_matches_mpmath(a, b, c, x):
    ref = float(mpmath.hyp2f1(a, b, c, x))
    assert F.hypergeometric_2f1(a, b, c, x) == pytest.approx(ref, rel=1e-10, abs=1e-13)


def test_2f1_at_one_gauss():
    ref = float(mpmath.hyp2f1(0.2, 0.3, 1.5, 1))
    assert F.hypergeometric_2f1(0.2, 0.3, 1.5, 1.0) == pytest.approx(ref, rel=1e-12)


def _cardy_oracle(x):
    # integral form: int_0^x t^{-2/3} (1-t)^{-2/3} dt / B(1/3, 1/3)
    return float(mpmath.betainc(1 / 3, 1 / 3, 0, x, regularized=True))


@pytest.mark.parametrize("x", [1e-8, 0.01, 0.1, 0.25, 0.5, 0.75, 0.9, 0.99, 1 - 1e-9])
def test_cardy_against_integral(x):
    assert F.cardy_crossing(x) == pytest.approx(_cardy_oracle(x), abs=1e-13)


@given(st.floats(1e-4, 1 - 1e-4))
def test_cardy_symmetry(x):
    # away from the ends, where 1 - x is exact enough
    assert F.cardy_crossing(x) + F.cardy_crossing(1 - x) == pytest.approx(1.0, abs=1e-12)


def test_cardy_monotone_grid():
    v = np.array([F.cardy_crossing(k / 500) for k in range(501)])
    assert np.all(np.diff(v) > 0)
    assert v[0] == 0.0 and v[-1] == 1.0
