"""Closed-form intersection exponents and the special functions used to check them.

All exponent functions are pure and total on their domains; arguments that are
negative or NaN raise :class:`~brownexp.errors.DomainError` eagerly.
"""

from __future__ import annotations

import itertools
import math
from collections.abc import Iterable, Sequence

from .errors import DomainError, NumericError

__all__ = [
    "xi_tilde",
    "xi_plane",
    "xi_j_lambda",
    "xi_hat_sle6",
    "xi_radial_sle6",
    "xi_tilde_sle6_two_sided",
    "hypergeometric_2f1",
    "cardy_crossing",
    "exponent_table",
    "identity_checks",
    "FUNCTIONS",
]


def _check_real(name: str, value: float, lower: float = 0.0) -> float:
    value = float(value)
    if math.isnan(value):
        raise DomainError(f"{name} is NaN")
    if value < lower:
        raise DomainError(f"{name}={value} < {lower}")
    return value


def _weights(values: Iterable[float]) -> list[float]:
    w = [_check_real(f"a[{i}]", v) for i, v in enumerate(values)]
    if not w:
        raise DomainError("at least one exponent argument is required")
    return w


def _root(a: float) -> float:
    return math.sqrt(24.0 * a + 1.0)


def xi_tilde(*a: float) -> float:
    """Half-plane exponent for packets of sizes ``a[0], ..., a[n-1]``.

    >>> xi_tilde(1/3, 1/3)
    1.0
    """
    w = _weights(a)
    s = math.fsum([_root(v) for v in w] + [-(len(w) - 1.0)])
    return (s * s - 1.0) / 24.0


def xi_plane(*a: float) -> float:
    """Whole-plane exponent; at least two arguments must be >= 1."""
    w = _weights(a)
    if sum(1 for v in w if v >= 1.0) < 2:
        raise DomainError("xi_plane needs at least two arguments >= 1")
    s = math.fsum([_root(v) for v in w] + [-float(len(w))])
    return (s * s - 4.0) / 48.0


def xi_j_lambda(j: int, lam: float) -> float:
    """Exponent of ``E[Z_R^lam]`` for a packet of ``j`` Brownian paths."""
    if isinstance(j, bool) or int(j) != j or j < 1:
        raise DomainError(f"j must be a positive integer, got {j!r}")
    lam = _check_real("lam", lam)
    s = _root(int(j)) + _root(lam) - 2.0
    return (s * s - 4.0) / 48.0


def xi_hat_sle6(lam: float) -> float:
    """One-sided rectangle exponent of chordal SLE(6)."""
    lam = _check_real("lam", lam)
    return (6.0 * lam + 1.0 + _root(lam)) / 6.0


def xi_radial_sle6(lam: float, *, return_valid: bool = False):
    """Annulus exponent of radial SLE(6).

    The closed form is established for ``lam >= 1``; smaller values are
    evaluated anyway.  With ``return_valid=True`` the result is the pair
    ``(value, lam >= 1)``.
    """
    lam = _check_real("lam", lam)
    value = (4.0 * lam + 1.0 + _root(lam)) / 8.0
    if return_valid:
        return value, lam >= 1.0
    return value


def xi_tilde_sle6_two_sided(lam1: float, lam2: float) -> float:
    lam1 = _check_real("lam1", lam1)
    lam2 = _check_real("lam2", lam2)
    s = _root(lam1) + 3.0 + _root(lam2)
    return (s * s - 1.0) / 24.0


# -- hypergeometric function -------------------------------------------------

def _is_nonpositive_int(z: float) -> bool:
    return z <= 0 and float(z).is_integer()


def _rgamma(z: float) -> float:
    """1/Gamma(z), zero at the poles."""
    if _is_nonpositive_int(z):
        return 0.0
    return 1.0 / math.gamma(z)


def _series_2f1(a, b, c, x, max_terms, rtol=1e-16):
    total = 1.0
    term = 1.0
    small = 0
    for k in range(max_terms):
        term *= (a + k) * (b + k) / ((c + k) * (k + 1.0)) * x
        total += term
        if term == 0.0:
            return total
        if abs(term) <= rtol * abs(total):
            small += 1
            if small >= 2:
                return total
        else:
            small = 0
    raise NumericError(
        f"2F1({a}, {b}; {c}; {x}) series did not converge in {max_terms} terms"
    )


def hypergeometric_2f1(a: float, b: float, c: float, x: float,
                       max_terms: int = 200_000) -> float:
    """Gauss hypergeometric function for real ``0 <= x <= 1``.

    Raw power series for ``x <= 1/2``.  Above that the ``x -> 1 - x``
    connection formula is used, except when ``c - a - b`` is an integer
    (the logarithmic case) where the raw series is summed directly.
    """
    for name, v in (("a", a), ("b", b), ("c", c), ("x", x)):
        if math.isnan(float(v)):
            raise DomainError(f"{name} is NaN")
    if _is_nonpositive_int(c):
        raise DomainError(f"c={c} is a nonpositive integer")
    if not 0.0 <= x <= 1.0:
        raise DomainError(f"x={x} outside [0, 1]")
    if x == 0.0:
        return 1.0
    s = c - a - b
    if x == 1.0:
        if s <= 0:
            raise NumericError(f"2F1 diverges at x=1 when c-a-b={s} <= 0")
        return math.gamma(c) * math.gamma(s) * _rgamma(c - a) * _rgamma(c - b)
    if x <= 0.5 or float(s).is_integer():
        return _series_2f1(a, b, c, x, max_terms)
    y = 1.0 - x
    t1 = math.gamma(c) * math.gamma(s) * _rgamma(c - a) * _rgamma(c - b)
    t2 = math.gamma(c) * math.gamma(-s) * _rgamma(a) * _rgamma(b)
    out = 0.0
    if t1 != 0.0:
        out += t1 * _series_2f1(a, b, 1.0 - s, y, max_terms)
    if t2 != 0.0:
        out += t2 * y ** s * _series_2f1(c - a, c - b, 1.0 + s, y, max_terms)
    return out


_CARDY_C = math.gamma(2.0 / 3.0) / (math.gamma(1.0 / 3.0) * math.gamma(4.0 / 3.0))


def cardy_crossing(x: float) -> float:
    """Cardy's hypergeometric crossing function, increasing from 0 to 1.

    For chordal SLE(6) started at ``x`` in (0, 1) this is the probability
    that the hull reaches ``[1, oo)`` before ``(-oo, 0]``.
    """
    x = float(x)
    if math.isnan(x) or not 0.0 <= x <= 1.0:
        raise DomainError(f"x={x} outside [0, 1]")
    if x == 0.0:
        return 0.0
    if x == 1.0:
        return 1.0
    v = _CARDY_C * x ** (1.0 / 3.0) * hypergeometric_2f1(1 / 3, 2 / 3, 4 / 3, x)
    return min(1.0, max(0.0, v))


# -- tables and identities ---------------------------------------------------

def exponent_table() -> dict:
    """The three special exponents and the dimensions that follow from them."""
    x20 = xi_j_lambda(2, 0)
    x11 = xi_j_lambda(1, 1)
    x10 = xi_j_lambda(1, 0)
    return {
        "exponents": {"xi(2,0)": x20, "xi(1,1)": x11, "xi(1,0)": x10},
        "dimensions": {
            "frontier": 2.0 - x20,
            "cut_points": 2.0 - x11,
            "pioneer_points": 2.0 - x10,
        },
    }


def _check(name, lhs, rhs, tol):
    err = abs(lhs - rhs)
    return {"name": name, "lhs": lhs, "rhs": rhs, "abs_err": err,
            "tol": tol, "ok": bool(err <= tol)}


def identity_checks(lams: Sequence[float] | None = None,
                    cascade_samples: int = 200, seed: int = 0) -> list[dict]:
    """Evaluate every closed-form identity; one dict per check."""
    import numpy as np

    if lams is None:
        lams = [k / 20.0 for k in range(0, 101)]
    rng = np.random.default_rng(seed)
    out = []

    for _ in range(cascade_samples):
        a = rng.uniform(0.0, 5.0, size=4)
        out.append(_check("casc1", xi_tilde(*a),
                          xi_tilde(a[0], a[1], xi_tilde(a[2], a[3])), 1e-12))
        p = rng.uniform(1.0, 5.0, size=2)
        q = rng.uniform(0.0, 5.0, size=2)
        out.append(_check("casc2", xi_plane(p[0], p[1], q[0], q[1]),
                          xi_plane(p[0], p[1], xi_tilde(q[0], q[1])), 1e-12))
        out.append(_check("casc2_single", xi_plane(p[0], p[1], q[0]),
                          xi_plane(p[0], p[1], xi_tilde(q[0])), 1e-12))
        for perm in itertools.permutations(range(3)):
            out.append(_check("symmetry_tilde", xi_tilde(*a[:3]),
                              xi_tilde(*a[list(perm)]), 1e-14))
            v = [p[0], p[1], q[0]]
            out.append(_check("symmetry_plane", xi_plane(*v),
                              xi_plane(*[v[i] for i in perm]), 1e-14))

    for lam in lams:
        out.append(_check("hat_vs_tilde_third", xi_hat_sle6(lam),
                          xi_tilde(1 / 3, lam), 1e-12))
        out.append(_check("tilde_one_vs_hat_hat", xi_tilde(1.0, lam),
                          xi_hat_sle6(xi_hat_sle6(lam)), 1e-12))
        for lam2 in lams[::10]:
            out.append(_check("two_sided_vs_tilde",
                              xi_tilde_sle6_two_sided(lam, lam2),
                              xi_tilde(lam, 1.0, lam2), 1e-12))
        if lam >= 1.0:
            out.append(_check("radial_vs_plane", xi_radial_sle6(lam),
                              xi_j_lambda(1, lam), 1e-12))
            for j in (1, 2, 3):
                out.append(_check("j_lambda_vs_plane", xi_j_lambda(j, lam),
                                  xi_plane(j, lam), 1e-14))

    out.append(_check("dim_frontier", 2 - xi_j_lambda(2, 0), 4 / 3, 1e-15))
    out.append(_check("dim_cut", 2 - xi_j_lambda(1, 1), 3 / 4, 1e-15))
    out.append(_check("dim_pioneer", 2 - xi_j_lambda(1, 0), 7 / 4, 1e-15))

    prev = -1.0
    for k in range(1, 10):
        x = k / 10.0
        out.append(_check("cardy_symmetry",
                          cardy_crossing(x) + cardy_crossing(1 - x), 1.0, 1e-10))
    for k in range(0, 201):
        v = cardy_crossing(k / 200.0)
        out.append(_check("cardy_increasing", float(v > prev), 1.0, 0.0))
        prev = v
    return out


# exposed through `brownexp formulas eval`
FUNCTIONS = {
    "xi_tilde": xi_tilde,
    "xi_plane": xi_plane,
    "xi_j_lambda": xi_j_lambda,
    "xi_hat_sle6": xi_hat_sle6,
    "xi_radial_sle6": xi_radial_sle6,
    "xi_tilde_sle6_two_sided": xi_tilde_sle6_two_sided,
    "hypergeometric_2f1": hypergeometric_2f1,
    "cardy_crossing": cardy_crossing,
}
