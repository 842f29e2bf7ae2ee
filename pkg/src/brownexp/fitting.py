"""Log-log regression shared by every exponent experiment."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError

__all__ = ["PowerLawFit", "fit_power_law", "binomial_stderr"]


@dataclass(frozen=True)
class PowerLawFit:
    """Result of regressing ``log value`` on ``log scale`` (or on ``scale``).

    ``slope`` follows the decay convention: ``value ~ scale**(-slope)``, or
    ``value ~ exp(-slope * scale)`` for fits with ``log_scale=False``.
    """

    slope: float
    stderr: float
    points: list = field(default_factory=list)
    r_squared: float = float("nan")
    intercept: float = 0.0
    log_scale: bool = True

    def to_dict(self) -> dict:
        return {
            "slope": self.slope,
            "stderr": self.stderr,
            "intercept": self.intercept,
            "r_squared": self.r_squared,
            "log_scale": self.log_scale,
            "points": [
                {"scale": s, "value": v, "n_samples": n} for s, v, n in self.points
            ],
        }

    @classmethod
    def from_dict(cls, d) -> "PowerLawFit":
        pts = [(p["scale"], p["value"], p["n_samples"]) for p in d["points"]]
        return cls(d["slope"], d["stderr"], pts, d["r_squared"], d["intercept"],
                   d.get("log_scale", True))


def binomial_stderr(p: float, n: int) -> float:
    return math.sqrt(max(p * (1.0 - p), 0.0) / n) if n > 0 else float("nan")


def fit_power_law(points, stderr=None, *, log_scale: bool = True) -> PowerLawFit:
    """Least-squares slope of ``log value`` against ``log scale``.

    ``points`` holds ``(scale, value)`` or ``(scale, value, n_samples)``
    tuples with strictly increasing scales and positive values.  When
    ``stderr`` (one entry per point, standard error of ``value``) is given
    the fit is weighted by the inverse variance of ``log value``; the slope
    error is then inflated by ``sqrt(chi2 / dof)`` whenever that exceeds one.
    """
    pts = []
    for p in points:
        if len(p) == 2:
            pts.append((float(p[0]), float(p[1]), 0))
        else:
            pts.append((float(p[0]), float(p[1]), int(p[2])))
    if len(pts) < 3:
        raise ConfigurationError("a power-law fit needs at least 3 points")
    s = np.array([p[0] for p in pts])
    v = np.array([p[1] for p in pts])
    if np.any(np.diff(s) <= 0):
        raise ConfigurationError("scales must increase strictly")
    if np.any(~(v > 0)):
        raise ConfigurationError("power-law fit rejects nonpositive values")
    x = np.log(s) if log_scale else s
    y = np.log(v)
    weighted = stderr is not None
    if weighted:
        se = np.asarray(stderr, dtype=float)
        if se.shape != v.shape or np.any(~(se > 0)):
            raise ConfigurationError("stderr must be positive, one per point")
        with np.errstate(over="ignore"):
            w = (v / se) ** 2
        if not np.all(np.isfinite(w)):
            # exact (zero-variance) points: weights carry no information
            weighted = False
            w = np.ones_like(y)
    else:
        w = np.ones_like(y)
    sw = w.sum()
    xm = (w * x).sum() / sw
    ym = (w * y).sum() / sw
    sxx = (w * (x - xm) ** 2).sum()
    sxy = (w * (x - xm) * (y - ym)).sum()
    b = sxy / sxx
    a = ym - b * xm
    resid = y - (a + b * x)
    chi2 = float((w * resid**2).sum())
    dof = len(pts) - 2
    if weighted:
        se_b = math.sqrt(1.0 / sxx) * max(1.0, math.sqrt(chi2 / dof))
    else:
        se_b = math.sqrt(chi2 / dof / sxx)
    syy = (w * (y - ym) ** 2).sum()
    r2 = 1.0 - chi2 / syy if syy > 0 else 1.0
    return PowerLawFit(float(-b), float(se_b), pts, float(r2), float(a), log_scale)
