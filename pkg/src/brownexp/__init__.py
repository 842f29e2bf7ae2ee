"""Brownian intersection exponents: closed forms and Monte Carlo checks.

Closed-form exponents live in :mod:`brownexp.formulas`; samplers in
:mod:`brownexp.paths`; path geometry in :mod:`brownexp.geometry`; conformal
modulus in :mod:`brownexp.extremal`; chordal and radial Loewner evolution in
:mod:`brownexp.loewner` and :mod:`brownexp.radial`; site percolation in
:mod:`brownexp.percolation`; exponent estimators in
:mod:`brownexp.montecarlo`; the command line in :mod:`brownexp.cli`.
"""

__version__ = "0.1.0"

from .errors import (  # noqa: E402
    ConfigurationError,
    DomainError,
    NonTermination,
    NumericError,
    SchemaError,
    Swallowed,
)
from .rng import Seed  # noqa: E402

__all__ = [
    "__version__",
    "Seed",
    "ConfigurationError",
    "DomainError",
    "NonTermination",
    "NumericError",
    "SchemaError",
    "Swallowed",
]
