"""Semiclassical WKB expansions and spectral checks for 2D magnetic Schrodinger operators."""

from .series import (
    Series1,
    Series2,
    complexify,
    realify,
    shift_variable,
    substitute_curve,
)

__version__ = "0.1.0"
