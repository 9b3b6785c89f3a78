"""Nilpotent extension groups and heat kernel measures (C++ core with Python bindings)."""

import json as _json

from . import _core
from ._core import (
    DomainError,
    ExtensionSpec,
    ShapeError,
    SpecError,
    __version__,
    bracket,
    distance_bounds,
    inverse,
    multiply,
    ricci,
    simulate,
    zoo,
)

__all__ = [
    "DomainError",
    "ExtensionSpec",
    "ShapeError",
    "SpecError",
    "__version__",
    "bracket",
    "distance_bounds",
    "inverse",
    "multiply",
    "norms",
    "ricci",
    "simulate",
    "validate",
    "verify",
    "zoo",
]


def validate(spec, tol=1e-9):
    """Validation report as a dict."""
    return _json.loads(_core.validate(spec, tol))


def norms(spec, restarts=32):
    """Norm estimates and inequality checks as a dict."""
    return _json.loads(_core.norms(spec, restarts))


def verify(spec, test, **kwargs):
    """Monte Carlo check ('inversion', 'logsob', 'quasi' or 'convergence') as a dict."""
    return _json.loads(_core.verify(spec, test, **kwargs))
