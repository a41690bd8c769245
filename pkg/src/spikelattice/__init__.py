"""Exact and Monte Carlo simulation toolkit for a one-dimensional
spiking lattice particle system with leak rate gamma."""

__version__ = "0.1.0"

from .model import (  # noqa: F401
    Configuration,
    RateParams,
    Window,
    all_one,
    apply_leak,
    apply_spike,
    dual_apply_leak,
    dual_apply_spike,
    empty,
)
