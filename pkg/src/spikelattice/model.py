"""Lattice windows, configurations and the elementary transition maps.

The state of the system is a finite set of active sites on a (possibly
truncated) window of the integer line.  Four pure maps act on it:

* ``apply_leak``  -- spontaneous reset of one site to quiescent,
* ``apply_spike`` -- an active site resets and activates its two neighbours,
* ``dual_apply_spike`` / ``dual_apply_leak`` -- the corresponding maps of
  the dual (branching-like) set process.

Everything here is value semantics: inputs are never mutated.
"""

from __future__ import annotations

from dataclasses import dataclass, field

FINITE = "finite"
HALF_RIGHT = "half_right"
HALF_LEFT = "half_left"
LINE = "line"

_KINDS = (FINITE, HALF_RIGHT, HALF_LEFT, LINE)


@dataclass(frozen=True)
class Window:
    """A nominal window on Z plus finite truncation bounds.

    ``kind`` selects the nominal window: a finite interval [lo, hi], a
    half line [lo, +inf) or (-inf, hi], or the whole line.  Semi-infinite
    and whole-line windows are simulated on the truncation [tlo, thi];
    the edges where the truncation cuts the nominal window are reported
    by :meth:`truncation_edges` and drive contamination detection.
    """

    kind: str
    lo: int | None
    hi: int | None
    tlo: int
    thi: int

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ValueError(f"unknown window kind {self.kind!r}")
        if self.tlo > self.thi:
            raise ValueError("empty truncation range")
        if self.kind == FINITE:
            if self.lo is None or self.hi is None or self.lo > self.hi:
                raise ValueError("finite window needs lo <= hi")
            if (self.tlo, self.thi) != (self.lo, self.hi):
                raise ValueError("finite window must equal its truncation")
        elif self.kind == HALF_RIGHT:
            if self.lo is None or self.hi is not None:
                raise ValueError("half_right window needs lo only")
            if self.tlo != self.lo:
                raise ValueError("half_right truncation must start at lo")
        elif self.kind == HALF_LEFT:
            if self.hi is None or self.lo is not None:
                raise ValueError("half_left window needs hi only")
            if self.thi != self.hi:
                raise ValueError("half_left truncation must end at hi")
        else:  # LINE
            if self.lo is not None or self.hi is not None:
                raise ValueError("line window has no nominal bounds")

    @classmethod
    def finite(cls, lo: int, hi: int) -> "Window":
        return cls(FINITE, lo, hi, lo, hi)

    @classmethod
    def half_right(cls, lo: int, thi: int) -> "Window":
        """Nominal [lo, +inf), truncated at thi."""
        return cls(HALF_RIGHT, lo, None, lo, thi)

    @classmethod
    def half_left(cls, hi: int, tlo: int) -> "Window":
        """Nominal (-inf, hi], truncated at tlo."""
        return cls(HALF_LEFT, None, hi, tlo, hi)

    @classmethod
    def line(cls, tlo: int, thi: int) -> "Window":
        """Whole-line proxy, truncated to [tlo, thi]."""
        return cls(LINE, None, None, tlo, thi)

    @property
    def n_sites(self) -> int:
        return self.thi - self.tlo + 1

    def sites(self) -> range:
        return range(self.tlo, self.thi + 1)

    def in_truncation(self, i: int) -> bool:
        return self.tlo <= i <= self.thi

    def in_nominal(self, i: int) -> bool:
        if self.lo is not None and i < self.lo:
            return False
        if self.hi is not None and i > self.hi:
            return False
        return True

    def contains(self, i: int) -> bool:
        """Site addressable by the simulated process."""
        return self.in_truncation(i) and self.in_nominal(i)

    def truncation_edges(self) -> tuple[int, ...]:
        """Truncation-edge sites: where the nominal window extends past
        the simulated range.  Empty for finite windows."""
        edges = []
        if self.lo is None:
            edges.append(self.tlo)
        if self.hi is None:
            edges.append(self.thi)
        return tuple(edges)

    def subset_of(self, other: "Window") -> bool:
        """Nominal containment, used by graph restriction."""
        olo = other.lo if other.lo is not None else -float("inf")
        ohi = other.hi if other.hi is not None else float("inf")
        slo = self.lo if self.lo is not None else -float("inf")
        shi = self.hi if self.hi is not None else float("inf")
        return olo <= slo and shi <= ohi


@dataclass(frozen=True)
class Configuration:
    """A finite set of active sites on a window."""

    active: frozenset[int]
    window: Window

    def __post_init__(self):
        object.__setattr__(self, "active", frozenset(self.active))
        for i in self.active:
            if not self.window.in_truncation(i):
                raise ValueError(f"active site {i} outside truncation bounds")

    def __contains__(self, i: int) -> bool:
        return i in self.active

    def __len__(self) -> int:
        return len(self.active)

    def is_empty(self) -> bool:
        return not self.active

    def replace(self, active) -> "Configuration":
        return Configuration(frozenset(active), self.window)


@dataclass(frozen=True)
class RateParams:
    """Leak rate gamma; the spike rate is fixed at 1."""

    gamma: float

    def __post_init__(self):
        if self.gamma < 0:
            raise ValueError("gamma must be non-negative")

    @property
    def total_per_site(self) -> float:
        return 1.0 + self.gamma


def _check_site(window: Window, i: int) -> None:
    if not window.in_truncation(i):
        raise ValueError(f"site {i} outside window truncation bounds")


def apply_leak(config: Configuration, i: int) -> Configuration:
    """Reset site i to quiescent.  No-op when i is already quiescent."""
    _check_site(config.window, i)
    if i not in config.active:
        return config
    return config.replace(config.active - {i})


def apply_spike(config: Configuration, i: int) -> Configuration:
    """Site i spikes: it resets and activates its in-window neighbours.

    Spiking a quiescent site is a contract violation (the generator
    weights spike transitions by the site's activity) and raises.
    """
    _check_site(config.window, i)
    if i not in config.active:
        raise ValueError(f"spike at inactive site {i}")
    active = set(config.active)
    active.discard(i)
    for nb in (i - 1, i + 1):
        if config.window.contains(nb):
            active.add(nb)
    return config.replace(active)


def dual_apply_leak(config: Configuration, i: int) -> Configuration:
    """Dual leak: remove i from the set."""
    return apply_leak(config, i)


def dual_apply_spike(config: Configuration, i: int) -> Configuration:
    """Dual spike event at site i.

    Union over singletons: a member equal to i is deleted, a member
    adjacent to i recruits i, and distant members are untouched.  The
    map is defined for every in-window i; it only changes sets within
    distance 1 of i.
    """
    _check_site(config.window, i)
    out = set()
    add_i = False
    for j in config.active:
        if j == i:
            continue
        out.add(j)
        if j == i - 1 or j == i + 1:
            add_i = True
    if add_i and config.window.contains(i):
        out.add(i)
    return config.replace(out)


def all_one(window: Window) -> Configuration:
    """Every site of the truncated window active."""
    return Configuration(frozenset(window.sites()), window)


def empty(window: Window) -> Configuration:
    return Configuration(frozenset(), window)
