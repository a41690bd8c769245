"""Space-time event diagrams and the processes read off them.

A realization carries, per site, the sorted times of spike events
(rate 1) and leak events (rate gamma) on [0, horizon].  The forward and
dual set processes are evolved by sweeping events in time order; an
independent explicit path search (:func:`reach`) implements the
valid-path reading of the same diagram and is kept as an oracle for the
sweep.  Time reversal of the diagram exchanges the two path semantics.

Per-site event streams are keyed by (seed, site, type), so realizations
generated on different windows from the same seed agree site by site:
coupled restrictions share their randomness by construction.
"""

from __future__ import annotations

import bisect
from dataclasses import dataclass

import numpy as np

from .model import (
    Configuration,
    RateParams,
    Window,
    empty,
)

DUMP_HEADER = "# spikelattice events v1"


def _zigzag(i: int) -> int:
    """Bijection Z -> N used to key per-site seed streams."""
    return 2 * i if i >= 0 else -2 * i - 1


@dataclass(frozen=True)
class GraphicalRealization:
    window: Window
    horizon: float
    spike_times: dict[int, np.ndarray]
    leak_times: dict[int, np.ndarray]
    seed: int

    def site_events(self, i: int) -> tuple[np.ndarray, np.ndarray]:
        return self.spike_times[i], self.leak_times[i]

    def merged_events(self) -> list[tuple[float, int, str]]:
        """All events as (time, site, kind) sorted by time."""
        out = []
        for i in self.window.sites():
            out.extend((t, i, "S") for t in self.spike_times[i])
            out.extend((t, i, "L") for t in self.leak_times[i])
        out.sort()
        return out


@dataclass(frozen=True)
class PathQuery:
    site_from: int
    t_from: float
    site_to: int
    t_to: float

    def __post_init__(self):
        if self.t_from > self.t_to:
            raise ValueError("path query must move forward in time")


@dataclass(frozen=True)
class ContaminationFlag:
    touched: bool
    first_touch_time: float | None = None

    def __post_init__(self):
        if self.touched != (self.first_touch_time is not None):
            raise ValueError("first_touch_time present iff touched")


def _site_stream(seed: int, site: int, typ: int, attempt: int):
    ss = np.random.SeedSequence(entropy=seed,
                                spawn_key=(_zigzag(site), typ, attempt))
    return np.random.default_rng(ss)


def generate(window: Window, params: RateParams, horizon: float,
             seed: int) -> GraphicalRealization:
    """Independent per-site Poisson event lists on [0, horizon].

    Identical (seed, window, params, horizon) give bit-identical
    realizations.  Simultaneous event times (a probability-zero event,
    guarded against floating-point coincidence) trigger regeneration
    from a fresh sub-seed.
    """
    if horizon <= 0:
        raise ValueError("horizon must be positive")
    if window.n_sites < 1:
        raise ValueError("zero-width window")
    for attempt in range(64):
        spikes = {}
        leaks = {}
        seen: list[float] = []
        for i in window.sites():
            for typ, rate, store in ((0, 1.0, spikes),
                                     (1, params.gamma, leaks)):
                if rate == 0.0:
                    store[i] = np.empty(0)
                    continue
                rng = _site_stream(seed, i, typ, attempt)
                count = rng.poisson(rate * horizon)
                times = np.sort(rng.uniform(0.0, horizon, size=count))
                store[i] = times
                seen.extend(times)
        if len(set(seen)) == len(seen):
            return GraphicalRealization(window, horizon, spikes, leaks, seed)
    raise RuntimeError("could not generate a collision-free realization")


def _check_initial(graph: GraphicalRealization, initial: Configuration):
    for i in initial.active:
        if not graph.window.in_truncation(i):
            raise ValueError(f"initial site {i} outside the realization")


def sweep(graph: GraphicalRealization, initial: Configuration, t: float,
          dual: bool = False):
    """Yield (time, active-set) after each event with time <= t."""
    if t > graph.horizon:
        raise ValueError("query time beyond the realization horizon")
    _check_initial(graph, initial)
    win = graph.window
    active = set(initial.active)
    for when, i, kind in graph.merged_events():
        if when > t:
            break
        if kind == "L":
            active.discard(i)
        elif dual:
            if (i - 1) in active or (i + 1) in active:
                if win.contains(i):
                    active.add(i)
            else:
                active.discard(i)
        else:
            if i in active:
                active.discard(i)
                for nb in (i - 1, i + 1):
                    if win.contains(nb):
                        active.add(nb)
        yield when, active


def evolve(graph: GraphicalRealization, initial: Configuration,
           t: float) -> Configuration:
    """Forward configuration at time t, by event sweep."""
    active = set(initial.active)
    for _, active in sweep(graph, initial, t):
        pass
    return Configuration(frozenset(active), graph.window)


def evolve_dual(graph: GraphicalRealization, initial: Configuration,
                t: float) -> Configuration:
    """Dual configuration at time t, by event sweep."""
    active = set(initial.active)
    for _, active in sweep(graph, initial, t, dual=True):
        pass
    return Configuration(frozenset(active), graph.window)


def reach(graph: GraphicalRealization, q: PathQuery,
          mode: str = "forward") -> bool:
    """Explicit valid-path search, independent of the event sweep.

    A path moves upward in time along site lines and sideways along
    arrows.  In forward mode arrows run from the spiking site to its
    neighbours and the rear side may not be crossed; in dual mode the
    arrows are reversed and the tip may not be crossed.  Leak marks
    block both.  Either way the event site's own line is interrupted at
    the event time, so the blocking times at a site are its own spike
    and leak times; only the permitted sideways moves differ.
    """
    if mode not in ("forward", "dual"):
        raise ValueError(f"unknown mode {mode!r}")
    win = graph.window
    if not (win.in_truncation(q.site_from) and win.in_truncation(q.site_to)):
        return False

    blocks: dict[int, list[float]] = {}
    for i in win.sites():
        merged = np.concatenate((graph.spike_times[i], graph.leak_times[i]))
        merged.sort()
        blocks[i] = merged.tolist()

    def next_block(i: int, u: float) -> float:
        b = blocks[i]
        k = bisect.bisect_right(b, u)
        return b[k] if k < len(b) else float("inf")

    stack = [(q.site_from, q.t_from)]
    seen = set()
    while stack:
        site, u = stack.pop()
        key = (site, bisect.bisect_right(blocks[site], u))
        if key in seen:
            continue
        seen.add(key)
        nb_time = next_block(site, u)
        if site == q.site_to and nb_time > q.t_to:
            return True
        if mode == "forward":
            # the only usable sideways move is this site's next spike
            if nb_time <= q.t_to and nb_time in graph.spike_times[site]:
                for d in (-1, 1):
                    if win.in_truncation(site + d):
                        stack.append((site + d, nb_time))
        else:
            # arrows come in from the neighbours' spike events; usable
            # while this site's own line is uninterrupted
            for d in (-1, 1):
                nb = site + d
                if not win.in_truncation(nb):
                    continue
                sp = graph.spike_times[nb]
                k = bisect.bisect_right(sp, u)
                while k < len(sp) and sp[k] <= q.t_to and sp[k] < nb_time:
                    stack.append((nb, sp[k]))
                    k += 1
    return False


def reverse(graph: GraphicalRealization, t: float) -> GraphicalRealization:
    """Diagram with time reversed on [0, t]; event sites keep their label."""
    if t > graph.horizon:
        raise ValueError("reversal time beyond the realization horizon")
    spikes = {}
    leaks = {}
    for i in graph.window.sites():
        for src, dst in ((graph.spike_times, spikes),
                         (graph.leak_times, leaks)):
            kept = src[i][src[i] <= t]
            dst[i] = np.sort(t - kept)
    return GraphicalRealization(graph.window, t, spikes, leaks, graph.seed)


def restrict(graph: GraphicalRealization, sub: Window) -> GraphicalRealization:
    """Sub-diagram on a contained window: same event times, fewer sites."""
    if not (sub.subset_of(graph.window)
            and graph.window.tlo <= sub.tlo and sub.thi <= graph.window.thi):
        raise ValueError("sub-window not contained in the realization")
    spikes = {i: graph.spike_times[i] for i in sub.sites()}
    leaks = {i: graph.leak_times[i] for i in sub.sites()}
    return GraphicalRealization(sub, graph.horizon, spikes, leaks, graph.seed)


def contamination(graph: GraphicalRealization, initial: Configuration,
                  t: float) -> ContaminationFlag:
    """Activity within distance 1 of a truncation edge during [0, t]."""
    edges = graph.window.truncation_edges()
    if not edges:
        return ContaminationFlag(False)
    near = set()
    for e in edges:
        near.update((e - 1, e, e + 1))

    def touches(active) -> bool:
        return any(i in near for i in active)

    if touches(initial.active):
        return ContaminationFlag(True, 0.0)
    for when, active in sweep(graph, initial, t):
        if touches(active):
            return ContaminationFlag(True, when)
    return ContaminationFlag(False)


def dump_events(graph: GraphicalRealization, fileobj) -> None:
    """One event per line: site, time, type in {S, L}."""
    fileobj.write(f"{DUMP_HEADER} window=[{graph.window.tlo},"
                  f"{graph.window.thi}] horizon={graph.horizon!r} "
                  f"seed={graph.seed}\n")
    for when, site, kind in graph.merged_events():
        fileobj.write(f"{site} {float(when)!r} {kind}\n")


def load_events(fileobj) -> GraphicalRealization:
    """Inverse of :func:`dump_events` (whole-line-proxy window)."""
    header = fileobj.readline()
    if not header.startswith(DUMP_HEADER):
        raise ValueError("not a spikelattice event dump")
    fields = dict(part.split("=") for part in header.split()[4:])
    tlo, thi = (int(x) for x in fields["window"].strip("[]").split(","))
    window = Window.line(tlo, thi)
    horizon = float(fields["horizon"])
    seed = int(fields["seed"])
    spikes = {i: [] for i in window.sites()}
    leaks = {i: [] for i in window.sites()}
    for line in fileobj:
        site_s, time_s, kind = line.split()
        (spikes if kind == "S" else leaks)[int(site_s)].append(float(time_s))
    return GraphicalRealization(
        window, horizon,
        {i: np.asarray(v) for i, v in spikes.items()},
        {i: np.asarray(v) for i, v in leaks.items()},
        seed)
