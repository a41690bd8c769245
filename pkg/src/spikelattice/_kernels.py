"""Numba kernels for the Monte Carlo engines.

All randomness comes from a counter-based splittable scheme so that runs
are bit-reproducible regardless of worker count:

* sub-streams are keyed by ``(master_seed, replica_index, stream_id)``;
* the three words are mixed by splitmix64 finalizers into the four state
  words of a xoshiro256++ generator;
* doubles are the top 53 bits of the next 64-bit output; exponentials
  use inversion, ``-log1p(-u)``.

Each replica owns its streams, so batches parallelize over replicas with
output that does not depend on scheduling.

Sites inside kernels are indexed 0..n-1 over the window truncation range.
``left_open`` / ``right_open`` mark truncation edges (the nominal window
continues past the simulated range there).  Two contamination notions are
tracked where needed:

* activity-based: an active site within distance 1 of a truncation edge
  (used for processes started from sparse configurations);
* an exact uncertainty front ``u``: the set of sites where the truncated
  sweep may differ from the untruncated process on the same event field.
  Truncation-edge sites are permanently uncertain (an unseen neighbour
  outside the range can activate them at any time); uncertainty spreads
  to the neighbours of an uncertain spiking site and is erased by leaks,
  by spikes at the site itself, and by certainly-active neighbours.
"""

import numpy as np
from numba import njit, prange

U64 = np.uint64

SPIKE = 0
LEAK = 1


# ---------------------------------------------------------------------------
# splittable RNG: splitmix64 seeding + xoshiro256++
# ---------------------------------------------------------------------------

@njit(inline="always", cache=True)
def _mix64(z):
    z = (z ^ (z >> U64(30))) * U64(0xBF58476D1CE4E5B9)
    z = (z ^ (z >> U64(27))) * U64(0x94D049BB133111EB)
    return z ^ (z >> U64(31))


@njit(inline="always", cache=True)
def _rotl(x, k):
    return (x << U64(k)) | (x >> U64(64 - k))


@njit(cache=True)
def rng_init(s, master, replica, stream):
    """Seed a 4-word xoshiro256++ state from (master, replica, stream)."""
    g = U64(0x9E3779B97F4A7C15)
    z = U64(master) * U64(0xD1B54A32D192ED03)
    z ^= _mix64(U64(replica) + g)
    z ^= _mix64(U64(stream) * U64(0x8CB92BA72F3D8DD7) + g)
    for i in range(4):
        z = z + g
        s[i] = _mix64(z)
    if s[0] | s[1] | s[2] | s[3] == U64(0):
        s[0] = U64(1)


@njit(inline="always", cache=True)
def rng_u64(s):
    r = _rotl(s[0] + s[3], 23) + s[0]
    t = s[1] << U64(17)
    s[2] ^= s[0]
    s[3] ^= s[1]
    s[1] ^= s[2]
    s[0] ^= s[3]
    s[2] ^= t
    s[3] = _rotl(s[3], 45)
    return r


@njit(inline="always", cache=True)
def rng_double(s):
    return (rng_u64(s) >> U64(11)) * (1.0 / 9007199254740992.0)


@njit(inline="always", cache=True)
def rng_exp(s):
    return -np.log1p(-rng_double(s))


def derive_token(master: int, replica: int) -> int:
    """Python-level view of the sub-seed mix, recorded for replay."""
    s = np.empty(4, dtype=np.uint64)
    rng_init(s, U64(master), U64(replica), U64(0))
    return int(s[0])


# stream ids (third RNG key word)
_STREAM_GILLESPIE = 0
_STREAM_SUBSETS = 7
_STREAM_EVENTS_BASE = 16  # + 2*site + type, attempt counter in high bits


# ---------------------------------------------------------------------------
# event-field generation (homogeneous Poisson per site and type)
# ---------------------------------------------------------------------------

@njit(cache=True)
def _count_site_events(s, horizon, rate):
    t = rng_exp(s) / rate
    k = 0
    while t <= horizon:
        k += 1
        t += rng_exp(s) / rate
    return k


@njit(cache=True)
def gen_events(master, replica, n, gamma, horizon):
    """Sorted event field for one replica on n sites.

    Returns (times, sites, types) sorted by time.  Per-site streams are
    keyed by (site, type), so restrictions of the same (master, replica)
    field to sub-windows share randomness site by site.  Event times are
    almost surely distinct; on a floating-point collision the whole
    field is regenerated from a bumped attempt counter.
    """
    attempt = U64(0)
    while True:
        total = 0
        counts = np.empty(2 * n, dtype=np.int64)
        s = np.empty(4, dtype=np.uint64)
        for site in range(n):
            for typ in range(2):
                rate = 1.0 if typ == SPIKE else gamma
                c = 0
                if rate > 0.0:
                    stream = U64(_STREAM_EVENTS_BASE) + U64(2 * site + typ) \
                        + attempt * U64(0x100000000)
                    rng_init(s, master, replica, stream)
                    c = _count_site_events(s, horizon, rate)
                counts[2 * site + typ] = c
                total += c
        times = np.empty(total, dtype=np.float64)
        sites = np.empty(total, dtype=np.int64)
        types = np.empty(total, dtype=np.int64)
        k = 0
        for site in range(n):
            for typ in range(2):
                c = counts[2 * site + typ]
                if c == 0:
                    continue
                rate = 1.0 if typ == SPIKE else gamma
                stream = U64(_STREAM_EVENTS_BASE) + U64(2 * site + typ) \
                    + attempt * U64(0x100000000)
                rng_init(s, master, replica, stream)
                t = rng_exp(s) / rate
                for j in range(c):
                    times[k] = t
                    sites[k] = site
                    types[k] = typ
                    k += 1
                    t += rng_exp(s) / rate
        order = np.argsort(times, kind="mergesort")
        times = times[order]
        sites = sites[order]
        types = types[order]
        ok = True
        for j in range(1, total):
            if times[j] == times[j - 1]:
                ok = False
                break
        if ok:
            return times, sites, types
        attempt += U64(1)


# ---------------------------------------------------------------------------
# single-event appliers (inlined into the sweep loops)
# ---------------------------------------------------------------------------

@njit(inline="always", cache=True)
def _apply_forward(state, i, typ, lo, hi):
    """Forward map of one event on state[lo..hi]; no uncertainty."""
    if i < lo or i > hi:
        return
    if typ == LEAK:
        state[i] = 0
    elif state[i] == 1:
        state[i] = 0
        if i > lo:
            state[i - 1] = 1
        if i < hi:
            state[i + 1] = 1


@njit(inline="always", cache=True)
def _apply_forward_u(state, u, i, typ, lo, hi, left_open, right_open):
    """Forward map with exact uncertainty-front tracking."""
    if i < lo or i > hi:
        return
    if typ == LEAK:
        state[i] = 0
        u[i] = 0
    else:
        fired = state[i] == 1
        was_u = u[i] == 1
        state[i] = 0
        u[i] = 0  # a spike event forces site i to 0 either way
        for d in range(-1, 2, 2):
            nb = i + d
            if nb < lo or nb > hi:
                continue
            if fired:
                if was_u:
                    if not (state[nb] == 1 and u[nb] == 0):
                        u[nb] = 1
                else:
                    u[nb] = 0  # certainly activated in both
                state[nb] = 1
            elif was_u:
                # the untruncated process may have fired here
                if not (state[nb] == 1 and u[nb] == 0):
                    u[nb] = 1
    if left_open:
        u[lo] = 1
    if right_open:
        u[hi] = 1


@njit(inline="always", cache=True)
def _apply_dual(state, i, typ, lo, hi):
    """Dual map of one event; returns the change in active count."""
    if i < lo or i > hi:
        return 0
    if typ == LEAK:
        if state[i] == 1:
            state[i] = 0
            return -1
        return 0
    has_nb = (i > lo and state[i - 1] == 1) or \
             (i < hi and state[i + 1] == 1)
    if has_nb and state[i] == 0:
        state[i] = 1
        return 1
    if not has_nb and state[i] == 1:
        state[i] = 0
        return -1
    return 0


@njit(cache=True)
def sweep_forward(state, times, sites, types, t_end, lo, hi):
    """Apply events with time <= t_end in place on state[lo..hi]."""
    for e in range(times.shape[0]):
        if times[e] > t_end:
            break
        _apply_forward(state, sites[e], types[e], lo, hi)


@njit(cache=True)
def sweep_forward_u(state, u, times, sites, types, t_end, lo, hi,
                    left_open, right_open):
    if left_open:
        u[lo] = 1
    if right_open:
        u[hi] = 1
    for e in range(times.shape[0]):
        if times[e] > t_end:
            break
        _apply_forward_u(state, u, sites[e], types[e], lo, hi,
                         left_open, right_open)


@njit(cache=True)
def sweep_dual(state, times, sites, types, t_end, lo, hi):
    """Dual event sweep in place; returns the number of active sites."""
    na = 0
    for i in range(lo, hi + 1):
        na += state[i]
    for e in range(times.shape[0]):
        if times[e] > t_end or na == 0:
            break
        na += _apply_dual(state, sites[e], types[e], lo, hi)
    return na


# ---------------------------------------------------------------------------
# Gillespie direct method
# ---------------------------------------------------------------------------

@njit(cache=True)
def _gillespie_one(s, n, gamma, init_mask, cap, left_open, right_open,
                   t_stop, out):
    """One replica.  Runs to extinction, the horizon cap, or t_stop.

    out[0]=tau, out[1]=censored, out[2]=spikes, out[3]=leaks,
    out[4]=touched, out[5]=first touch time; out[6:6+n] receives the
    final state (occupancy queries stop at t_stop).
    """
    state = np.zeros(n, dtype=np.uint8)
    active = np.empty(n, dtype=np.int64)
    pos = np.full(n, -1, dtype=np.int64)
    na = 0
    touched = False
    touch_time = -1.0
    for i in range(n):
        if init_mask[i]:
            state[i] = 1
            active[na] = i
            pos[i] = na
            na += 1
            if (left_open and i <= 1) or (right_open and i >= n - 2):
                if not touched:
                    touched = True
                    touch_time = 0.0
    t = 0.0
    nspikes = 0
    nleaks = 0
    censored = False
    while na > 0:
        rate = na * (1.0 + gamma)
        t_next = t + rng_exp(s) / rate
        if t_next > t_stop:
            t = t_stop
            break
        if t_next > cap:
            t = cap
            censored = True
            break
        t = t_next
        k = int(rng_double(s) * na)
        if k >= na:
            k = na - 1
        i = active[k]
        # swap-pop site i out of the active list
        na -= 1
        last = active[na]
        active[k] = last
        pos[last] = k
        pos[i] = -1
        state[i] = 0
        if rng_double(s) * (1.0 + gamma) < 1.0:
            nspikes += 1
            for d in range(-1, 2, 2):
                nb = i + d
                if 0 <= nb < n and state[nb] == 0:
                    state[nb] = 1
                    active[na] = nb
                    pos[nb] = na
                    na += 1
                    if (left_open and nb <= 1) or \
                            (right_open and nb >= n - 2):
                        if not touched:
                            touched = True
                            touch_time = t
        else:
            nleaks += 1
    out[0] = t
    out[1] = 1.0 if censored else 0.0
    out[2] = nspikes
    out[3] = nleaks
    out[4] = 1.0 if touched else 0.0
    out[5] = touch_time
    for i in range(n):
        out[6 + i] = state[i]


@njit(parallel=True, cache=True)
def gillespie_batch(n, gamma, init_mask, cap, master, rep_lo, rep_hi,
                    left_open, right_open):
    """Extinction samples for replicas rep_lo..rep_hi-1.

    Returns an (R, 6) array with columns tau, censored, spikes, leaks,
    touched, first_touch_time.
    """
    nrep = rep_hi - rep_lo
    res = np.empty((nrep, 6), dtype=np.float64)
    for r in prange(nrep):
        s = np.empty(4, dtype=np.uint64)
        rng_init(s, U64(master), U64(rep_lo + r), U64(_STREAM_GILLESPIE))
        out = np.empty(6 + n, dtype=np.float64)
        _gillespie_one(s, n, gamma, init_mask, cap, left_open, right_open,
                       np.inf, out)
        for c in range(6):
            res[r, c] = out[c]
    return res


@njit(parallel=True, cache=True)
def gillespie_masks(n, gamma, init_mask, t_query, master, nrep):
    """State bitmask at time t_query per replica (n <= 21)."""
    masks = np.empty(nrep, dtype=np.int64)
    for r in prange(nrep):
        s = np.empty(4, dtype=np.uint64)
        rng_init(s, U64(master), U64(r), U64(_STREAM_GILLESPIE))
        out = np.empty(6 + n, dtype=np.float64)
        _gillespie_one(s, n, gamma, init_mask, np.inf, False, False,
                       t_query, out)
        m = 0
        for i in range(n):
            if out[6 + i] > 0.5:
                m |= 1 << i
        masks[r] = m
    return masks


@njit(parallel=True, cache=True)
def sweep_masks(n, gamma, init_mask, t_query, master, nrep):
    """Graphical-engine counterpart of gillespie_masks (n <= 21)."""
    masks = np.empty(nrep, dtype=np.int64)
    for r in prange(nrep):
        times, sites, types = gen_events(U64(master), U64(r), n, gamma,
                                         t_query)
        state = np.zeros(n, dtype=np.uint8)
        for i in range(n):
            if init_mask[i]:
                state[i] = 1
        sweep_forward(state, times, sites, types, t_query, 0, n - 1)
        m = 0
        for i in range(n):
            if state[i]:
                m |= 1 << i
        masks[r] = m
    return masks


# ---------------------------------------------------------------------------
# experiment drivers
# ---------------------------------------------------------------------------

@njit(parallel=True, cache=True)
def dual_survival_batch(n, gamma, horizon, start_idx, master, nrep,
                        left_open, right_open):
    """Dual process from a singleton: survival to the horizon.

    Returns (R, 2): survived flag, activity-contamination flag.
    """
    res = np.empty((nrep, 2), dtype=np.float64)
    for r in prange(nrep):
        times, sites, types = gen_events(U64(master), U64(r), n, gamma,
                                         horizon)
        state = np.zeros(n, dtype=np.uint8)
        state[start_idx] = 1
        touched = (left_open and start_idx <= 1) or \
                  (right_open and start_idx >= n - 2)
        na = 1
        for e in range(times.shape[0]):
            if na == 0:
                break
            i = sites[e]
            delta = _apply_dual(state, i, types[e], 0, n - 1)
            na += delta
            if delta > 0 and ((left_open and i <= 1) or
                              (right_open and i >= n - 2)):
                touched = True
        res[r, 0] = 1.0 if na > 0 else 0.0
        res[r, 1] = 1.0 if touched else 0.0
    return res


@njit(parallel=True, cache=True)
def spatial_density_batch(n, gamma, horizon, master, nrep,
                          block_lo, block_hi):
    """Forward process from all-one on a whole-line proxy.

    Per replica: active count in [block_lo, block_hi] at the horizon and
    a contamination flag (uncertainty front inside the block at that
    time).  Returns (R, 2).
    """
    res = np.empty((nrep, 2), dtype=np.float64)
    for r in prange(nrep):
        times, sites, types = gen_events(U64(master), U64(r), n, gamma,
                                         horizon)
        state = np.ones(n, dtype=np.uint8)
        u = np.zeros(n, dtype=np.uint8)
        sweep_forward_u(state, u, times, sites, types, horizon,
                        0, n - 1, True, True)
        cnt = 0
        bad = 0
        for i in range(block_lo, block_hi + 1):
            cnt += state[i]
            bad |= u[i]
        res[r, 0] = cnt
        res[r, 1] = bad
    return res


@njit(inline="always", cache=True)
def _minmax(state, lo, hi):
    mn = -1
    mx = -1
    for i in range(lo, hi + 1):
        if state[i]:
            if mn < 0:
                mn = i
            mx = i
    return mn, mx


@njit(parallel=True, cache=True)
def lemma_13_batch(nn, margin, gamma, horizon, master, nrep):
    """Path-level checks of the frontier-sandwich identities.

    Couples, on one event field over n = 2*(nn+margin)+1 sites, the
    finite process on [-nn, nn] (all-one) with the whole-line proxy and
    the two half-line proxies (all-one), all swept event by event.  At
    every event time while the finite process is alive it checks

    * interval identity: finite == whole-line proxy on [min, max] of the
      finite process;
    * min identity with the [-nn, +inf) proxy and max identity with the
      (-inf, nn] proxy.

    A check is conclusive only when the relevant proxy's uncertainty
    front stays clear of the compared region.  Returns (R, 4):
    interval violations, min/max violations, inconclusive checks,
    conclusive checks.
    """
    n = 2 * (nn + margin) + 1
    flo = margin            # index of site -nn
    fhi = margin + 2 * nn   # index of site +nn
    res = np.zeros((nrep, 4), dtype=np.int64)
    for r in prange(nrep):
        times, sites, types = gen_events(U64(master), U64(r), n, gamma,
                                         horizon)
        fin = np.zeros(n, dtype=np.uint8)
        for i in range(flo, fhi + 1):
            fin[i] = 1
        full = np.ones(n, dtype=np.uint8)
        ufull = np.zeros(n, dtype=np.uint8)
        right = np.zeros(n, dtype=np.uint8)   # all-one on [-nn, +inf) proxy
        uright = np.zeros(n, dtype=np.uint8)
        for i in range(flo, n):
            right[i] = 1
        left = np.zeros(n, dtype=np.uint8)    # all-one on (-inf, nn] proxy
        uleft = np.zeros(n, dtype=np.uint8)
        for i in range(0, fhi + 1):
            left[i] = 1
        viol_int = 0
        viol_mm = 0
        incon = 0
        concl = 0
        for e in range(times.shape[0]):
            t = times[e]
            if t > horizon:
                break
            i = sites[e]
            typ = types[e]
            _apply_forward(fin, i, typ, flo, fhi)
            _apply_forward_u(full, ufull, i, typ, 0, n - 1, True, True)
            _apply_forward_u(right, uright, i, typ, flo, n - 1,
                             False, True)
            _apply_forward_u(left, uleft, i, typ, 0, fhi, True, False)
            mn, mx = _minmax(fin, flo, fhi)
            if mn < 0:
                break  # finite process died; checks stop at extinction
            # interval identity against the whole-line proxy
            clean = True
            for k in range(mn, mx + 1):
                if ufull[k]:
                    clean = False
                    break
            if clean:
                concl += 1
                for k in range(mn, mx + 1):
                    if fin[k] != full[k]:
                        viol_int += 1
                        break
            else:
                incon += 1
            # min identity: first active site of the right half proxy,
            # conclusive only if no uncertainty at or below it
            rmn = -1
            clean = True
            for k in range(flo, n):
                if uright[k]:
                    clean = False
                    break
                if right[k]:
                    rmn = k
                    break
            if clean:
                concl += 1
                if rmn != mn:
                    viol_mm += 1
            else:
                incon += 1
            # max identity, mirrored
            lmx = -1
            clean = True
            for k in range(fhi, -1, -1):
                if uleft[k]:
                    clean = False
                    break
                if left[k]:
                    lmx = k
                    break
            if clean:
                concl += 1
                if lmx != mx:
                    viol_mm += 1
            else:
                incon += 1
        res[r, 0] = viol_int
        res[r, 1] = viol_mm
        res[r, 2] = incon
        res[r, 3] = concl
    return res


@njit(parallel=True, cache=True)
def lemma_2_batch(nn, margin, gamma, horizon, master, nrep):
    """Trajectory-coincidence check after both frontiers are crossed.

    Per replica draws non-empty random B in [1, nn] and C in [-nn, -1],
    then couples on one event field: the half-line proxies from B and C
    (for the two crossing times), the finite process from all-one and
    the finite process from B u C.  Once the B process (on the left
    half-line window) has reached -nn and the C process (right half-line
    window) has reached +nn, and the B u C finite process is still
    alive, the two finite trajectories must coincide exactly.

    Returns (R, 4): violations, contaminated flag, vacuous flag, checks.
    """
    n = 2 * (nn + margin) + 1
    flo = margin
    fhi = margin + 2 * nn
    mid = margin + nn       # index of site 0
    res = np.zeros((nrep, 4), dtype=np.int64)
    for r in prange(nrep):
        s = np.empty(4, dtype=np.uint64)
        rng_init(s, U64(master), U64(r), U64(_STREAM_SUBSETS))
        bmask = np.zeros(n, dtype=np.uint8)
        cmask = np.zeros(n, dtype=np.uint8)
        nb = 0
        nc = 0
        while nb == 0:
            for i in range(mid + 1, fhi + 1):
                if rng_double(s) < 0.5:
                    bmask[i] = 1
                    nb += 1
        while nc == 0:
            for i in range(flo, mid):
                if rng_double(s) < 0.5:
                    cmask[i] = 1
                    nc += 1
        times, sites, types = gen_events(U64(master), U64(r), n, gamma,
                                         horizon)
        lhB = np.zeros(n, dtype=np.uint8)   # B on (-inf, nn] proxy
        ulh = np.zeros(n, dtype=np.uint8)
        rhC = np.zeros(n, dtype=np.uint8)   # C on [-nn, +inf) proxy
        urh = np.zeros(n, dtype=np.uint8)
        finA = np.zeros(n, dtype=np.uint8)  # all-one on [-nn, nn]
        finBC = np.zeros(n, dtype=np.uint8)
        for i in range(flo, fhi + 1):
            finA[i] = 1
            if bmask[i] or cmask[i]:
                finBC[i] = 1
            if bmask[i]:
                lhB[i] = 1
            if cmask[i]:
                rhC[i] = 1
        crossedR = False  # -nn reached by the B process
        crossedL = False  # +nn reached by the C process
        contaminated = False
        viol = 0
        checks = 0
        for e in range(times.shape[0]):
            t = times[e]
            if t > horizon:
                break
            i = sites[e]
            typ = types[e]
            _apply_forward_u(lhB, ulh, i, typ, 0, fhi, True, False)
            _apply_forward_u(rhC, urh, i, typ, flo, n - 1, False, True)
            _apply_forward(finA, i, typ, flo, fhi)
            _apply_forward(finBC, i, typ, flo, fhi)
            # uncertainty reaching the finite window voids the crossing
            # times (the finite trajectories themselves are exact)
            if not (crossedR and crossedL):
                for k in range(flo, fhi + 1):
                    if ulh[k] or urh[k]:
                        contaminated = True
                        break
                if contaminated:
                    break
                if lhB[flo]:
                    crossedR = True
                if rhC[fhi]:
                    crossedL = True
            nbc = 0
            for k in range(flo, fhi + 1):
                nbc += finBC[k]
            if nbc == 0:
                break
            if crossedR and crossedL:
                checks += 1
                for k in range(flo, fhi + 1):
                    if finA[k] != finBC[k]:
                        viol += 1
                        break
        res[r, 0] = viol
        res[r, 1] = 1 if contaminated else 0
        res[r, 2] = 0 if checks > 0 else 1
        res[r, 3] = checks
    return res
