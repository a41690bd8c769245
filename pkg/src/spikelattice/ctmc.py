"""Exact finite-window oracle via the full continuous-time Markov chain.

States of the window [-N, N] are encoded as (2N+1)-bit masks with site
-N in the least significant bit, so state indices are portable across
dumps and tools.  The empty configuration (index 0) is absorbing.  Mean
extinction times come from the absorbing-chain linear system; survival
probabilities from uniformization with a Poisson-tail truncation bound.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .model import Configuration, RateParams, Window

MAX_SITES = 21
ABSORBING = 0


@dataclass(frozen=True)
class CtmcModel:
    window: Window
    params: RateParams
    rate_matrix: sp.csr_matrix
    reaches_absorbing: bool

    @property
    def n_sites(self) -> int:
        return self.window.n_sites

    @property
    def n_states(self) -> int:
        return 1 << self.n_sites


def mask_of(model: CtmcModel, config: Configuration) -> int:
    """State index of a configuration (site -N = bit 0)."""
    m = 0
    for i in config.active:
        if not model.window.in_truncation(i):
            raise ValueError(f"site {i} outside the model window")
        m |= 1 << (i - model.window.tlo)
    return m


def config_of(model: CtmcModel, mask: int) -> Configuration:
    if not 0 <= mask < model.n_states:
        raise ValueError("state index out of range")
    lo = model.window.tlo
    active = frozenset(lo + b for b in range(model.n_sites)
                       if mask >> b & 1)
    return Configuration(active, model.window)


def build(N: int, params: RateParams) -> CtmcModel:
    """Rate matrix of the process on the window [-N, N].

    From each state, every active site contributes a leak transition
    (rate gamma) and a spike transition (rate 1); transitions landing on
    the same image state accumulate.  Row sums vanish by construction
    and are verified to 1e-12.
    """
    n = 2 * N + 1
    if N < 0:
        raise ValueError("N must be non-negative")
    if n > MAX_SITES:
        raise ValueError(
            f"window [-{N}, {N}] has {n} sites; the exact oracle is "
            f"capped at {MAX_SITES} (state space 2^{MAX_SITES})")
    nstates = 1 << n
    rows, cols, vals = [], [], []
    diag = np.zeros(nstates)
    for mask in range(1, nstates):
        m = mask
        while m:
            bit = m & -m
            m ^= bit
            b = bit.bit_length() - 1
            cleared = mask ^ bit
            spiked = cleared
            if b > 0:
                spiked |= 1 << (b - 1)
            if b < n - 1:
                spiked |= 1 << (b + 1)
            for image, rate in ((cleared, params.gamma), (spiked, 1.0)):
                if rate == 0.0:
                    continue
                rows.append(mask)
                cols.append(image)
                vals.append(rate)
                diag[mask] -= rate
    rows.extend(range(nstates))
    cols.extend(range(nstates))
    vals.extend(diag)
    Q = sp.coo_matrix((vals, (rows, cols)),
                      shape=(nstates, nstates)).tocsr()
    Q.sum_duplicates()
    rowsums = np.abs(np.asarray(Q.sum(axis=1)).ravel())
    if rowsums.max() > 1e-12:
        raise AssertionError("rate matrix row sums exceed 1e-12")
    return CtmcModel(Window.finite(-N, N), params, Q,
                     _all_reach_absorbing(Q, nstates))


def _all_reach_absorbing(Q: sp.csr_matrix, nstates: int) -> bool:
    """Graph search along reversed transitions from the empty state."""
    rev = Q.T.tocsr()
    seen = np.zeros(nstates, dtype=bool)
    seen[ABSORBING] = True
    queue = deque([ABSORBING])
    while queue:
        j = queue.popleft()
        lo, hi = rev.indptr[j], rev.indptr[j + 1]
        for k in range(lo, hi):
            i = rev.indices[k]
            if i != j and rev.data[k] > 0 and not seen[i]:
                seen[i] = True
                queue.append(i)
    return bool(seen.all())


def mean_extinction(model: CtmcModel) -> np.ndarray:
    """Mean absorption time from every state; entry 0 (empty) is 0.

    Solves (-Q restricted to non-empty states) m = 1.  A singular
    system means some state cannot reach the empty configuration and is
    reported as such rather than regularized.
    """
    if not model.reaches_absorbing:
        raise ValueError("some states never reach the empty configuration; "
                         "mean extinction times are infinite")
    nstates = model.n_states
    idx = np.arange(1, nstates)
    A = -model.rate_matrix[idx][:, idx].tocsc()
    m = spla.spsolve(A, np.ones(nstates - 1))
    resid = np.abs(A @ m - 1.0).max()
    # residual scaled by the solution magnitude: large mean times make
    # an absolute comparison against 1 meaningless
    scale = max(1.0, float(np.abs(A).max() * np.abs(m).max()))
    if not np.isfinite(m).all() or resid > 1e-8 * scale:
        raise ArithmeticError("first-passage linear system is singular")
    out = np.zeros(nstates)
    out[1:] = m
    return out


def survival(model: CtmcModel, initial: int, t: float,
             eps: float = 1e-10) -> float:
    p, _ = survival_detailed(model, initial, t, eps)
    return p


def survival_detailed(model: CtmcModel, initial: int, t: float,
                      eps: float = 1e-10) -> tuple[float, float]:
    """P(process from `initial` is nonempty at time t), by uniformization.

    Returns (probability, truncation bound): the series over the
    Poissonized jump chain is cut once the remaining Poisson tail drops
    below eps, and that tail bound is returned alongside the value.
    """
    if t < 0:
        raise ValueError("time must be non-negative")
    if not 0 <= initial < model.n_states:
        raise ValueError("initial state index out of range")
    if initial == ABSORBING:
        return 0.0, 0.0
    if t == 0.0:
        return 1.0, 0.0
    Q = model.rate_matrix
    lam = float(np.abs(Q.diagonal()).max())
    if lam == 0.0:
        return 1.0, 0.0
    P = sp.eye(model.n_states, format="csr") + Q / lam
    mu = lam * t
    p = np.zeros(model.n_states)
    p[initial] = 1.0
    # running Poisson(mu) weight and the mass emitted so far
    log_w = -mu
    absorbed = np.exp(log_w) * p[ABSORBING]
    emitted = np.exp(log_w)
    k = 0
    while 1.0 - emitted > eps:
        p = p @ P
        k += 1
        log_w += np.log(mu) - np.log(k)
        w = np.exp(log_w)
        absorbed += w * p[ABSORBING]
        emitted += w
        # absorbed mass in the jump chain is monotone, so once it is
        # within eps of 1 every remaining term is absorbed up to eps
        # and the series can stop early (matters for large t)
        if 1.0 - p[ABSORBING] < eps:
            absorbed += (1.0 - emitted) * p[ABSORBING]
            emitted = 1.0
            break
    tail = 1.0 - emitted
    # the tail states could be anywhere, including absorbed
    return float(min(1.0, max(0.0, 1.0 - absorbed - tail))), float(tail)


def beta_exact(model: CtmcModel, initial: int, tol: float = 1e-8) -> float:
    """Time where survival from `initial` crosses e^{-1}, by bisection."""
    if initial == ABSORBING:
        raise ValueError("initial state must be nonempty")
    if model.params.gamma == 0.0 and model.n_sites > 1:
        raise ValueError("gamma = 0: survival never decays, no finite beta")
    target = np.exp(-1.0)
    hi = 1.0
    while survival(model, initial, hi) > target:
        hi *= 2.0
        if hi > 1e12:
            raise ArithmeticError("survival does not cross e^{-1}")
    lo = 0.0
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if survival(model, initial, mid) > target:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)
