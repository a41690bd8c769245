"""High-level studies: metastability scaling, density estimation, the
phase-transition sweep, the analytic contour bound, and the path-level
lemma suites.

Every experiment is a pure function of (parameters, seed) and replays
bit-identically; all Monte Carlo comparisons report standard errors and
downstream consumers apply a uniform 4*SE decision rule.
"""

from __future__ import annotations

import json
import math
import platform
from dataclasses import dataclass, field, asdict

import numpy as np

from . import _kernels, stats
from .gillespie import SimSpec, sample_batch
from .model import Configuration, RateParams, Window, all_one

GAMMA_DOMAIN_LIMIT = 16.0 ** -4
DEFAULT_MARGIN_FACTOR = 4.0
MEMORYLESS_GRID = (0.5, 1.0, 2.0)


def _subseed(seed: int, *key: int) -> int:
    """Independent integer seed derived from a master seed and a key."""
    ss = np.random.SeedSequence(entropy=seed, spawn_key=tuple(key))
    # keep within int64 range for the jit kernels
    return int(ss.generate_state(1, np.uint64)[0] >> np.uint64(1))


def margin_for(horizon: float,
               factor: float = DEFAULT_MARGIN_FACTOR) -> int:
    """Truncation margin for open-window proxies: ceil(factor * T)."""
    return int(math.ceil(factor * horizon))


# ---------------------------------------------------------------------------
# metastability
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class MetastabilityRow:
    N: int
    gamma: float
    replicas: int
    mean_tau: float
    se_mean: float
    beta_hat: float
    se_beta: float
    ks_d: float
    ks_p: float
    ratio: float
    censored: int
    memoryless_defect: dict[tuple[float, float], float] = field(repr=False)

    @property
    def max_defect(self) -> float:
        return max(self.memoryless_defect.values())


def _memoryless_defect(norm: np.ndarray) -> dict[tuple[float, float], float]:
    """|P(>s+t) - P(>s) P(>t)| on the grid, for beta-normalized samples."""
    def surv(t):
        return float((norm > t).mean())
    out = {}
    for s in MEMORYLESS_GRID:
        for t in MEMORYLESS_GRID:
            out[(s, t)] = abs(surv(s + t) - surv(s) * surv(t))
    return out


def metastability(gamma: float, n_list: list[int], replicas: int,
                  seed: int, horizon: float = 1e6,
                  workers: int | None = None) -> list[MetastabilityRow]:
    """Extinction-time scaling from the all-one state on [-N, N].

    Censored replicas are excluded from the statistics and counted; a
    nonzero count means the horizon cap was too low for that N.
    """
    if gamma <= 0:
        raise ValueError("gamma must be positive (gamma = 0 never dies "
                         "on windows wider than one site)")
    rows = []
    for N in n_list:
        win = Window.finite(-N, N)
        spec = SimSpec(all_one(win), RateParams(gamma),
                       _subseed(seed, N), replicas, horizon)
        samples = sample_batch(spec, workers)
        taus = tuple(s.tau for s in samples if not s.censored)
        censored = sum(s.censored for s in samples)
        sset = stats.SampleSet(taus)
        mean, se_mean = stats.mean_se(sset)
        beta, se_beta = stats.quantile(sset, 1.0 - math.exp(-1.0))
        ks = stats.ks_exponential(sset, seed=_subseed(seed, N, 1))
        norm = np.asarray(taus) / beta
        rows.append(MetastabilityRow(
            N=N, gamma=gamma, replicas=replicas,
            mean_tau=mean, se_mean=se_mean,
            beta_hat=beta, se_beta=se_beta,
            ks_d=ks.statistic, ks_p=ks.p_value,
            ratio=mean / beta, censored=censored,
            memoryless_defect=_memoryless_defect(norm)))
    return rows


# ---------------------------------------------------------------------------
# density
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DensityEstimate:
    gamma: float
    T: float
    M: int
    rho_dual: float
    se_dual: float
    rho_spatial: float
    se_spatial: float
    contamination: float
    reliable: bool


def density(gamma: float, T: float, M: int, replicas: int,
            seed: int) -> DensityEstimate:
    """Two estimators of the upper-invariant-measure density.

    rho_dual is the survival frequency of the dual process from {0} on
    the whole-line proxy truncated at [-M, M]; rho_spatial is the
    average occupancy of the forward process from all-one over the
    central block [0, M/2] at time T.  The two agree in the limit, so
    their 4*SE agreement is the operational cross-check.  Results with
    contamination rate above 1e-2 are flagged unreliable.
    """
    if gamma <= 0:
        raise ValueError("gamma must be positive")
    if M < margin_for(T):
        raise ValueError(f"window M={M} below the margin rule "
                         f"ceil(4*T)={margin_for(T)} for T={T}")
    n = 2 * M + 1
    mid = M
    dual = _kernels.dual_survival_batch(n, gamma, T, mid,
                                        _subseed(seed, 0), replicas,
                                        True, True)
    rho_dual = float(dual[:, 0].mean())
    se_dual = float(dual[:, 0].std(ddof=1) / math.sqrt(replicas))
    contam_dual = float(dual[:, 1].mean())

    blk_lo = mid
    blk_hi = mid + M // 2
    spat = _kernels.spatial_density_batch(n, gamma, T,
                                          _subseed(seed, 1), replicas,
                                          blk_lo, blk_hi)
    width = blk_hi - blk_lo + 1
    per_rep = spat[:, 0] / width
    rho_spatial = float(per_rep.mean())
    se_spatial = float(per_rep.std(ddof=1) / math.sqrt(replicas))
    contam_spat = float(spat[:, 1].mean())

    contamination = max(contam_dual, contam_spat)
    return DensityEstimate(gamma, T, M, rho_dual, se_dual,
                           rho_spatial, se_spatial, contamination,
                           reliable=contamination <= 1e-2)


# ---------------------------------------------------------------------------
# phase-transition sweep
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SweepRow:
    gamma: float
    survival_full: float
    se_full: float
    survival_half: float
    se_half: float


@dataclass(frozen=True)
class SweepResult:
    rows: list[SweepRow]
    gamma_hat: float | None


def sweep(gammas: list[float], T: float, M: int, replicas: int,
          seed: int) -> SweepResult:
    """Dual survival proxies along a gamma grid.

    For each gamma: survival of the dual from {0} to time T on the
    whole-line proxy (full) and on the half-line [0, +inf) proxy.  The
    crossing estimate gamma_hat interpolates where the full proxy first
    falls below half its value at the smallest gamma; it is a
    descriptive diagnostic, not a critical-point estimator.
    """
    if sorted(gammas) != list(gammas):
        raise ValueError("gamma grid must be sorted ascending")
    if M < margin_for(T):
        raise ValueError(f"window M={M} below the margin rule "
                         f"ceil(4*T)={margin_for(T)}")
    rows = []
    for k, g in enumerate(gammas):
        n = 2 * M + 1
        full = _kernels.dual_survival_batch(n, g, T, M,
                                            _subseed(seed, k, 0),
                                            replicas, True, True)
        half = _kernels.dual_survival_batch(M + 1, g, T, 0,
                                            _subseed(seed, k, 1),
                                            replicas, False, True)
        rows.append(SweepRow(
            gamma=g,
            survival_full=float(full[:, 0].mean()),
            se_full=float(full[:, 0].std(ddof=1) / math.sqrt(replicas)),
            survival_half=float(half[:, 0].mean()),
            se_half=float(half[:, 0].std(ddof=1) / math.sqrt(replicas))))
    plateau = rows[0].survival_full
    thresh = 0.5 * plateau
    gamma_hat = None
    for prev, cur in zip(rows, rows[1:]):
        if prev.survival_full >= thresh > cur.survival_full:
            span = prev.survival_full - cur.survival_full
            frac = (prev.survival_full - thresh) / span if span > 0 else 0.0
            gamma_hat = prev.gamma + frac * (cur.gamma - prev.gamma)
            break
    return SweepResult(rows, gamma_hat)


# ---------------------------------------------------------------------------
# analytic contour bound
# ---------------------------------------------------------------------------

def contour_bound(gamma: float) -> float:
    """Closed-form upper bound on the half-line contour weight.

    (1+g)/(2+g) + 2g + 16^3 sqrt(g) * 16 g^{1/4} / (1 - 16 g^{1/4}),
    valid for 0 <= gamma < 16^-4.  A value below 1 certifies survival
    of the half-line dual at that gamma.
    """
    if gamma < 0:
        raise ValueError("gamma must be non-negative")
    if gamma >= GAMMA_DOMAIN_LIMIT:
        raise ValueError(f"bound only valid for gamma < 16^-4 "
                         f"= {GAMMA_DOMAIN_LIMIT:g}")
    q = 16.0 * gamma ** 0.25
    return (1.0 + gamma) / (2.0 + gamma) + 2.0 * gamma \
        + 16.0 ** 3 * math.sqrt(gamma) * q / (1.0 - q)


# ---------------------------------------------------------------------------
# lemma property suites
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class LemmaOutcome:
    name: str
    violations: int
    checks: int
    inconclusive: int
    passed: bool


@dataclass(frozen=True)
class LemmaReport:
    outcomes: list[LemmaOutcome]

    @property
    def all_passed(self) -> bool:
        return all(o.passed for o in self.outcomes)


def lemma_suite(gamma: float, N: int, replicas: int, seed: int,
                horizon: float = 8.0,
                margin: int | None = None) -> LemmaReport:
    """Exact path-level identity checks on shared realizations.

    Frontier-sandwich identities (interval, min and max versions) and
    the trajectory-coincidence property after both half-line frontiers
    have crossed the window are exact: zero violations are tolerated on
    uncontaminated replicas.  The set-dominance property (random A with
    |A| = n survives at least as long as the block {1..n}) is
    distributional and uses the 4*SE rule.
    """
    if margin is None:
        margin = margin_for(horizon)
    res13 = _kernels.lemma_13_batch(N, margin, gamma, horizon,
                                    _subseed(seed, 0), replicas)
    res2 = _kernels.lemma_2_batch(N, margin, gamma, horizon,
                                  _subseed(seed, 1), replicas)
    outcomes = [
        LemmaOutcome("frontier-interval", int(res13[:, 0].sum()),
                     int(res13[:, 3].sum()), int(res13[:, 2].sum()),
                     bool(res13[:, 0].sum() == 0)),
        LemmaOutcome("frontier-minmax", int(res13[:, 1].sum()),
                     int(res13[:, 3].sum()), int(res13[:, 2].sum()),
                     bool(res13[:, 1].sum() == 0)),
        LemmaOutcome("trajectory-coincidence", int(res2[:, 0].sum()),
                     int(res2[:, 3].sum()), int(res2[:, 1].sum()),
                     bool(res2[:, 0].sum() == 0)),
        _dominance_outcome(gamma, N, replicas, _subseed(seed, 2)),
    ]
    return LemmaReport(outcomes)


def _dominance_outcome(gamma: float, N: int, replicas: int,
                       seed: int) -> LemmaOutcome:
    """Survival from a random n-set dominates survival from {1..n}."""
    win = Window.finite(-N, N)
    n_set = min(3, N) if N >= 1 else 1
    rng = np.random.default_rng(np.random.SeedSequence(entropy=seed,
                                                       spawn_key=(9,)))
    sites = rng.choice(np.arange(-N, N + 1), size=n_set, replace=False)
    a_cfg = Configuration(frozenset(int(i) for i in sites), win)
    block = Configuration(frozenset(range(1, n_set + 1)) if N >= n_set
                          else frozenset(range(-N, -N + n_set)), win)
    horizon = 1e6
    tau_a = [s.tau for s in sample_batch(
        SimSpec(a_cfg, RateParams(gamma), _subseed(seed, 0),
                replicas, horizon))]
    tau_b = [s.tau for s in sample_batch(
        SimSpec(block, RateParams(gamma), _subseed(seed, 1),
                replicas, horizon))]
    ta = np.asarray(tau_a)
    tb = np.asarray(tau_b)
    viol = 0
    checks = 0
    for t in np.quantile(tb, [0.25, 0.5, 0.75]):
        pa = (ta > t).mean()
        pb = (tb > t).mean()
        se = math.sqrt(pa * (1 - pa) / len(ta) + pb * (1 - pb) / len(tb))
        checks += 1
        if pa < pb - 4.0 * se:
            viol += 1
    return LemmaOutcome("set-dominance", viol, checks, 0, viol == 0)


# ---------------------------------------------------------------------------
# output plumbing
# ---------------------------------------------------------------------------

def _fmt(x) -> str:
    if isinstance(x, bool):
        return str(int(x))
    if isinstance(x, float):
        return format(x, ".17g")
    return str(x)


def write_csv(path, header: list[str], rows) -> None:
    """17-significant-digit CSV: byte-stable across replays."""
    with open(path, "w") as f:
        f.write(",".join(header) + "\n")
        for row in rows:
            f.write(",".join(_fmt(v) for v in row) + "\n")


def write_manifest(path, config: dict, seed: int,
                   counts: dict | None = None) -> None:
    """JSON run manifest: seed, config, versions, outcome counters."""
    import numpy
    import scipy
    doc = {
        "seed": seed,
        "config": config,
        "versions": {
            "python": platform.python_version(),
            "numpy": numpy.__version__,
            "scipy": scipy.__version__,
        },
        "counts": counts or {},
    }
    def _coerce(o):
        if isinstance(o, np.integer):
            return int(o)
        if isinstance(o, np.floating):
            return float(o)
        if isinstance(o, np.bool_):
            return bool(o)
        raise TypeError(f"not manifest-serializable: {type(o).__name__}")

    with open(path, "w") as f:
        json.dump(doc, f, indent=2, sort_keys=True, default=_coerce)
        f.write("\n")
