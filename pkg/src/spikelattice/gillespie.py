"""Continuous-time Monte Carlo sampling of the forward process.

Direct-method simulation: with ``a`` active sites the total event rate
is ``a * (1 + gamma)``; the next event picks a uniformly random active
site, which spikes with probability ``1 / (1 + gamma)`` and leaks
otherwise.  Each replica owns an independent random stream keyed by
(seed, replica), so results are bit-identical regardless of how many
worker threads execute the batch.
"""

from __future__ import annotations

from dataclasses import dataclass

import numba
import numpy as np

from . import _kernels
from .graphical import ContaminationFlag
from .model import Configuration, RateParams

DEFAULT_HORIZON = 1e6


@dataclass(frozen=True)
class SimSpec:
    """Everything needed to reproduce a batch of extinction samples."""

    initial: Configuration
    params: RateParams
    seed: int
    replicas: int = 1
    horizon: float = DEFAULT_HORIZON

    def __post_init__(self):
        if self.replicas < 1:
            raise ValueError("need at least one replica")
        if self.horizon <= 0:
            raise ValueError("horizon must be positive")
        if self.initial.is_empty():
            raise ValueError("initial configuration is empty")


@dataclass(frozen=True)
class ExtinctionSample:
    tau: float
    censored: bool
    n_spikes: int
    n_leaks: int
    contamination: ContaminationFlag
    seed_token: int


@dataclass(frozen=True)
class StepRates:
    """Jump-rate decomposition out of a configuration."""

    total: float
    spike: float
    leak: float

    @property
    def spike_fraction(self) -> float:
        return self.spike / self.total if self.total > 0 else 0.0


def step_rates(config: Configuration, params: RateParams) -> StepRates:
    a = len(config.active)
    return StepRates(total=a * params.total_per_site,
                     spike=float(a),
                     leak=a * params.gamma)


def _kernel_args(spec: SimSpec):
    win = spec.initial.window
    n = win.n_sites
    init_mask = np.zeros(n, dtype=np.uint8)
    for i in spec.initial.active:
        init_mask[i - win.tlo] = 1
    left_open = win.lo is None
    right_open = win.hi is None
    return n, init_mask, left_open, right_open


def _row_to_sample(row, seed: int, replica: int) -> ExtinctionSample:
    touched = row[4] > 0.5
    flag = ContaminationFlag(touched, float(row[5]) if touched else None)
    return ExtinctionSample(
        tau=float(row[0]),
        censored=row[1] > 0.5,
        n_spikes=int(row[2]),
        n_leaks=int(row[3]),
        contamination=flag,
        seed_token=_kernels.derive_token(seed, replica),
    )


def sample_extinction(spec: SimSpec, replica: int = 0) -> ExtinctionSample:
    """One extinction-time sample (the given replica of the batch)."""
    n, init_mask, left_open, right_open = _kernel_args(spec)
    res = _kernels.gillespie_batch(n, spec.params.gamma, init_mask,
                                   spec.horizon, spec.seed,
                                   replica, replica + 1,
                                   left_open, right_open)
    return _row_to_sample(res[0], spec.seed, replica)


def sample_batch(spec: SimSpec, workers: int | None = None
                 ) -> list[ExtinctionSample]:
    """All replicas of the batch, in replica order.

    ``workers`` caps the number of threads; the samples do not depend
    on it.
    """
    if workers is not None:
        if workers < 1:
            raise ValueError("workers must be positive")
        numba.set_num_threads(min(workers, numba.config.NUMBA_NUM_THREADS))
    n, init_mask, left_open, right_open = _kernel_args(spec)
    res = _kernels.gillespie_batch(n, spec.params.gamma, init_mask,
                                   spec.horizon, spec.seed,
                                   0, spec.replicas,
                                   left_open, right_open)
    return [_row_to_sample(res[r], spec.seed, r)
            for r in range(spec.replicas)]
