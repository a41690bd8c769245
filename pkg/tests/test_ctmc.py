import numpy as np
import pytest
from scipy.integrate import quad

from spikelattice import ctmc
from spikelattice.model import Configuration, RateParams

# mean extinction from the all-one state, frozen from an independent
# dense linear solve over the enumerated state space
ORACLE_MEAN_TAU = {
    (1, 0.5): 3.727969348659,
    (1, 0.2): 10.559339993945,
    (1, 1.0): 1.780701754386,
    (2, 0.5): 6.873056931741,
    (2, 0.2): 34.401931772068,
    (2, 1.0): 2.665008613029,
}


def full_state(model):
    return model.n_states - 1


class TestBuild:
    def test_row_sums_vanish(self):
        m = ctmc.build(2, RateParams(0.7))
        sums = np.asarray(m.rate_matrix.sum(axis=1)).ravel()
        assert np.abs(sums).max() < 1e-12

    def test_absorbing_state_inert(self):
        m = ctmc.build(1, RateParams(0.5))
        assert m.rate_matrix[ctmc.ABSORBING].count_nonzero() == 0

    def test_off_diagonal_nonnegative(self):
        m = ctmc.build(2, RateParams(0.3))
        Q = m.rate_matrix.tocoo()
        off = Q.data[Q.row != Q.col]
        assert (off >= 0).all()

    def test_n0_rates(self):
        m = ctmc.build(0, RateParams(0.4))
        # single site: {0} -> empty at rate 1 + gamma
        assert m.rate_matrix[1, 0] == pytest.approx(1.4)

    def test_capacity_guard(self):
        with pytest.raises(ValueError, match="capped"):
            ctmc.build(11, RateParams(0.5))

    def test_all_states_reach_empty(self):
        assert ctmc.build(2, RateParams(0.1)).reaches_absorbing

    def test_gamma_zero_pathological(self):
        # no leaks and a window wider than one site: never absorbs
        assert not ctmc.build(1, RateParams(0.0)).reaches_absorbing
        assert ctmc.build(0, RateParams(0.0)).reaches_absorbing


class TestMaskCodec:
    def test_round_trip(self):
        m = ctmc.build(1, RateParams(0.5))
        c = Configuration(frozenset({-1, 1}), m.window)
        assert ctmc.config_of(m, ctmc.mask_of(m, c)).active == {-1, 1}

    def test_lsb_is_leftmost_site(self):
        m = ctmc.build(1, RateParams(0.5))
        c = Configuration(frozenset({-1}), m.window)
        assert ctmc.mask_of(m, c) == 1


class TestMeanExtinction:
    def test_empty_is_zero(self):
        m = ctmc.build(1, RateParams(0.5))
        assert ctmc.mean_extinction(m)[0] == 0.0

    def test_n0_closed_form(self):
        for g in (0.2, 1.0, 3.0):
            m = ctmc.build(0, RateParams(g))
            assert ctmc.mean_extinction(m)[1] == pytest.approx(
                1.0 / (1.0 + g), rel=1e-12)

    @pytest.mark.parametrize("N,gamma", sorted(ORACLE_MEAN_TAU))
    def test_matches_frozen_oracle(self, N, gamma):
        m = ctmc.build(N, RateParams(gamma))
        got = ctmc.mean_extinction(m)[full_state(m)]
        want = ORACLE_MEAN_TAU[(N, gamma)]
        assert abs(got - want) < 5e-10 * want

    def test_gamma_zero_fails_loudly(self):
        m = ctmc.build(1, RateParams(0.0))
        with pytest.raises(ValueError, match="never reach"):
            ctmc.mean_extinction(m)

    def test_monotone_in_gamma(self):
        prev = np.inf
        for g in (0.1, 0.2, 0.5, 1.0, 2.0):
            m = ctmc.build(2, RateParams(g))
            cur = ctmc.mean_extinction(m)[full_state(m)]
            assert cur < prev
            prev = cur


class TestSurvival:
    def test_at_zero(self):
        m = ctmc.build(1, RateParams(0.5))
        assert ctmc.survival(m, full_state(m), 0.0) == 1.0
        assert ctmc.survival(m, ctmc.ABSORBING, 5.0) == 0.0

    def test_n0_exponential(self):
        m = ctmc.build(0, RateParams(0.7))
        for t in (0.3, 1.0, 2.5):
            assert ctmc.survival(m, 1, t) == pytest.approx(
                np.exp(-1.7 * t), abs=1e-9)

    def test_truncation_bound_recorded(self):
        m = ctmc.build(1, RateParams(0.5))
        p, bound = ctmc.survival_detailed(m, full_state(m), 1.0)
        assert 0 < p < 1
        assert 0 <= bound <= 1e-10

    def test_nonincreasing_in_t(self):
        m = ctmc.build(2, RateParams(0.5))
        ts = np.linspace(0.0, 8.0, 17)
        ps = [ctmc.survival(m, full_state(m), t) for t in ts]
        assert all(a >= b - 1e-12 for a, b in zip(ps, ps[1:]))

    @pytest.mark.parametrize("N", [0, 1, 2])
    def test_mean_is_integral_of_survival(self, N):
        m = ctmc.build(N, RateParams(0.5))
        full = full_state(m)
        mean = ctmc.mean_extinction(m)[full]
        integral, _ = quad(lambda t: ctmc.survival(m, full, t),
                           0, np.inf, limit=200)
        assert abs(integral - mean) / mean < 1e-6


class TestBeta:
    def test_n0_closed_form(self):
        m = ctmc.build(0, RateParams(1.0))
        assert ctmc.beta_exact(m, 1) == pytest.approx(0.5, abs=1e-7)

    def test_defining_property(self):
        m = ctmc.build(1, RateParams(0.5))
        beta = ctmc.beta_exact(m, full_state(m))
        assert ctmc.survival(m, full_state(m), beta) == pytest.approx(
            np.exp(-1), abs=1e-6)

    def test_empty_initial_rejected(self):
        m = ctmc.build(1, RateParams(0.5))
        with pytest.raises(ValueError):
            ctmc.beta_exact(m, ctmc.ABSORBING)

    def test_gamma_zero_divergence(self):
        m = ctmc.build(1, RateParams(0.0))
        with pytest.raises(ValueError, match="gamma = 0"):
            ctmc.beta_exact(m, 7)
