import itertools

import pytest
from hypothesis import given, strategies as st

from spikelattice.model import (
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


def cfg(active, win):
    return Configuration(frozenset(active), win)


class TestWindow:
    def test_finite(self):
        w = Window.finite(-2, 2)
        assert w.n_sites == 5
        assert list(w.sites()) == [-2, -1, 0, 1, 2]
        assert w.contains(2) and not w.contains(3)
        assert w.truncation_edges() == ()

    def test_half_right(self):
        w = Window.half_right(0, 10)
        assert w.contains(0) and w.contains(10)
        assert not w.contains(-1)
        assert w.in_nominal(99) and not w.in_truncation(99)
        assert w.truncation_edges() == (10,)

    def test_half_left(self):
        w = Window.half_left(5, -5)
        assert w.truncation_edges() == (-5,)
        assert w.contains(-5) and not w.contains(-6)

    def test_line(self):
        w = Window.line(-4, 4)
        assert w.truncation_edges() == (-4, 4)
        assert w.in_nominal(1000)

    def test_bad_bounds(self):
        with pytest.raises(ValueError):
            Window.finite(3, 1)

    def test_subset_of(self):
        assert Window.finite(0, 3).subset_of(Window.half_right(0, 10))
        assert Window.half_right(0, 10).subset_of(Window.line(-5, 5))
        assert not Window.half_right(0, 10).subset_of(Window.finite(0, 3))


class TestConfiguration:
    def test_rejects_out_of_window(self):
        with pytest.raises(ValueError):
            cfg({7}, Window.finite(0, 3))

    def test_all_one_and_empty(self):
        w = Window.finite(-1, 1)
        assert all_one(w).active == {-1, 0, 1}
        assert empty(w).is_empty()


class TestForwardMaps:
    def test_leak_clears(self):
        w = Window.finite(0, 4)
        assert apply_leak(cfg({1, 2}, w), 1).active == {2}

    def test_leak_noop_on_quiescent(self):
        w = Window.finite(0, 4)
        c = cfg({1, 2}, w)
        assert apply_leak(c, 3) is c

    def test_spike_interior(self):
        w = Window.finite(0, 4)
        assert apply_spike(cfg({2}, w), 2).active == {1, 3}

    def test_spike_at_edge_drops_outside_neighbor(self):
        w = Window.finite(0, 4)
        assert apply_spike(cfg({0}, w), 0).active == {1}
        assert apply_spike(cfg({4}, w), 4).active == {3}

    def test_spike_keeps_already_active_neighbors(self):
        w = Window.finite(0, 4)
        assert apply_spike(cfg({1, 2}, w), 1).active == {0, 2}

    def test_spike_inactive_raises(self):
        w = Window.finite(0, 4)
        with pytest.raises(ValueError, match="inactive"):
            apply_spike(cfg({1}, w), 2)

    def test_outside_window_raises(self):
        w = Window.finite(0, 4)
        with pytest.raises(ValueError):
            apply_leak(cfg({1}, w), 9)

    def test_single_site_window_spike_empties(self):
        w = Window.finite(0, 0)
        assert apply_spike(cfg({0}, w), 0).is_empty()


class TestDualMaps:
    """The dual spike acts on each member independently: equal to the
    event site -> deleted, adjacent -> recruits the event site, distant
    -> untouched."""

    def test_member_at_event_site_deleted(self):
        w = Window.finite(-2, 2)
        assert dual_apply_spike(cfg({0}, w), 0).is_empty()

    def test_adjacent_member_recruits(self):
        w = Window.finite(-2, 2)
        assert dual_apply_spike(cfg({1}, w), 0).active == {0, 1}

    def test_mixed_members(self):
        # the member at 0 dies but the member at 1 recruits 0 back
        w = Window.finite(-2, 2)
        assert dual_apply_spike(cfg({0, 1}, w), 0).active == {0, 1}

    def test_distance_two_untouched(self):
        w = Window.finite(-2, 2)
        c = cfg({2}, w)
        assert dual_apply_spike(c, 0).active == {2}

    def test_dual_leak(self):
        w = Window.finite(-2, 2)
        assert dual_apply_leak(cfg({0, 1}, w), 0).active == {1}

    def test_additivity_exhaustive(self):
        """dual_apply_spike distributes over unions (checked over every
        subset of a 5-site window and every event site)."""
        w = Window.finite(0, 4)
        sites = list(w.sites())
        for i in sites:
            for r in range(len(sites) + 1):
                for a in itertools.combinations(sites, r):
                    whole = dual_apply_spike(cfg(a, w), i).active
                    union = frozenset().union(
                        *(dual_apply_spike(cfg({j}, w), i).active
                          for j in a)) if a else frozenset()
                    assert whole == union

    def test_forward_additivity_exhaustive(self):
        w = Window.finite(0, 4)
        sites = list(w.sites())
        for i in sites:
            for r in range(1, len(sites) + 1):
                for a in itertools.combinations(sites, r):
                    if i not in a:
                        continue
                    whole = apply_spike(cfg(a, w), i).active
                    parts = set()
                    for j in a:
                        c = cfg({j}, w)
                        parts |= (apply_spike(c, i).active if j == i
                                  else c.active)
                    assert whole == parts


def test_rate_params_rejects_negative():
    with pytest.raises(ValueError):
        RateParams(-0.1)
    assert RateParams(0.3).total_per_site == pytest.approx(1.3)


@given(st.sets(st.integers(-5, 5)), st.integers(-5, 5))
def test_dual_spike_changes_only_near_event(active, i):
    w = Window.finite(-5, 5)
    out = dual_apply_spike(cfg(active, w), i).active
    far = {j for j in active if abs(j - i) > 1}
    assert far <= out
    assert out - (active | {i}) == set()


@given(st.sets(st.integers(-5, 5), min_size=1), st.data())
def test_spike_preserves_monotonicity(active, data):
    """A ⊆ B and i active in both: images stay ordered."""
    w = Window.finite(-5, 5)
    i = data.draw(st.sampled_from(sorted(active)))
    extra = data.draw(st.sets(st.integers(-5, 5)))
    small = apply_spike(cfg(active, w), i).active
    big = apply_spike(cfg(active | extra, w), i).active
    assert small <= big
