"""Bootstrap delay estimation, summary functionals, and grid search."""

import numpy as np
import pytest

from lagte import (
    InvalidArgumentError,
    LagSample,
    estimate_delay,
    functionals,
    grid_search,
    lemma1_interval,
)
from lagte.core import FULL_WINDOW
from conftest import fast_config


class TestFunctionals:
    def test_degenerate(self):
        assert functionals([10, 10, 10]) == (10.0, 0.0)

    def test_spread(self):
        mu, sigma2 = functionals([8, 10, 12])
        assert mu == 10.0
        assert sigma2 == pytest.approx(8.0 / 3.0, abs=1e-12)

    def test_singleton(self):
        assert functionals([5]) == (5.0, 0.0)

    def test_rejects_empty(self):
        with pytest.raises(InvalidArgumentError):
            functionals([])


class TestLemma1Interval:
    def test_zero_variance(self):
        assert lemma1_interval(10.0, 0.0, 300) == (10.0, 10.0)

    def test_direct_formula(self):
        lo, hi = lemma1_interval(10.0, 4.0, 100, 0.95)
        assert lo == pytest.approx(9.608, abs=1e-3)
        assert hi == pytest.approx(10.392, abs=1e-3)

    def test_unit_case(self):
        lo, hi = lemma1_interval(0.0, 1.0, 1, 0.95)
        assert lo == pytest.approx(-1.96, abs=1e-2)
        assert hi == pytest.approx(1.96, abs=1e-2)

    def test_rejects_bad_inputs(self):
        with pytest.raises(InvalidArgumentError):
            lemma1_interval(0.0, 1.0, 0)
        with pytest.raises(InvalidArgumentError):
            lemma1_interval(0.0, -1.0, 10)


class TestEstimateDelay:
    def test_lags_within_range_and_deterministic(self, sim_pair):
        source, target = sim_pair
        config = fast_config()
        a = estimate_delay(source, target, config)
        b = estimate_delay(source, target, config)
        assert a == b
        assert all(config.lag_min <= u <= config.lag_max for u in a.lags)
        assert a.n_reps == config.boot_reps

    def test_parallel_matches_serial(self, sim_pair):
        source, target = sim_pair
        config = fast_config()
        serial = estimate_delay(source, target, config, workers=None)
        parallel = estimate_delay(source, target, config, workers=2)
        assert serial == parallel

    def test_details_align_with_sample(self, sim_pair):
        source, target = sim_pair
        config = fast_config()
        sample, details = estimate_delay(
            source, target, config, return_details=True
        )
        assert details.lags == sample.lags
        assert len(details.best_ete) == config.boot_reps
        assert details.restarts >= 0

    def test_seed_changes_resample(self, sim_pair):
        source, target = sim_pair
        a = estimate_delay(source, target, fast_config(seed=0))
        b = estimate_delay(source, target, fast_config(seed=1))
        assert a.lags != b.lags

    def test_rejects_length_mismatch(self):
        with pytest.raises(InvalidArgumentError):
            estimate_delay(np.ones(50), np.ones(60), fast_config())

    def test_rejects_short_series(self):
        with pytest.raises(InvalidArgumentError):
            estimate_delay(np.ones(10), np.ones(10), fast_config(lag_max=12))


def _stub_for_scores(score_by_window, reps=100):
    def fake_estimate(source, target, config, workers=None):
        score = score_by_window[config.window]
        return LagSample(
            lags=(10,) * reps,
            mu_hat=10.0,
            sigma2_hat=score * reps,
            stderr=0.0,
            ci95=(10.0, 10.0),
        )

    return fake_estimate


class TestGridSearch:
    def test_published_score_profile_picks_window_20(self, sim_pair):
        source, target = sim_pair
        scores = {10: 5.0, 20: 1.59, 30: 1.97, 40: 2.52}
        result = grid_search(
            source,
            target,
            fast_config(),
            [120],
            [10, 20, 30, 40],
            estimate_fn=_stub_for_scores(scores),
        )
        assert result.best == (120, 20)
        assert min(result.scores) == result.scores[result.grid.index(result.best)]

    def test_single_cell(self, sim_pair):
        source, target = sim_pair
        result = grid_search(
            source,
            target,
            fast_config(),
            [100],
            [20],
            estimate_fn=_stub_for_scores({20: 1.0}),
        )
        assert result.best == (100, 20)
        assert len(result.grid) == 1

    def test_tie_prefers_smaller_window(self, sim_pair):
        source, target = sim_pair
        result = grid_search(
            source,
            target,
            fast_config(),
            [100],
            [30, 20],
            estimate_fn=_stub_for_scores({20: 1.0, 30: 1.0}),
        )
        assert result.best == (100, 20)

    def test_full_window_sorts_last_on_tie(self, sim_pair):
        source, target = sim_pair
        result = grid_search(
            source,
            target,
            fast_config(),
            [100],
            [FULL_WINDOW, 40],
            estimate_fn=_stub_for_scores({40: 1.0, FULL_WINDOW: 1.0}),
        )
        assert result.best == (100, 40)

    def test_invalid_cells_are_skipped_with_reason(self, sim_pair):
        source, target = sim_pair
        result = grid_search(
            source,
            target,
            fast_config(),
            [100, 500],
            [20],
            estimate_fn=_stub_for_scores({20: 1.0}),
        )
        assert result.grid == ((100, 20),)
        assert len(result.skipped) == 1
        assert result.skipped[0][0] == (500, 20)
        assert "exceeds" in result.skipped[0][1]

    def test_all_cells_invalid_raises(self, sim_pair):
        source, target = sim_pair
        with pytest.raises(InvalidArgumentError):
            grid_search(source, target, fast_config(), [500], [20])

    def test_real_small_run_is_deterministic(self, sim_pair):
        source, target = sim_pair
        config = fast_config(boot_reps=4, shuffle_reps=3)
        a = grid_search(source, target, config, [80, 120], [20, FULL_WINDOW])
        b = grid_search(source, target, config, [80, 120], [20, FULL_WINDOW])
        assert a == b
        assert len(a.grid) == 4
