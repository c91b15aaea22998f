from __future__ import annotations

import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cped.bench import activation_disjoint, make_evalset, regime_domains
from cped.errors import ConditionalParameterError, DataError, InsufficientSamplesWarning, NumericalError
from cped.hpi import (
    RegimeStats,
    analyze,
    cped_within_variance,
    naive_within_variance,
    normalize_hpi,
    ped_variance,
    regime_stats,
    standard_local_variance,
)
from cped.space import EvaluationSet, Trial, parse_space
from cped.stats import QuantilePair

HALF = QuantilePair(1.0, 0.5)


def _unconditional_set(n, seed, dims=2):
    rng = np.random.default_rng(seed)
    doc = {"parameters": [
        {"name": f"p{k}", "regimes": [{"conditions": [], "domain": {"kind": "continuous", "lo": 0, "hi": 1}}]}
        for k in range(dims)
    ]}
    xs = rng.random((n, dims))
    f = (xs[:, 0] - 0.3) ** 2 + 0.3 * xs[:, 1:].sum(axis=1) + 0.05 * rng.standard_normal(n)
    trials = tuple(Trial({f"p{k}": float(x[k]) for k in range(dims)}, float(v)) for x, v in zip(xs, f))
    return EvaluationSet(parse_space(doc), trials)


class TestFourTrialInstance:
    def test_regime_stats_for_x(self, four_trials):
        r1, r2 = regime_stats(four_trials, "x", HALF)
        assert (r1.alpha, r1.beta, r1.divergence) == (1.0, 0.5, 0.0)
        assert (r2.alpha, r2.beta, r2.divergence) == (0.0, 0.5, 0.0)
        assert r2.inactive and not r1.inactive
        assert r1.n_top_prime == 2 and r1.n_top == 2

    def test_regime_stats_for_c(self, four_trials):
        (r,) = regime_stats(four_trials, "c", HALF)
        assert (r.alpha, r.beta) == (1.0, 1.0)
        # smoothed PMFs (3/4, 1/4) against (1/2, 1/2)
        assert r.divergence == pytest.approx(0.25)
        (exact,) = regime_stats(four_trials, "c", HALF, smoothing=0.0)
        assert exact.divergence == pytest.approx(1.0)

    def test_within_variance_of_x_is_zero(self, four_trials):
        stats = regime_stats(four_trials, "x", HALF)
        assert cped_within_variance(stats, HALF) == 0.0
        assert naive_within_variance(stats, HALF) == 0.0

    def test_standard_variance_of_x(self, four_trials):
        bd = standard_local_variance(regime_stats(four_trials, "x", HALF), HALF, "x")
        assert bd.within == 0.0
        assert bd.inter == pytest.approx(0.25)
        assert bd.total == pytest.approx(0.25)
        assert bd.empirical_ratio == pytest.approx(0.5)

    def test_gating_leakage(self, four_trials):
        x = standard_local_variance(regime_stats(four_trials, "x", HALF, smoothing=0.0), HALF)
        c = standard_local_variance(regime_stats(four_trials, "c", HALF, smoothing=0.0), HALF)
        assert x.total == pytest.approx(x.within + c.total, abs=1e-12)

    def test_normalized_report(self, four_trials):
        report = analyze(four_trials, HALF, "cped")
        assert report.normalized == {"c": 1.0, "x": 0.0}
        assert not report.degenerate
        exact = analyze(four_trials, HALF, "cped", smoothing=0.0)
        assert exact.raw == pytest.approx({"c": 0.25, "x": 0.0})

    def test_ped_refuses_conditional_parameters(self, four_trials):
        with pytest.raises(ConditionalParameterError, match="cped"):
            analyze(four_trials, HALF, "ped")


class TestEstimators:
    def _stats(self, *rows):
        return [RegimeStats(i + 1, a, b, 1, 1, d) for i, (a, b, d) in enumerate(rows)]

    def test_single_regime_reduces_to_kappa_squared_divergence(self):
        stats = self._stats((1.0, 1.0, 0.8))
        assert cped_within_variance(stats, HALF) == pytest.approx(0.25 * 0.8)

    def test_naive_ignores_weights(self):
        stats = self._stats((0.9, 0.3, 0.4), (0.1, 0.7, 0.4))
        assert naive_within_variance(stats, HALF) == pytest.approx(2 * 0.25 * 0.4)

    def test_weights(self):
        stats = self._stats((0.9, 0.3, 0.4), (0.1, 0.7, 0.2))
        expected = 0.25 * (0.81 / 0.3 * 0.4 + 0.01 / 0.7 * 0.2)
        assert cped_within_variance(stats, HALF) == pytest.approx(expected)

    def test_matching_shares_have_no_inter_variance(self):
        bd = standard_local_variance(self._stats((0.4, 0.4, 0.0), (0.6, 0.6, 0.0)), HALF)
        assert bd.total == 0.0

    def test_regimes_missing_from_top_set_are_skipped(self):
        stats = self._stats((1.0, 1.0, 0.5), (0.0, 0.0, 0.0))
        assert cped_within_variance(stats, HALF) == pytest.approx(0.125)

    @pytest.mark.parametrize("seed", range(5))
    def test_cped_equals_ped_on_unconditional_parameters(self, seed):
        es = _unconditional_set(120, seed)
        q = QuantilePair(1.0, 0.2)
        for name in es.space.names:
            cped = cped_within_variance(regime_stats(es, name, q), q)
            assert abs(cped - ped_variance(es, name, q)) <= 1e-12

    def test_ped_identical_densities_give_zero(self):
        es = _unconditional_set(50, 0)
        space = es.space
        flat = EvaluationSet(space, tuple(Trial(t.params, 1.0) for t in es.trials))
        assert ped_variance(flat, "p0", QuantilePair(1.0, 0.5)) == 0.0

    def test_naive_within_matches_cped_when_unconditional(self):
        es = _unconditional_set(80, 3)
        q = QuantilePair(1.0, 0.3)
        assert analyze(es, q, "naive-within").raw == analyze(es, q, "cped").raw

    def test_insufficient_samples_warn_and_contribute_zero(self):
        es = make_evalset(activation_disjoint(), 60, 0)
        q = QuantilePair(1.0, 0.02)
        with pytest.warns(InsufficientSamplesWarning):
            stats = regime_stats(es, "x", q)
        assert any(s.insufficient for s in stats)
        assert all(s.divergence == 0.0 for s in stats if s.insufficient)


class TestNormalize:
    def test_examples(self):
        assert normalize_hpi({"c": 0.25, "x": 0.0}) == ({"c": 1.0, "x": 0.0}, False)
        assert normalize_hpi({"a": 1, "b": 1, "c": 2}) == ({"a": 0.25, "b": 0.25, "c": 0.5}, False)
        assert normalize_hpi({"a": 0.0, "b": 0.0}) == ({"a": 0.0, "b": 0.0}, True)

    def test_negative_is_an_error(self):
        with pytest.raises(NumericalError):
            normalize_hpi({"a": -1e-3})

    @given(st.dictionaries(st.text(min_size=1, max_size=3), st.floats(0, 1e6), min_size=1, max_size=6))
    def test_sums_to_one(self, raw):
        norm, degenerate = normalize_hpi(raw)
        if degenerate:
            assert all(v == 0 for v in norm.values())
        else:
            assert sum(norm.values()) == pytest.approx(1.0, abs=1e-9)


class TestAnalyze:
    def test_unknown_method_and_extension(self, four_trials):
        with pytest.raises(DataError):
            analyze(four_trials, HALF, "fanova")
        with pytest.raises(DataError):
            analyze(four_trials, HALF, "cped", extension="filtering")
        with pytest.raises(DataError):
            analyze(four_trials, HALF, "ped", extension="dropout")

    def test_report_dict_has_every_field(self, four_trials):
        d = analyze(four_trials, HALF).to_dict()
        assert set(d) == {
            "method", "extension", "quantiles", "kappa", "empirical_ratio", "grid_size",
            "smoothing", "raw", "normalized", "degenerate", "breakdowns",
        }
        assert d["breakdowns"]["x"]["regimes"][0]["alpha"] == 1.0

    def test_standard_is_at_least_within(self):
        es = make_evalset(regime_domains(), 200, 1)
        q = QuantilePair(1.0, 0.3)
        within, total = analyze(es, q, "cped").raw, analyze(es, q, "standard").raw
        assert all(total[k] >= within[k] for k in within)

    @settings(max_examples=15, deadline=None)
    @given(
        st.integers(0, 10_000),
        st.sampled_from(["cped", "standard", "naive-within"]),
        st.floats(0.05, 0.95),
    )
    def test_reports_are_normalized(self, seed, method, gamma_prime):
        es = make_evalset(activation_disjoint(), 150, seed)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", InsufficientSamplesWarning)
            report = analyze(es, QuantilePair(1.0, gamma_prime), method)
        assert all(v >= 0 for v in report.raw.values())
        if not report.degenerate:
            assert sum(report.normalized.values()) == pytest.approx(1.0, abs=1e-9)
