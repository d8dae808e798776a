import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate

from bandlab.errors import InputError
from bandlab.learners import LearnerSpec, ZeroModel, fit_polynomial, fit_sinc_interpolant
from bandlab.riskbounds import (
    approx_band_bound,
    diagonal_bound,
    difficulty,
    empirical_risk,
    expected_risk_mc,
    hypercube_bound,
    mean_expected_risk,
    model_distance_mc,
    theorem2_bound,
)
from bandlab.sampling import Dataset, isotropic_gaussian, make_dataset
from bandlab.targets import cosine_target, synth_approx, synth_strict


def exact_theorem2(K, B, sigma, H, n):
    """(sqrt2 K B sigma)^(2(n+1)) H^2 / (n+1)! in rational arithmetic."""
    K, B, sigma, H = (Fraction(v) for v in (K, B, sigma, H))
    return (2 * (K * B * sigma) ** 2) ** (n + 1) * H**2 / math.factorial(n + 1)


@pytest.fixture(scope="module")
def cosx():
    return cosine_target([1.0], [[1.0]], [0.0])


class TestEmpiricalRisk:
    def test_examples(self):
        assert empirical_risk(ZeroModel(1), Dataset([[0.0], [1.0]], [1.0, -1.0])) == 1.0
        assert empirical_risk(ZeroModel(1), Dataset([[0.0]], [2.0])) == 4.0

    def test_empty_dataset_warns(self):
        with pytest.warns(RuntimeWarning):
            assert empirical_risk(ZeroModel(1), Dataset(np.zeros((0, 1)), [])) == 0.0

    def test_dimension_mismatch(self):
        with pytest.raises(InputError):
            empirical_risk(ZeroModel(2), Dataset([[0.0]], [1.0]))


class TestExpectedRisk:
    def test_target_against_itself(self, cosx, std_normal):
        est = expected_risk_mc(cosx, cosx, std_normal, 1000, seed=1)
        assert est.mean == 0.0 and est.std_error == 0.0

    def test_zero_model_on_cosine(self, cosx, std_normal):
        closed = (1 + math.exp(-2)) / 2
        quad, _ = integrate.quad(lambda x: math.cos(x) ** 2 * math.exp(-x * x / 2) / math.sqrt(2 * math.pi),
                                 -math.inf, math.inf)
        assert closed == pytest.approx(quad, rel=1e-10)
        est = expected_risk_mc(ZeroModel(1), cosx, std_normal, 100_000, seed=2)
        assert abs(est.mean - closed) <= 3 * est.std_error

    def test_std_error_shrinks_with_M(self, cosx, std_normal):
        a = expected_risk_mc(ZeroModel(1), cosx, std_normal, 50_000, seed=3)
        b = expected_risk_mc(ZeroModel(1), cosx, std_normal, 100_000, seed=3)
        assert b.std_error / a.std_error == pytest.approx(1 / math.sqrt(2), rel=0.05)

    def test_std_error_definition(self, cosx, std_normal):
        from bandlab.sampling import draw_inputs
        est = expected_risk_mc(ZeroModel(1), cosx, std_normal, 5000, seed=4)
        sq = np.cos(draw_inputs(std_normal, 5000, 4, "eval")[:, 0]) ** 2
        assert est.mean == pytest.approx(sq.mean(), rel=1e-13)
        assert est.std_error == pytest.approx(sq.std(ddof=1) / math.sqrt(5000), rel=1e-10)

    def test_deterministic(self, cosx, std_normal):
        a = expected_risk_mc(ZeroModel(1), cosx, std_normal, 20_000, seed=5)
        assert a == expected_risk_mc(ZeroModel(1), cosx, std_normal, 20_000, seed=5)

    def test_dimension_mismatch(self, cosx):
        with pytest.raises(InputError):
            expected_risk_mc(ZeroModel(1), cosx, isotropic_gaussian(2, 1.0), 10, 0)


class TestMeanExpectedRisk:
    def test_oracle_learner(self, band_half_target, std_normal):
        r = mean_expected_risk(band_half_target, std_normal, LearnerSpec("oracle"), 8, 3, 1000, 0)
        assert r.mean == 0.0 and r.n_failed == 0

    def test_single_trial_consistency(self, band_half_target, std_normal):
        r = mean_expected_risk(band_half_target, std_normal, LearnerSpec("poly"), 16, 1, 5000, 7)
        tr = r.trials[0]
        ds = make_dataset(band_half_target, std_normal, 16, tr.seed)
        direct = expected_risk_mc(fit_polynomial(ds), band_half_target, std_normal, 5000, tr.seed)
        assert r.mean == direct.mean == tr.expected.mean

    def test_threads_do_not_change_results(self, band_half_target, std_normal):
        spec = LearnerSpec("poly")
        a = mean_expected_risk(band_half_target, std_normal, spec, 16, 6, 3000, 11, threads=1)
        b = mean_expected_risk(band_half_target, std_normal, spec, 16, 6, 3000, 11, threads=4)
        assert a.mean == b.mean
        assert [t.expected for t in a.trials] == [t.expected for t in b.trials]

    def test_failed_trials_are_marked(self, std_normal):
        t = synth_approx(1, 1.0, 4, 1.0, seed=0)  # no declared band for the sinc learner
        r = mean_expected_risk(t, std_normal, LearnerSpec("sinc"), 8, 2, 100, 0)
        assert r.n_failed == 2 and math.isnan(r.mean)

    def test_polynomial_below_bound(self, band_half_target, std_normal):
        r = mean_expected_risk(band_half_target, std_normal, LearnerSpec("poly"), 32, 20, 20_000, 0)
        below = [t.expected.mean <= theorem2_bound(1, 0.5, 1.0, 1.0, t.model.degree).bound
                 for t in r.trials]
        assert np.mean(below) >= 0.8


class TestTheorem2Bound:
    @pytest.mark.parametrize("n,expected", [(0, 2.0), (2, 8 / 6), (3, 16 / 24)])
    def test_examples(self, n, expected):
        assert theorem2_bound(1, 1.0, 1.0, 1.0, n).bound == pytest.approx(expected, rel=1e-12)

    @pytest.mark.parametrize("K,B,sigma,H", [(1, 0.5, 1.0, 1.0), (2, 0.75, 1.5, 2.0),
                                             (3, 0.25, 2.0, 0.5)])
    @pytest.mark.parametrize("n", range(0, 21))
    def test_against_exact_rationals(self, K, B, sigma, H, n):
        exact = float(exact_theorem2(K, B, sigma, H, n))
        assert theorem2_bound(K, B, sigma, H, n).bound == pytest.approx(exact, rel=1e-12)

    @pytest.mark.parametrize("c", [0.1, 2.0, 10.0])
    def test_scale_invariance(self, c):
        for n in (0, 5, 30):
            a = theorem2_bound(2, 0.7 * c, 1.3 / c, 1.0, n).bound
            assert a == pytest.approx(theorem2_bound(2, 0.7, 1.3, 1.0, n).bound, rel=1e-12)

    @settings(max_examples=50, deadline=None)
    @given(st.integers(1, 5), st.floats(0.01, 3.0), st.floats(0.01, 3.0), st.floats(0.1, 5.0),
           st.integers(0, 200))
    def test_successive_ratio(self, K, B, sigma, H, n):
        a = theorem2_bound(K, B, sigma, H, n)
        b = theorem2_bound(K, B, sigma, H, n + 1)
        ratio = math.exp(b.log_bound - a.log_bound)
        assert ratio == pytest.approx(2 * (K * B * sigma) ** 2 / (n + 2), rel=1e-10)

    def test_no_overflow(self):
        for n in (10**4, 10**5):
            r = theorem2_bound(1, 1.0, 1.0, 1.0, n)
            assert math.isfinite(r.log_bound) and r.bound >= 0.0
        big = theorem2_bound(10, 100.0, 100.0, 1.0, 1000)
        assert big.bound == math.inf and math.isfinite(big.log_bound)

    def test_report_consistency(self):
        r = theorem2_bound(2, 1.0, 0.5, 1.0, 4)
        assert r.bound == pytest.approx(math.exp(r.log_bound), rel=1e-15)
        assert r.kind == "theorem2" and r.to_dict()["inputs"]["sigma"] == 0.5

    @pytest.mark.parametrize("args", [(0, 1.0, 1.0, 1.0, 1), (1, -1.0, 1.0, 1.0, 1),
                                      (1, 1.0, 0.0, 1.0, 1), (1, 1.0, 1.0, 1.0, -1)])
    def test_invalid(self, args):
        with pytest.raises(InputError):
            theorem2_bound(*args)


class TestDiagonalBound:
    @pytest.mark.parametrize("n", [0, 3, 11])
    def test_equal_axes_match_isotropic(self, n):
        assert diagonal_bound(3, [0.4] * 3, [1.2] * 3, 1.0, n).bound == \
            theorem2_bound(3, 0.4, 1.2, 1.0, n).bound

    @pytest.mark.parametrize("n", [0, 1, 4])
    def test_zero_axis_halves(self, n):
        # per-axis term still carries the K=2 factor
        single = float(exact_theorem2(2, 1, 1, 1, n))
        assert diagonal_bound(2, [1.0, 0.0], [1.0, 1.0], 1.0, n).bound == \
            pytest.approx(single / 2, rel=1e-12)

    def test_against_exact_mean(self):
        Bk, sk = [0.5, 1.0, 0.25], [1.0, 0.5, 2.0]
        exact = sum(exact_theorem2(3, b, s, 1, 6) for b, s in zip(Bk, sk)) / 3
        assert diagonal_bound(3, Bk, sk, 1.0, 6).bound == pytest.approx(float(exact), rel=1e-12)

    @settings(max_examples=40, deadline=None)
    @given(st.lists(st.floats(0.0, 3.0), min_size=2, max_size=2), st.floats(0.0, 1.0),
           st.integers(0, 30))
    def test_monotone_in_each_band(self, Bk, bump, n):
        lo = diagonal_bound(2, Bk, [1.0, 1.0], 1.0, n).bound
        hi = diagonal_bound(2, [Bk[0] + bump, Bk[1]], [1.0, 1.0], 1.0, n).bound
        assert hi >= lo * (1 - 1e-12)

    def test_length_mismatch(self):
        with pytest.raises(InputError):
            diagonal_bound(2, [1.0], [1.0, 1.0], 1.0, 2)


class TestHypercubeBound:
    @pytest.mark.parametrize("K,n,expected", [(1, 0, 1.0), (1, 1, 0.25), (2, 0, 4.0)])
    def test_examples(self, K, n, expected):
        assert hypercube_bound(K, 1.0, 1.0, 1.0, n).bound == pytest.approx(expected, rel=1e-14)

    @pytest.mark.parametrize("n", range(0, 21))
    def test_against_exact_rationals(self, n):
        K, B, U, H = 2, Fraction(3, 4), Fraction(3, 2), Fraction(1)
        exact = ((K * B * U) ** (n + 1) * H / math.factorial(n + 1)) ** 2
        assert hypercube_bound(2, 0.75, 1.5, 1.0, n).bound == pytest.approx(float(exact), rel=1e-12)


class TestApproxBandBound:
    def test_strict_target(self):
        t = synth_strict(1, 0.8, 6, 1.0, seed=2)
        res = approx_band_bound(t, 1, 1.0, 1.0, 5)
        assert res.B_star == t.max_norm and res.epsilon_star == 0.0
        assert res.bound == theorem2_bound(1, t.max_norm, 1.0, 1.0, 5).bound

    def test_two_component_hand_evaluation(self):
        t = cosine_target([0.5, 0.5], [[1.0], [3.0]], [0.0, 0.0], band=math.inf)
        at1 = float(exact_theorem2(1, 1, 1, 1, 4)) + 0.25
        at3 = float(exact_theorem2(1, 3, 1, 1, 4))
        res = approx_band_bound(t, 1, 1.0, 1.0, 4)
        assert res.objective == pytest.approx([at1, at3], rel=1e-12)
        assert res.B_star == (1.0 if at1 <= at3 else 3.0)
        assert res.bound == pytest.approx(min(at1, at3), rel=1e-12)
        assert "units_assumed_compatible" in res.flags

    @settings(max_examples=25, deadline=None)
    @given(st.integers(0, 10**6), st.integers(0, 20))
    def test_minimum_over_grid(self, seed, n):
        t = synth_approx(2, 1.0, 10, 1.0, seed)
        res = approx_band_bound(t, 2, 1.0, 1.0, n)
        assert np.all(res.bound <= res.objective)
        assert res.epsilon_star**2 <= 1.0


class TestDifficulty:
    def test_examples(self):
        assert difficulty(2, 3, 0.5) == 3.0
        assert difficulty(1, 1, 1) == 1.0
        assert difficulty(3, 2 * 0.7, 1.1) == 2 * difficulty(3, 0.7, 1.1)


@pytest.fixture(scope="module")
def pair(band_half_target, std_normal):
    ds = make_dataset(band_half_target, std_normal, 16, 3)
    return ds, fit_polynomial(ds, exact=True), fit_sinc_interpolant(ds, 0.5, ridge=0.0)


class TestModelDistance:
    def test_identical_models(self, pair, std_normal):
        _, p, _ = pair
        assert model_distance_mc(p, p, std_normal, 1000, 0).mean == 0.0

    def test_symmetric(self, pair, std_normal):
        _, p, s = pair
        assert model_distance_mc(p, s, std_normal, 5000, 1) == model_distance_mc(s, p, std_normal, 5000, 1)

    def test_triangle(self, pair, band_half_target, std_normal):
        _, p, s = pair
        M, seed = 20_000, 4
        d = model_distance_mc(p, s, std_normal, M, seed)
        ra = expected_risk_mc(p, band_half_target, std_normal, M, seed)
        rb = expected_risk_mc(s, band_half_target, std_normal, M, seed)
        slack = 5 * (d.std_error + ra.std_error + rb.std_error)
        assert math.sqrt(d.mean) <= math.sqrt(ra.mean) + math.sqrt(rb.mean) + slack
