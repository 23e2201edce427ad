"""Unit tests for the privacy primitives."""

import math

import numpy as np
import pytest

from conedp.eja import AlgebraDescriptor, identity, norm, to_coords, zero
from conedp.mechanisms import (
    PrivacyBudget,
    RandomSource,
    Sensitivity,
    advanced_composition,
    chi_square_tail_thresholds,
    exponential_mechanism,
    exponential_mechanism_error_bound,
    exponential_mechanism_sample,
    gaussian_mechanism,
    gaussian_sigma,
    gibbs_probabilities,
    l1_gaussian_mechanism,
    linf_gaussian_mechanism,
)

S2 = AlgebraDescriptor.sym(2)


class TestTypes:
    def test_budget_validation(self):
        PrivacyBudget(1.0, 0.0)
        with pytest.raises(ValueError):
            PrivacyBudget(0.0, 0.1)
        with pytest.raises(ValueError):
            PrivacyBudget(1.0, 1.25)  # the would-be sigma=0 edge is rejected here
        with pytest.raises(ValueError):
            PrivacyBudget(1.0, -0.1)

    def test_sensitivity_validation(self):
        Sensitivity(0.0, "linf")
        with pytest.raises(ValueError):
            Sensitivity(-1.0)
        with pytest.raises(ValueError):
            Sensitivity(1.0, "spectral")


class TestRandomSource:
    def test_reproducible_streams(self):
        a = RandomSource(123)
        b = RandomSource(123)
        assert np.array_equal(a.uniform(64), b.uniform(64))
        assert np.array_equal(a.standard_normal(65), b.standard_normal(65))
        assert RandomSource(123).uniform() != RandomSource(124).uniform()

    def test_substreams_are_independent(self):
        root = RandomSource(9)
        s0 = root.substream(0).uniform(8)
        s1 = root.substream(1).uniform(8)
        assert not np.array_equal(s0, s1)
        assert np.array_equal(s0, RandomSource(9).substream(0).uniform(8))

    def test_normal_moments(self):
        z = RandomSource(7).standard_normal(200_000)
        assert abs(float(np.mean(z))) < 0.01
        assert abs(float(np.var(z)) - 1.0) < 0.02


class TestGaussian:
    def test_sigma_formula(self):
        val = gaussian_sigma(Sensitivity(1.0, "l2"), PrivacyBudget(1.0, 0.05))
        assert val == pytest.approx(math.sqrt(2.0 * math.log(25.0)))
        assert val == pytest.approx(2.5373, abs=1e-4)
        quadrupled = gaussian_sigma(Sensitivity(2.0, "l2"), PrivacyBudget(0.5, 0.05))
        assert quadrupled == pytest.approx(4.0 * val)
        with pytest.raises(ValueError):
            gaussian_sigma(Sensitivity(1.0, "l2"), PrivacyBudget(1.0, 0.0))

    def test_sigma_zero_returns_input(self):
        x = identity(S2)
        out = gaussian_mechanism(x, 0.0, RandomSource(0))
        assert out is x

    def test_fixed_seed_is_deterministic(self):
        x = identity(S2)
        a = gaussian_mechanism(x, 1.0, RandomSource(5))
        b = gaussian_mechanism(x, 1.0, RandomSource(5))
        assert np.array_equal(to_coords(a), to_coords(b))

    def test_noise_second_moment(self):
        # E|z|_2^2 = k sigma^2; k=3 for S2
        sigma = 0.7
        rng = RandomSource(11)
        draws = 100_000
        noise = sigma * np.asarray(rng.standard_normal(3 * draws)).reshape(draws, 3)
        mean_sq = float(np.mean(np.sum(noise**2, axis=1)))
        assert mean_sq == pytest.approx(3 * sigma**2, rel=0.02)

    def test_l1_delegates_with_same_scale(self):
        x = zero(S2)
        budget = PrivacyBudget(1.0, 0.01)
        a = l1_gaussian_mechanism(x, Sensitivity(2.0, "l1"), budget, RandomSource(3))
        b = gaussian_mechanism(x, gaussian_sigma(2.0, budget), RandomSource(3))
        assert np.array_equal(to_coords(a), to_coords(b))

    def test_linf_rank_scaling(self):
        x = zero(S2)
        budget = PrivacyBudget(1.0, 0.01)
        one = linf_gaussian_mechanism(x, Sensitivity(1.0, "linf"), 1, budget, RandomSource(3))
        four = linf_gaussian_mechanism(x, Sensitivity(1.0, "linf"), 4, budget, RandomSource(3))
        assert np.allclose(2.0 * to_coords(one), to_coords(four))

    def test_linf_uses_rank_not_dim(self):
        mixed = AlgebraDescriptor.from_spec("r2+s3+q4")
        budget = PrivacyBudget(1.0, 0.01)
        out = linf_gaussian_mechanism(
            zero(mixed), Sensitivity(1.0, "linf"), mixed.rank, budget, RandomSource(3)
        )
        expected_sigma = gaussian_sigma(math.sqrt(mixed.rank), budget)
        direct = gaussian_mechanism(zero(mixed), expected_sigma, RandomSource(3))
        assert np.array_equal(to_coords(out), to_coords(direct))
        assert mixed.rank != mixed.dim


class TestExponential:
    def test_two_point_gibbs(self):
        p = gibbs_probabilities([1.0, 0.0], 1.0, 2.0)
        assert p[0] == pytest.approx(math.e / (math.e + 1.0))
        n = 100_000
        sample = exponential_mechanism_sample([1.0, 0.0], 1.0, 2.0, RandomSource(1), n)
        freq = float(np.mean(sample == 0))
        se = math.sqrt(p[0] * (1 - p[0]) / n)
        assert abs(freq - p[0]) <= 3 * se

    def test_equal_scores_uniform(self):
        n = 50_000
        sample = exponential_mechanism_sample([2.0] * 5, 1.0, 1.0, RandomSource(2), n)
        counts = np.bincount(sample, minlength=5) / n
        assert np.all(np.abs(counts - 0.2) <= 4.0 / math.sqrt(n))

    def test_large_epsilon_selects_argmax(self):
        n = 20_000
        scores = [0.3, 0.9, 0.1, 0.5]
        sample = exponential_mechanism_sample(scores, 1.0, 1e4, RandomSource(3), n)
        assert float(np.mean(sample == 1)) >= 0.999

    def test_batched_matches_single_draw_law(self):
        # same uniform stream position -> identical selections
        scores = [0.2, 0.8, 0.5]
        single = [exponential_mechanism(scores, 1.0, 2.0, RandomSource(s)) for s in range(20)]
        for s, expected in enumerate(single):
            got = exponential_mechanism_sample(scores, 1.0, 2.0, RandomSource(s), 1)[0]
            assert got == expected

    def test_validation(self):
        with pytest.raises(ValueError):
            exponential_mechanism([], 1.0, 1.0, RandomSource(0))
        with pytest.raises(ValueError):
            exponential_mechanism([1.0], 0.0, 1.0, RandomSource(0))
        with pytest.raises(ValueError):
            exponential_mechanism([math.nan], 1.0, 1.0, RandomSource(0))

    def test_frequencies_match_softmax(self):
        rng = RandomSource(17)
        scores = np.asarray(rng.uniform(10))
        p = gibbs_probabilities(scores, 0.5, 1.5)
        n = 100_000
        sample = exponential_mechanism_sample(scores, 0.5, 1.5, RandomSource(18), n)
        freq = np.bincount(sample, minlength=10) / n
        assert np.all(np.abs(freq - p) <= 4.0 / math.sqrt(n))


class TestErrorBound:
    def test_examples(self):
        # (2*1/2) * log(e / (1/e)) = log(e^2) = 2
        assert exponential_mechanism_error_bound(
            math.e, 1.0, 2.0, 1.0 / math.e
        ) == pytest.approx(2.0)
        # exact form: 2*sens/eps * log(range/beta)
        assert exponential_mechanism_error_bound(8, 1.0, 2.0, 0.5) == pytest.approx(
            math.log(16.0)
        )
        assert exponential_mechanism_error_bound(
            8, 2.0, 2.0, 0.5
        ) == pytest.approx(2 * math.log(16.0))
        assert exponential_mechanism_error_bound(1, 1.0, 1.0, 0.999999) == pytest.approx(
            0.0, abs=1e-5
        )


class TestComposition:
    def test_basic_value(self):
        budget = PrivacyBudget(1.0, 1.0 / math.e)
        assert advanced_composition(budget, 1) == pytest.approx(1.0 / math.sqrt(8.0))

    def test_sqrt_scaling(self):
        budget = PrivacyBudget(2.0, 0.01)
        assert advanced_composition(budget, 4) == pytest.approx(
            advanced_composition(budget, 1) / 2.0
        )

    def test_matches_double_count_form(self):
        # eps/(4 sqrt(T log(1/delta))) is advanced composition over 2T steps
        budget = PrivacyBudget(1.7, 0.03)
        for t in (1, 7, 144):
            closed = budget.epsilon / (4.0 * math.sqrt(t * math.log(1.0 / budget.delta)))
            assert advanced_composition(budget, 2 * t) == pytest.approx(closed, rel=1e-12)

    def test_delta_zero_rejected(self):
        with pytest.raises(ValueError):
            advanced_composition(PrivacyBudget(1.0, 0.0), 3)


class TestChiSquare:
    def test_formula(self):
        t = math.log(100.0)
        upper, lower = chi_square_tail_thresholds(100, 1.0, t)
        assert upper == pytest.approx(100 + 2 * math.sqrt(100 * t) + 2 * t)
        assert upper == pytest.approx(152.12, abs=0.05)
        assert lower == pytest.approx(100 - 2 * math.sqrt(100 * t))

    def test_sigma_zero(self):
        assert chi_square_tail_thresholds(5, 0.0, 1.0) == (0.0, 0.0)

    def test_tail_exceedance(self):
        t = math.log(100.0)
        k, sigma, draws = 10, 1.3, 100_000
        upper, lower = chi_square_tail_thresholds(k, sigma, t)
        z = sigma * np.asarray(RandomSource(23).standard_normal(k * draws)).reshape(
            draws, k
        )
        sums = np.sum(z * z, axis=1)
        assert float(np.mean(sums >= upper)) <= 1.5 * math.exp(-t)
        assert float(np.mean(sums <= lower)) <= 1.5 * math.exp(-t)
