"""Input-noise factor distribution and the scaled-maximum analysis."""

import numpy as np
import pytest
from scipy import stats

from spof.env_noise import (
    EnvNoiseProfile,
    estimate_cdf_FX,
    pdf_b_max,
    pdf_fX,
    prob_bmax_leq_one,
    sample_bmax_probability,
    sweep_sigma,
    tabulate_pdf_b_max,
    write_sweep_csv,
)
from spof.rng import substream


def _profile(sigma_tilde, h=0.0, l=7, count=100):
    return EnvNoiseProfile(sigma=1.0, sigma_tilde=sigma_tilde, h=h, l=l,
                           sample_count=count)


class TestFactorPdf:
    def test_matches_lognormal_for_h_zero(self):
        # With h = 0 the factor is exp of a centered Gaussian.
        for st in (0.5, 1.0, 2.0):
            prof = _profile(st)
            xs = np.linspace(0.05, 8.0, 100)
            ours = pdf_fX(xs, prof)
            oracle = stats.lognorm.pdf(xs, s=st)
            assert np.allclose(ours, oracle, atol=1e-12)

    def test_value_at_one(self):
        prof = _profile(1.0)
        assert abs(pdf_fX(1.0, prof) - 1.0 / np.sqrt(2 * np.pi)) < 1e-15

    def test_normalization_h_zero(self):
        prof = _profile(1.0)
        xs = np.linspace(1e-4, 50.0, 200_000)
        integral = np.trapezoid(pdf_fX(xs, prof), xs)
        assert abs(integral - 1.0) < 0.02

    def test_out_of_support_is_zero(self):
        prof = _profile(1.0, h=0.5)
        assert pdf_fX(-1.0, prof) == 0.0
        assert pdf_fX(0.0, prof) == 0.0
        # support edge for h > 0: 1 - h x + h = 0 at x = (1 + h)/h
        assert pdf_fX(3.5, prof) == 0.0


class TestFactorCdf:
    def test_huge_threshold(self):
        assert estimate_cdf_FX(_profile(1.0), 1e12, 20_000, seed=0) == 1.0

    def test_lognormal_median(self):
        est = estimate_cdf_FX(_profile(1.0), 1.0, 200_000, seed=1)
        assert abs(est - 0.5) < 0.01

    def test_zero_threshold(self):
        assert estimate_cdf_FX(_profile(1.0), 0.0, 20_000, seed=2) == 0.0

    def test_minimum_samples_enforced(self):
        with pytest.raises(ValueError, match="10000"):
            estimate_cdf_FX(_profile(1.0), 1.0, 100)


class TestBmaxPdf:
    def test_single_sample_single_unit_reduces_to_factor_pdf(self):
        prof = _profile(1.0, l=1, count=1)
        for b in (0.3, 1.0, 2.5):
            assert abs(pdf_b_max(b, prof) - pdf_fX(b, prof)) < 1e-12

    def test_normalizes_over_truncated_support(self):
        # sigma_tilde modest so the max rarely escapes (0, 20 l].
        prof = _profile(0.5, l=7, count=100)
        grid = np.linspace(1e-3, 20 * 7, 20_000)
        table = tabulate_pdf_b_max(prof, grid, mc_samples=200_000, seed=3)
        assert abs(table.trapezoid() - 1.0) < 0.03

    def test_mode_shifts_right_with_more_samples(self):
        # Oracle: directly sampled maxima move right as the count grows.
        grid = np.linspace(1e-3, 60.0, 5000)
        one = tabulate_pdf_b_max(_profile(1.0, count=1), grid, seed=4)
        hundred = tabulate_pdf_b_max(_profile(1.0, count=100), grid, seed=4)
        mode1 = grid[np.argmax(one.density)]
        mode100 = grid[np.argmax(hundred.density)]
        assert mode100 > mode1
        rng = substream(11, 0)
        draws1 = np.exp(rng.normal(0, 1.0, 20_000)) * 7
        draws100 = (np.exp(rng.normal(0, 1.0, (20_000, 100))) * 7).max(axis=1)
        assert np.median(draws100) > np.median(draws1)

    def test_invalid_support(self):
        with pytest.raises(ValueError):
            pdf_b_max(0.0, _profile(1.0))


class TestProbBmax:
    def test_always_a_probability(self):
        for st in (0.3, 1.0, 5.0):
            p = prob_bmax_leq_one(_profile(st), mc_samples=20_000)
            assert 0.0 <= p <= 1.0

    def test_degenerate_noise_limit(self):
        # sigma -> 0: every factor -> 1, so the scaled max -> l > 1 and
        # the probability vanishes; checked against direct simulation.
        prof = _profile(1e-3, l=7, count=100)
        assert prob_bmax_leq_one(prof, mc_samples=20_000) < 1e-12
        assert sample_bmax_probability(prof, reps=2000, seed=5) == 0.0

    def test_trapezoid_matches_direct_sampling(self):
        for st in (0.5, 1.0, 3.0):
            prof = _profile(st)
            trapz = prob_bmax_leq_one(prof, mc_samples=100_000, seed=6)
            direct = sample_bmax_probability(prof, reps=100_000, seed=7)
            assert abs(trapz - direct) < 0.02


class TestSweep:
    def test_single_sigma_single_row(self):
        rows = sweep_sigma([2.0], _profile(1.0), mc_samples=20_000)
        assert len(rows) == 1 and rows[0][0] == 2.0

    def test_deterministic(self):
        a = sweep_sigma([0.5, 1.0, 2.0], _profile(1.0), mc_samples=20_000, seed=9)
        b = sweep_sigma([0.5, 1.0, 2.0], _profile(1.0), mc_samples=20_000, seed=9)
        assert a == b

    def test_monotone_trend_within_noise(self):
        rows = sweep_sigma([0.5, 1.0, 2.0, 5.0], _profile(1.0), mc_samples=50_000,
                           seed=10)
        probs = np.array([p for _, p in rows])
        assert np.all(np.diff(probs) > -0.02)

    def test_csv(self, tmp_path):
        rows = sweep_sigma([1.0, 2.0], _profile(1.0), mc_samples=20_000)
        path = tmp_path / "sweep.csv"
        write_sweep_csv(path, rows)
        lines = path.read_text().strip().splitlines()
        assert lines[0] == "sigma,prob_bmax_leq_1"
        assert len(lines) == 3

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            sweep_sigma([], _profile(1.0))


class TestSensitivityReductionBound:
    def test_reduction_probability_dominates_bmax_bound(self):
        # Pr[noisy per-term sensitivity < clean] >= Pr[b_max <= 1]:
        # left side by direct factor-sum simulation, right side by the
        # trapezoidal order-statistic integral.
        prof = _profile(1.0, l=7, count=100)
        rng = substream(21, 0)
        factor_sums = np.exp(rng.normal(0, 1.0, (50_000, 7))).sum(axis=1)
        clean = 1.5
        lhs = float(np.mean(factor_sums * clean < clean))
        rhs = prob_bmax_leq_one(prof, mc_samples=50_000, seed=12)
        assert lhs >= rhs - 0.02


class TestVarianceConvention:
    def test_from_weights_default_and_literal(self):
        w = np.array([3.0, 4.0])  # norm 5
        correct = EnvNoiseProfile.from_weights(2.0, w)
        literal = EnvNoiseProfile.from_weights(2.0, w, paper_literal_variance=True)
        assert abs(correct.sigma_tilde - 2.0 * 5.0) < 1e-12
        assert abs(literal.sigma_tilde - 2.0 * np.sqrt(5.0)) < 1e-12


@pytest.mark.xfail(
    strict=True,
    reason="published claim not reproducible: the h > 0 factor density "
    "uses an inverse map that is not the inverse of the forward "
    "transform, so it does not normalize, and even a corrected density "
    "concentrates the h = 0.75 maximum far from the h = 0 one at "
    "sigma_tilde = 1; see the decisions ledger",
)
def test_total_variation_across_h_small():
    grid = np.linspace(1e-3, 140.0, 50_000)
    f0 = tabulate_pdf_b_max(_profile(1.0, h=0.0), grid, mc_samples=100_000, seed=13)
    f75 = tabulate_pdf_b_max(_profile(1.0, h=0.75), grid, mc_samples=100_000, seed=13)
    tv = 0.5 * np.trapezoid(np.abs(f0.density - f75.density), grid)
    assert tv < 0.15
