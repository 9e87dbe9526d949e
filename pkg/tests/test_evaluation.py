"""Tolerance bands, penalty arithmetic, composite-score branch semantics."""

from __future__ import annotations

import math

import numpy as np
import pytest

from hef_lab.errors import InvalidParameterError, NonFiniteInputError, SeriesTooShortError
from hef_lab.evaluation import (
    DEFAULT_WEIGHTS,
    HierarchicalEvaluation,
    MaeEvaluation,
    MetricWeights,
    PenaltyLevel,
    PenaltySchedule,
    apply_penalty,
    coefficient_of_variation,
    hef_score,
    maef_score,
    make_evaluation_function,
    recommend_mae_tolerance,
    recommend_rmse_tolerance,
)

# mean 10, population std sigma, so CV = sigma/10 exactly in binary arithmetic


def cv_pair(sigma: float) -> list[float]:
    return [10.0 - sigma, 10.0 + sigma]


# y_train with mean 10 and CV < 0.2: thresholds T_mae = 1.0, T_rmse = 1.5
LOW_CV_TRAIN = [9.0, 10.0, 11.0]


class TestToleranceBands:
    def test_mae_bands(self) -> None:
        assert recommend_mae_tolerance(cv_pair(1.0)) == 0.1
        assert recommend_mae_tolerance(cv_pair(3.0)) == 0.2
        assert recommend_mae_tolerance(cv_pair(6.0)) == 0.3
        assert recommend_mae_tolerance(cv_pair(17.0)) == 0.4

    def test_rmse_bands(self) -> None:
        assert recommend_rmse_tolerance(cv_pair(1.0)) == 0.15
        assert recommend_rmse_tolerance(cv_pair(3.0)) == 0.25
        assert recommend_rmse_tolerance(cv_pair(6.0)) == 0.35
        assert recommend_rmse_tolerance(cv_pair(30.0)) == 0.4

    def test_band_boundaries_are_strict(self) -> None:
        # CV exactly at a boundary falls into the higher band
        assert coefficient_of_variation(cv_pair(2.0)) == 0.2
        assert recommend_mae_tolerance(cv_pair(2.0)) == 0.2
        assert recommend_rmse_tolerance(cv_pair(2.0)) == 0.25
        assert coefficient_of_variation(cv_pair(5.0)) == 0.5
        assert recommend_mae_tolerance(cv_pair(5.0)) == 0.3
        assert coefficient_of_variation(cv_pair(10.0)) == 1.0
        assert recommend_mae_tolerance(cv_pair(10.0)) == 0.4

    def test_negative_mean_uses_absolute_value_for_cv(self) -> None:
        assert coefficient_of_variation([-9.0, -10.0, -11.0]) == pytest.approx(
            coefficient_of_variation([9.0, 10.0, 11.0])
        )

    def test_short_series_rejected(self) -> None:
        with pytest.raises(SeriesTooShortError):
            recommend_mae_tolerance([5.0])


class TestPenalties:
    def test_defaults(self) -> None:
        sched = PenaltySchedule()
        assert (sched.level_1, sched.level_2, sched.level_3, sched.level_4) == (1.2, 1.3, 1.5, 1.8)

    def test_multipliers_strictly_increasing(self) -> None:
        with pytest.raises(InvalidParameterError):
            PenaltySchedule(level_1=1.3, level_2=1.3, level_3=1.5, level_4=1.8)

    def test_apply_penalty_values(self) -> None:
        assert apply_penalty(0.19, PenaltyLevel.LEVEL_4) == pytest.approx(0.342, abs=1e-12)
        assert apply_penalty(7.0, PenaltyLevel.LEVEL_1) / 7.0 == pytest.approx(1.2, abs=1e-15)
        assert apply_penalty(0.0, PenaltyLevel.LEVEL_3) == 0.0

    def test_weights_defaults_and_validation(self) -> None:
        assert (DEFAULT_WEIGHTS.r2, DEFAULT_WEIGHTS.mae, DEFAULT_WEIGHTS.rmse) == (1.0, 1.0, 0.5)
        with pytest.raises(InvalidParameterError):
            MetricWeights(r2=-0.1)


class TestHefScore:
    def test_no_penalty_branch(self) -> None:
        score = hef_score([1.0] * 5, r2=0.9, mae=0.5, rmse=0.8, y_train=LOW_CV_TRAIN)
        assert score == pytest.approx(0.19, abs=1e-12)

    def test_rmse_under_only_branch(self) -> None:
        score = hef_score([1.0] * 5, r2=0.9, mae=1.2, rmse=0.8, y_train=LOW_CV_TRAIN)
        assert score == pytest.approx(0.26 * 1.3, abs=1e-12)

    def test_level4_overwrites_branched_score(self) -> None:
        score = hef_score([1.0, -1.0], r2=0.9, mae=0.5, rmse=0.8, y_train=LOW_CV_TRAIN)
        assert score == pytest.approx(0.19 * 1.8, abs=1e-12)

    def test_all_eight_branches(self) -> None:
        # (mae over?, rmse over?, negative present?) against hand arithmetic
        for mae_val, mae_over in ((0.5, False), (1.2, True)):
            for rmse_val, rmse_over in ((0.8, False), (1.6, True)):
                for negative in (False, True):
                    base = 1.0 * (1.0 - 0.9) + mae_val / 10.0 + 0.5 * rmse_val / 10.0
                    if negative:
                        expected = base * 1.8
                    elif not mae_over and not rmse_over:
                        expected = base
                    elif not mae_over:
                        expected = base * 1.2
                    elif not rmse_over:
                        expected = base * 1.3
                    else:
                        expected = base * 1.5
                    preds = [1.0, -1.0] if negative else [1.0, 1.0]
                    got = hef_score(preds, 0.9, mae_val, rmse_val, LOW_CV_TRAIN)
                    assert got == pytest.approx(expected, abs=1e-12), (
                        mae_over,
                        rmse_over,
                        negative,
                    )

    def test_perfect_fit_scores_zero(self) -> None:
        assert hef_score([1.0, 2.0], r2=1.0, mae=0.0, rmse=0.0, y_train=LOW_CV_TRAIN) == 0.0

    def test_stacking_flag(self) -> None:
        # mae and rmse both over threshold, plus a negative prediction
        base = 0.1 + 1.2 / 10.0 + 0.5 * 1.6 / 10.0
        overwrite = hef_score([-1.0], 0.9, 1.2, 1.6, LOW_CV_TRAIN)
        stacked = hef_score([-1.0], 0.9, 1.2, 1.6, LOW_CV_TRAIN, stack_level4=True)
        assert overwrite == pytest.approx(base * 1.8, abs=1e-12)
        assert stacked == pytest.approx(base * 1.5 * 1.8, abs=1e-12)

    def test_monotone_within_branch(self) -> None:
        rng = np.random.default_rng(17)
        for _ in range(50):
            r2_val = float(rng.uniform(0.0, 1.0))
            mae_val = float(rng.uniform(0.01, 0.9))
            rmse_val = float(rng.uniform(mae_val, 1.4))
            score = hef_score([1.0], r2_val, mae_val, rmse_val, LOW_CV_TRAIN)
            assert hef_score([1.0], r2_val + 1e-4, mae_val, rmse_val, LOW_CV_TRAIN) < score
            assert hef_score([1.0], r2_val, mae_val + 1e-4, rmse_val, LOW_CV_TRAIN) > score
            assert hef_score([1.0], r2_val, mae_val, rmse_val + 1e-4, LOW_CV_TRAIN) > score

    def test_penalty_ordering(self) -> None:
        base = 0.42
        scores = [
            base,
            apply_penalty(base, PenaltyLevel.LEVEL_1),
            apply_penalty(base, PenaltyLevel.LEVEL_2),
            apply_penalty(base, PenaltyLevel.LEVEL_3),
            apply_penalty(base, PenaltyLevel.LEVEL_4),
        ]
        assert scores == sorted(scores)

    def test_near_zero_mean_guard(self) -> None:
        # mean 0 is replaced by 1e-6; the score stays finite
        score = hef_score([1.0], 0.5, 0.1, 0.1, [-1.0, 1.0])
        assert math.isfinite(score)

    def test_negative_mean_hits_level3(self) -> None:
        # negative thresholds can never be met by non-negative errors
        y_train = [-9.0, -10.0, -11.0]
        base = 1.0 * (1.0 - 0.9) + 0.5 / -10.0 + 0.5 * 0.8 / -10.0
        got = hef_score([1.0], 0.9, 0.5, 0.8, y_train)
        assert got == pytest.approx(base * 1.5, abs=1e-12)

    def test_non_finite_inputs_error(self) -> None:
        with pytest.raises(NonFiniteInputError):
            hef_score([math.nan], 0.9, 0.5, 0.8, LOW_CV_TRAIN)
        with pytest.raises(NonFiniteInputError):
            hef_score([1.0], math.nan, 0.5, 0.8, LOW_CV_TRAIN)
        with pytest.raises(SeriesTooShortError):
            hef_score([1.0], 0.9, 0.5, 0.8, [10.0])


class TestMaef:
    def test_identity(self) -> None:
        assert maef_score(0.0) == 0.0
        assert maef_score(3.14) == 3.14

    def test_order_preservation(self) -> None:
        rng = np.random.default_rng(2)
        vals = sorted(rng.uniform(0, 100, size=20))
        scored = [maef_score(v) for v in vals]
        assert scored == sorted(scored)

    def test_non_finite(self) -> None:
        with pytest.raises(NonFiniteInputError):
            maef_score(math.inf)


class TestInterface:
    def test_factory(self) -> None:
        assert isinstance(make_evaluation_function("hef"), HierarchicalEvaluation)
        assert isinstance(make_evaluation_function("maef"), MaeEvaluation)
        with pytest.raises(InvalidParameterError):
            make_evaluation_function("rmsef")

    def test_interface_matches_functions(self) -> None:
        hef = make_evaluation_function("hef")
        maef = make_evaluation_function("maef")
        assert hef.score([1.0], 0.9, 0.5, 0.8, LOW_CV_TRAIN) == hef_score(
            [1.0], 0.9, 0.5, 0.8, LOW_CV_TRAIN
        )
        assert maef.score([1.0], 0.9, 0.5, 0.8, LOW_CV_TRAIN) == 0.5


class TestRankingFlip:
    def test_extreme_error_model_flips_between_objectives(self) -> None:
        """Model A: tiny errors except one large spike (good MAE, bad RMSE).
        Model B: uniform modest errors. MAEF must prefer A, the composite B."""
        y_train = LOW_CV_TRAIN  # mean 10 -> T_mae = 1.0, T_rmse = 1.5
        y_test = np.array([8.0, 9.0, 10.0, 11.0, 12.0] * 2)
        pred_a = y_test.copy()
        pred_a[-1] += 9.0  # one extreme miss
        pred_b = y_test + 0.95  # uniformly mediocre

        from hef_lab.metrics import mae, r2, rmse

        mae_a, rmse_a, r2_a = mae(y_test, pred_a), rmse(y_test, pred_a), r2(y_test, pred_a)
        mae_b, rmse_b, r2_b = mae(y_test, pred_b), rmse(y_test, pred_b), r2(y_test, pred_b)

        assert mae_a < mae_b  # A wins under plain MAE
        assert rmse_a > 1.5  # A trips the RMSE tolerance
        assert rmse_b < 1.5

        maef_a, maef_b = maef_score(mae_a), maef_score(mae_b)
        hef_a = hef_score(pred_a, r2_a, mae_a, rmse_a, y_train)
        hef_b = hef_score(pred_b, r2_b, mae_b, rmse_b, y_train)

        assert maef_a < maef_b
        assert hef_b < hef_a
