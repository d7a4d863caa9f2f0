"""
Unit тесты для мягкого и жёсткого скоров
"""

import math

import numpy as np
import pandas as pd
import pytest
import yaml
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from src.data.volume import Volume3D, VolumeKind
from src.metrics.scores import (
    CaseScore, ScoreReport, default_zeta, hard_score, score_batch, soft_score,
    DimensionMismatchError, EmptyBatchError, ScoringError
)


COHORT_HARD = [0.782, 0.830, 0.689, 0.656, 0.735, 0.835, 0.721, 0.674, 0.701, 0.690]

unit_values = arrays(np.float64, (2, 2, 2), elements=st.floats(0.0, 1.0))


def _volume(values, dims=(2, 2, 2), kind=VolumeKind.SCALAR) -> Volume3D:
    array = np.broadcast_to(np.asarray(values, dtype=np.float64), dims)
    return Volume3D(array, (1.0, 1.0, 1.0), kind)


def _binary(values, dims=(2, 2, 2)) -> Volume3D:
    return _volume(values, dims, VolumeKind.BINARY)


class TestSoftScore:
    """Тесты для мягкого скора"""
    
    def test_identity(self):
        truth = _binary([[[0, 1], [1, 0]], [[0, 0], [1, 1]]])
        assert soft_score(truth, truth) == 1.0
    
    def test_half_prediction(self):
        """truth нули, pred 0.5 - 1 - 8·0.25/8 = 0.75"""
        assert soft_score(_binary(0.0), _volume(0.5)) == pytest.approx(0.75)
    
    def test_all_wrong(self):
        assert soft_score(_binary(1.0), _volume(0.0)) == 0.0
    
    def test_not_clamped(self):
        """Большие небинарные значения дают отрицательный скор"""
        assert soft_score(_binary(0.0), _volume(3.0)) == pytest.approx(-8.0)
    
    def test_dims_mismatch(self):
        with pytest.raises(DimensionMismatchError):
            soft_score(_binary(0.0), _volume(0.0, dims=(2, 2, 1)))
    
    @given(unit_values, unit_values)
    def test_symmetric_and_bounded(self, a, b):
        first, second = _volume(a), _volume(b)
        assert soft_score(first, second) == soft_score(second, first)
        assert soft_score(first, second) <= 1.0
        if np.max(np.abs(a - b)) > 1e-6:
            assert soft_score(first, second) < 1.0


class TestHardScore:
    """Тесты для жёсткого скора"""
    
    def test_above_threshold(self):
        """pred 0.6, truth единицы, ζ=0.5 - скор 1"""
        assert hard_score(_binary(1.0), _volume(0.6), 0.5) == 1.0
    
    def test_strict_threshold(self):
        """Значения, равные ζ, обнуляются"""
        assert hard_score(_binary(1.0), _volume(0.5), 0.5) == 0.0
    
    def test_zero_threshold(self):
        assert hard_score(_binary(1.0), _volume(0.01), 0.0) == 1.0
    
    def test_invalid_zeta(self):
        with pytest.raises(ScoringError):
            hard_score(_binary(1.0), _volume(0.6), 1.5)
    
    @given(st.floats(0.0, 0.999))
    def test_binary_prediction_matches_soft(self, zeta):
        """Для бинарного pred жёсткий скор равен мягкому"""
        truth = _binary([[[0, 1], [1, 0]], [[0, 0], [1, 1]]])
        pred = _binary([[[1, 1], [0, 0]], [[0, 1], [1, 0]]])
        assert hard_score(truth, pred, zeta) == soft_score(truth, pred)
    
    @given(unit_values, st.floats(0.0, 1.0), st.floats(0.0, 1.0))
    def test_piecewise_constant(self, values, z1, z2):
        """Скор меняется только при переходе через значения pred"""
        lo, hi = sorted((z1, z2))
        truth = _binary([[[0, 1], [1, 0]], [[0, 0], [1, 1]]])
        pred = _volume(values)
        if not np.any((values > lo) & (values <= hi)):
            assert hard_score(truth, pred, lo) == hard_score(truth, pred, hi)
    
    def test_default_zeta(self):
        pred = _volume(np.linspace(0, 1, 8).reshape(2, 2, 2))
        assert default_zeta(pred) == pytest.approx(np.percentile(np.linspace(0, 1, 8), 95))
        assert 0.0 <= default_zeta(_volume(3.0)) <= 1.0


class TestScoreBatch:
    """Тесты для пакетной оценки"""
    
    def test_single_case(self):
        report = score_batch([(_binary(1.0), _volume(0.6))], zeta=0.5)
        assert report.n == 1
        assert report.hard == 1.0
        assert report.hard_std == 0.0
        assert report.per_case[0].zeta == 0.5
    
    def test_two_cases(self):
        """soft 0.8 и 0.6 - среднее 0.7, std 0.1"""
        truth = _binary(0.0, dims=(5, 1, 1))
        first = _volume(np.array([1, 0, 0, 0, 0]).reshape(5, 1, 1), dims=(5, 1, 1))
        second = _volume(np.array([1, 1, 0, 0, 0]).reshape(5, 1, 1), dims=(5, 1, 1))
        report = score_batch([(truth, first), (truth, second)], zeta=0.5, case_ids=['a', 'b'])
        assert report.soft == pytest.approx(0.7)
        assert report.soft_std == pytest.approx(0.1)
        assert [c.case_id for c in report.per_case] == ['a', 'b']
    
    def test_default_zeta_recorded(self):
        report = score_batch([(_binary(1.0), _volume(np.linspace(0, 1, 8).reshape(2, 2, 2)))])
        assert report.zeta is None
        assert report.per_case[0].zeta is not None
    
    def test_empty(self):
        with pytest.raises(EmptyBatchError):
            score_batch([])
        with pytest.raises(EmptyBatchError):
            ScoreReport([])
    
    def test_case_ids_length(self):
        with pytest.raises(ScoringError):
            score_batch([(_binary(1.0), _volume(0.6))], case_ids=['a', 'b'])


class TestCohortAggregation:
    """Сводка десяти жёстких скоров клинической серии"""
    
    @pytest.fixture
    def report(self) -> ScoreReport:
        return ScoreReport([CaseScore(f"patient_{i + 1}", 1.0, h, 0.5) for i, h in enumerate(COHORT_HARD)], 0.5)
    
    def test_mean(self, report):
        assert report.hard == pytest.approx(0.7313, abs=5e-5)
    
    def test_spread_convention(self, report):
        """0.0192 воспроизводит генеральное std / sqrt(n), а не выборочное"""
        assert report.hard_std == pytest.approx(np.std(COHORT_HARD), abs=1e-12)
        assert report.hard_sem == pytest.approx(0.0192, abs=1e-4)
        sample_sem = np.std(COHORT_HARD, ddof=1) / math.sqrt(len(COHORT_HARD))
        assert abs(sample_sem - 0.0192) > abs(report.hard_sem - 0.0192)
    
    def test_format(self, report):
        assert "hard 0.7313 ± 0.0191" in report.format()
    
    def test_write(self, tmp_path, report):
        csv_path, yaml_path = report.write(tmp_path)
        table = pd.read_csv(csv_path)
        assert list(table["case"].iloc[-3:]) == ['mean', 'std', 'sem']
        assert len(table) == len(COHORT_HARD) + 3
        payload = yaml.safe_load(yaml_path.read_text(encoding='utf-8'))
        assert payload['hard']['mean'] == pytest.approx(0.7313, abs=5e-5)
        assert len(payload['per_case']) == len(COHORT_HARD)
