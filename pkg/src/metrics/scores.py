"""
Мягкий и жёсткий скоры между 3D-изображениями и пакетная оценка
"""

import math
from dataclasses import dataclass, field, asdict
from pathlib import Path
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
import yaml
from loguru import logger

from ..data.volume import Volume3D


DEFAULT_PERCENTILE = 95.0


def _check_dims(truth: Volume3D, pred: Volume3D) -> None:
    if truth.dims != pred.dims:
        raise DimensionMismatchError(f"Размеры не совпадают: {truth.dims} и {pred.dims}")


def soft_score(truth: Volume3D, pred: Volume3D) -> float:
    """
    d_s = 1 - Σ(truth - pred)² / (x·y·z)
    
    Не ограничен снизу: для небинарного pred с большими значениями
    может быть отрицательным.
    """
    _check_dims(truth, pred)
    t = truth.array.astype(np.float64)
    p = pred.array.astype(np.float64)
    return float(1.0 - np.sum((t - p) ** 2) / t.size)


def threshold_prediction(pred: Volume3D, zeta: float) -> np.ndarray:
    """Бинаризация pred > ζ (строгое неравенство)"""
    return (pred.array.astype(np.float64) > zeta).astype(np.float64)


def hard_score(truth: Volume3D, pred: Volume3D, zeta: float) -> float:
    """
    Мягкий скор против предсказания, бинаризованного порогом ζ
    
    Args:
        truth: Бинарная истина
        pred: Предсказание (вероятности или скаляр)
        zeta: Порог в [0, 1]
        
    Returns:
        float: d_h ∈ [0, 1]
    """
    _check_dims(truth, pred)
    if not 0.0 <= zeta <= 1.0:
        raise ScoringError(f"Порог ζ должен лежать в [0, 1]: {zeta}")
    t = truth.array.astype(np.float64)
    return float(1.0 - np.sum((t - threshold_prediction(pred, zeta)) ** 2) / t.size)


def default_zeta(pred: Volume3D, percentile: float = DEFAULT_PERCENTILE) -> float:
    """Порог по умолчанию - перцентиль значений предсказания"""
    return float(np.clip(np.percentile(pred.array.astype(np.float64), percentile), 0.0, 1.0))


@dataclass(frozen=True)
class CaseScore:
    """Скоры одного случая"""
    case_id: str
    soft: float
    hard: float
    zeta: Optional[float] = None


@dataclass
class ScoreReport:
    """
    Скоры по случаям и их сводка
    
    Среднее и стандартное отклонение (генеральное, ddof=0) пересчитываются
    из per_case; sem = std / sqrt(n).
    """
    per_case: List[CaseScore] = field(default_factory=list)
    zeta: Optional[float] = None
    
    def __post_init__(self):
        if not self.per_case:
            raise EmptyBatchError("Отчёт требует хотя бы один случай")
    
    def _column(self, name: str) -> np.ndarray:
        return np.array([getattr(c, name) for c in self.per_case], dtype=np.float64)
    
    @property
    def n(self) -> int:
        return len(self.per_case)
    
    @property
    def soft(self) -> float:
        return float(self._column('soft').mean())
    
    @property
    def hard(self) -> float:
        return float(self._column('hard').mean())
    
    @property
    def soft_std(self) -> float:
        return float(self._column('soft').std(ddof=0))
    
    @property
    def hard_std(self) -> float:
        return float(self._column('hard').std(ddof=0))
    
    @property
    def soft_sem(self) -> float:
        return self.soft_std / math.sqrt(self.n)
    
    @property
    def hard_sem(self) -> float:
        return self.hard_std / math.sqrt(self.n)
    
    def summary(self) -> dict:
        return {
            'n': self.n,
            'zeta': self.zeta,
            'soft': {'mean': self.soft, 'std': self.soft_std, 'sem': self.soft_sem},
            'hard': {'mean': self.hard, 'std': self.hard_std, 'sem': self.hard_sem},
        }
    
    def to_table(self) -> pd.DataFrame:
        """Таблица: строки случаев, затем mean, std и sem"""
        rows = [{'case': c.case_id, 'soft': c.soft, 'hard': c.hard, 'zeta': c.zeta} for c in self.per_case]
        rows.append({'case': 'mean', 'soft': self.soft, 'hard': self.hard, 'zeta': self.zeta})
        rows.append({'case': 'std', 'soft': self.soft_std, 'hard': self.hard_std, 'zeta': None})
        rows.append({'case': 'sem', 'soft': self.soft_sem, 'hard': self.hard_sem, 'zeta': None})
        return pd.DataFrame(rows, columns=['case', 'soft', 'hard', 'zeta'])
    
    def format(self) -> str:
        """Строка вида 'soft 0.9000 ± 0.0100 | hard 0.7313 ± 0.0191'"""
        return (
            f"soft {self.soft:.4f} ± {self.soft_sem:.4f} | "
            f"hard {self.hard:.4f} ± {self.hard_sem:.4f} (n={self.n})"
        )
    
    def write(self, out_dir: Union[str, Path]) -> Tuple[Path, Path]:
        """Запись scores.csv и scores.yaml"""
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        csv_path = out_dir / "scores.csv"
        yaml_path = out_dir / "scores.yaml"
        self.to_table().to_csv(csv_path, index=False)
        payload = self.summary()
        payload['per_case'] = [asdict(c) for c in self.per_case]
        with open(yaml_path, 'w', encoding='utf-8') as file:
            yaml.safe_dump(payload, file, sort_keys=False, allow_unicode=True)
        return csv_path, yaml_path


def score_case(
    truth: Volume3D,
    pred: Volume3D,
    zeta: Optional[float] = None,
    case_id: str = "case",
    percentile: float = DEFAULT_PERCENTILE
) -> CaseScore:
    """Скоры одного случая; без ζ берётся перцентиль предсказания"""
    used = default_zeta(pred, percentile) if zeta is None else float(zeta)
    return CaseScore(case_id, soft_score(truth, pred), hard_score(truth, pred, used), used)


def score_batch(
    cases: Sequence[Tuple[Volume3D, Volume3D]],
    zeta: Optional[float] = None,
    case_ids: Optional[Sequence[str]] = None,
    percentile: float = DEFAULT_PERCENTILE
) -> ScoreReport:
    """
    Пакетная оценка
    
    Args:
        cases: Пары (истина, предсказание)
        zeta: Общий порог; None - перцентиль каждого предсказания
        case_ids: Имена случаев
        percentile: Перцентиль порога по умолчанию
        
    Returns:
        ScoreReport: Скоры по случаям со сводкой
    """
    if not cases:
        raise EmptyBatchError("Пустой набор случаев")
    ids = list(case_ids) if case_ids is not None else [f"case_{i + 1}" for i in range(len(cases))]
    if len(ids) != len(cases):
        raise ScoringError(f"Имён случаев {len(ids)}, случаев {len(cases)}")
    
    per_case = [score_case(t, p, zeta, cid, percentile) for (t, p), cid in zip(cases, ids)]
    report = ScoreReport(per_case, zeta)
    logger.info(f"Оценка {report.n} случаев: {report.format()}")
    return report


class ScoringError(Exception):
    """Базовое исключение для метрик"""
    pass


class DimensionMismatchError(ScoringError):
    """Размеры истины и предсказания различаются"""
    pass


class EmptyBatchError(ScoringError):
    """Пустой набор случаев"""
    pass
