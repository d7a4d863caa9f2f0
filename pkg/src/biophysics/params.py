"""
Параметры биофизической модели и первичной опухоли
"""

from typing import Any, Dict, Optional, Tuple

import numpy as np
from pydantic import BaseModel, Field, field_validator, model_validator


class SimulationParams(BaseModel):
    """Константы модели M (единицы: клетки, мм, дни)"""
    d: float = Field(100.0, gt=0, description="Скорость отделения клеток, клеток/день")
    xi: float = Field(1000.0, gt=0, description="Порог вымирания ξ, клеток")
    lambda_len: float = Field(0.1, gt=0, description="Затухание на единицу длины пути, 1/мм")
    p_settle: float = Field(0.05, ge=0, le=1, description="Вероятность оседания на одно прибытие")
    g: float = Field(0.5, gt=0, description="Скорость радиального роста, мм/день")
    T: float = Field(60.0, gt=0, description="Время остановки, дней")
    N0: float = Field(1.0e6, gt=0, description="Опорный размер когорты, клеток")
    R_0: float = Field(1.0, gt=0, description="Начальный радиус поиска, мм")
    delta_R: float = Field(0.5, gt=0, description="Шаг радиуса поиска, мм")
    use_spanning_tree: bool = Field(True, description="Считать поток по остовному дереву")
    stochastic: bool = Field(False, description="Пуассоновский шум вместо ожидания")
    seed: int = Field(42, ge=0, description="Зерно счётного генератора")
    
    model_config = {'frozen': True}
    
    @model_validator(mode='after')
    def _xi_below_cohort(self) -> 'SimulationParams':
        if self.xi >= self.N0:
            raise ValueError(f"Порог ξ={self.xi} должен быть меньше N0={self.N0}")
        return self
    
    @classmethod
    def from_config(cls, section: Optional[Dict[str, Any]] = None, **overrides: Any) -> 'SimulationParams':
        """Создание из секции simulation конфигурации"""
        values = dict(section or {})
        values.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**values)


class TumorSpec(BaseModel):
    """Первичная опухоль: положение τ_l (оно же p[l]) и радиус из размера τ_s"""
    location: Tuple[float, float, float] = Field(..., description="Центр опухоли, мм")
    radius: float = Field(..., gt=0, description="Радиус опухоли, мм")
    
    model_config = {'frozen': True}
    
    @field_validator('location')
    @classmethod
    def _finite(cls, value: Tuple[float, float, float]) -> Tuple[float, float, float]:
        if not np.all(np.isfinite(value)):
            raise ValueError(f"Нечисловое положение опухоли: {value}")
        return value
