"""
Контракт ColonizationModel: выход клеток из кровотока и оседание в ткани
"""

from abc import ABC, abstractmethod

import numpy as np


class ColonizationModel(ABC):
    """Абстрактный контракт модели колонизации"""
    
    @abstractmethod
    def expected(self, arrivals):
        """
        Ожидаемое число осевших клеток
        
        Args:
            arrivals: Число прибывших клеток (скаляр или np.ndarray)
            
        Returns:
            Ожидаемое число осевших клеток той же формы
        """
        pass
    
    @abstractmethod
    def sample(self, mean: float, seed: int, counter: int) -> float:
        """
        Случайная реализация числа осевших клеток
        
        Args:
            mean: Ожидаемое значение
            seed: Зерно прогона
            counter: Счётчик точки (индекс узла сетки)
            
        Returns:
            float: Неотрицательное целое число клеток
        """
        pass
    
    def sample_many(self, means: np.ndarray, seed: int, counters: np.ndarray) -> np.ndarray:
        """Поэлементная выборка для массива точек"""
        return np.array([self.sample(float(m), seed, int(c)) for m, c in zip(means, counters)])
