"""
Контракт TransportModel: перенос отделившихся клеток по кровотоку
"""

from abc import ABC, abstractmethod
from typing import TYPE_CHECKING

if TYPE_CHECKING:
    from ..vessels.graph import VesselGraph


class TransportModel(ABC):
    """Абстрактный контракт модели переноса по графу сосудов"""
    
    @abstractmethod
    def horizon(self) -> float:
        """
        Допустимая длина пути ν
        
        Returns:
            float: Длина в мм; пути не короче ν не учитываются
        """
        pass
    
    @abstractmethod
    def survival(self, length_mm: float) -> float:
        """
        Доля когорты, пережившая путь заданной длины
        
        Args:
            length_mm: Длина пути
            
        Returns:
            float: Доля в [0, 1]
        """
        pass
    
    @abstractmethod
    def fraction(self, graph: 'VesselGraph', source: int, target: int) -> float:
        """
        Доля клеток, дошедших от сосуда source до сосуда target
        
        Args:
            graph: Граф сосудов
            source: Сосуд у опухоли
            target: Сосуд у целевой точки
            
        Returns:
            float: Доля в [0, 1]
        """
        pass
