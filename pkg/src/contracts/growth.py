"""
Контракт GrowthModel: рост первичной опухоли до контакта с сосудом
"""

from abc import ABC, abstractmethod


class GrowthModel(ABC):
    """Абстрактный контракт модели роста опухоли"""
    
    @abstractmethod
    def time_to_contact(self, distance_mm: float, tumor_radius: float) -> float:
        """
        Время до контакта опухоли с ближайшим сосудом
        
        Args:
            distance_mm: Расстояние от центра опухоли до поверхности сосуда
            tumor_radius: Текущий радиус опухоли
            
        Returns:
            float: Время в днях, не меньше 0
        """
        pass
