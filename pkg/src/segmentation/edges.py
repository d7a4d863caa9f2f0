"""
Адаптивный детектор Кэнни
"""

from dataclasses import dataclass
from typing import Tuple

import numpy as np
from loguru import logger
from scipy import ndimage
from skimage.feature import canny
from skimage.filters import threshold_otsu


EIGHT_CONNECTED = np.ones((3, 3), dtype=bool)


@dataclass(frozen=True)
class EdgeMap:
    """Бинарная карта рёбер среза, оси (x, y)"""
    pixels: np.ndarray
    
    def __post_init__(self):
        pixels = np.asarray(self.pixels).astype(bool)
        if pixels.ndim != 2:
            raise SegmentationError(f"Карта рёбер должна быть двумерной: {pixels.shape}")
        object.__setattr__(self, 'pixels', pixels)
    
    @property
    def dims(self) -> Tuple[int, int]:
        return tuple(int(n) for n in self.pixels.shape)
    
    @property
    def count(self) -> int:
        return int(self.pixels.sum())
    
    def points(self) -> np.ndarray:
        """Координаты рёберных пикселей (N, 2)"""
        return np.argwhere(self.pixels).astype(np.float64)
    
    def components(self) -> Tuple[np.ndarray, int]:
        """Метки 8-связных компонент"""
        return ndimage.label(self.pixels, structure=EIGHT_CONNECTED)
    
    @classmethod
    def empty(cls, dims: Tuple[int, int]) -> 'EdgeMap':
        return cls(np.zeros(dims, dtype=bool))


def gradient_magnitude(image: np.ndarray, sigma: float) -> np.ndarray:
    """Модуль градиента Собеля после гауссова размытия (как внутри canny)"""
    smoothed = ndimage.gaussian_filter(image, sigma, mode='nearest')
    return np.hypot(ndimage.sobel(smoothed, axis=0), ndimage.sobel(smoothed, axis=1))


def canny_adaptive(image: np.ndarray, sigma: float = 1.5) -> EdgeMap:
    """
    Кэнни с порогами по Оцу
    
    Верхний порог гистерезиса - порог Оцу модуля градиента,
    нижний - его половина. Положительное масштабирование и инверсия
    яркости рёбер не меняют.
    
    Args:
        image: Двумерный срез
        sigma: Размытие перед градиентом, пиксели
        
    Returns:
        EdgeMap: Рёбра той же формы
    """
    image = np.asarray(image, dtype=np.float64)
    if image.ndim != 2 or min(image.shape) < 2:
        raise SegmentationError(f"Вырожденный срез формы {image.shape}")
    
    magnitude = gradient_magnitude(image, sigma)
    peak = float(magnitude.max())
    if peak <= 1e-12 * max(1.0, float(np.abs(image).max())) or peak == float(magnitude.min()):
        return EdgeMap.empty(image.shape)
    
    high = float(threshold_otsu(magnitude))
    edges = canny(image, sigma=sigma, low_threshold=0.5 * high, high_threshold=high, mode='nearest')
    logger.trace(f"Кэнни: порог {high:.4g}, {int(edges.sum())} рёберных пикселей")
    return EdgeMap(edges)


class SegmentationError(Exception):
    """Ошибка сегментации"""
    pass
