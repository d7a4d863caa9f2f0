"""
Сборка 3D-маски ткани из контуров срезов и объёмное лапласово сглаживание
"""

from typing import Sequence, Tuple

import numpy as np
from loguru import logger
from scipy import ndimage

from ..data.volume import Volume3D, VolumeKind
from .contours import ClosedContour
from .edges import SegmentationError


# центр и шесть соседей по граням
SIX_NEIGHBOR_MEAN = np.zeros((3, 3, 3))
SIX_NEIGHBOR_MEAN[1, 1, :] = SIX_NEIGHBOR_MEAN[1, :, 1] = SIX_NEIGHBOR_MEAN[:, 1, 1] = 1.0
SIX_NEIGHBOR_MEAN /= SIX_NEIGHBOR_MEAN.sum()


def fill_slices(slices: Sequence[Sequence[ClosedContour]], plane_shape: Tuple[int, int]) -> np.ndarray:
    """Стек заливок (x, y, z): внутренности всех контуров среза"""
    stack = np.zeros(tuple(plane_shape) + (len(slices),), dtype=bool)
    for z, contours in enumerate(slices):
        for contour in contours:
            stack[:, :, z] |= contour.fill(plane_shape)
    return stack


def laplacian_smooth(stack: np.ndarray, iterations: int) -> np.ndarray:
    """
    iterations шагов замены вокселя средним по нему и шести соседям,
    затем порог 0.5
    
    Каждый шаг читает только предыдущий буфер. За границей объёма
    повторяются крайние воксели.
    """
    values = stack.astype(np.float64)
    for _ in range(iterations):
        values = ndimage.convolve(values, SIX_NEIGHBOR_MEAN, mode='nearest')
    return values >= 0.5


def reconstruct_tissue(
    slices: Sequence[Sequence[ClosedContour]],
    plane_shape: Tuple[int, int],
    spacing: Tuple[float, float, float] = (1.0, 1.0, 1.0),
    iterations: int = 3
) -> Volume3D:
    """
    Бинарная колонизируемая ткань I
    
    Args:
        slices: Замкнутые контуры для каждого z
        plane_shape: Размеры среза (x, y)
        spacing: Шаг объёма, мм
        iterations: Число шагов сглаживания K
        
    Returns:
        Volume3D: Бинарный объём (x, y, z); при пустых срезах - нулевой
        
    Raises:
        SegmentationError: список срезов пуст
    """
    if len(slices) == 0:
        raise SegmentationError("Нужен хотя бы один срез")
    
    stack = fill_slices(slices, plane_shape)
    if not stack.any():
        logger.warning("Все срезы пусты: маска ткани нулевая")
        return Volume3D(np.zeros(stack.shape, dtype=np.float32), spacing, VolumeKind.BINARY)
    
    smoothed = laplacian_smooth(stack, iterations)
    logger.debug(f"Реконструкция: {int(stack.sum())} -> {int(smoothed.sum())} вокселей после {iterations} шагов")
    return Volume3D(smoothed.astype(np.float32), spacing, VolumeKind.BINARY)
