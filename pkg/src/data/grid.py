"""
Равномерная сетка выборки Ω поверх объёма
"""

from typing import List, Tuple

import numpy as np
from pydantic import BaseModel, Field, field_validator

from .volume import Volume3D, GridError


class GridSpec(BaseModel):
    """Число узлов сетки по осям (α_x, α_y, α_z)"""
    counts: Tuple[int, int, int] = Field(..., description="Узлы по осям x, y, z")
    
    model_config = {'frozen': True}
    
    @field_validator('counts')
    @classmethod
    def _positive(cls, value: Tuple[int, int, int]) -> Tuple[int, int, int]:
        if any(c < 1 for c in value):
            raise ValueError(f"Число узлов должно быть ≥ 1: {value}")
        return value
    
    @property
    def size(self) -> int:
        """Общее число узлов α_x·α_y·α_z"""
        return int(np.prod(self.counts))
    
    @classmethod
    def dense_for(cls, volume: Volume3D) -> 'GridSpec':
        """Сетка с узлом в центре каждого вокселя"""
        return cls(counts=volume.dims)
    
    def validate_for(self, volume: Volume3D) -> None:
        """Проверка 1 ≤ α ≤ размера объёма по каждой оси"""
        for axis, (count, dim) in enumerate(zip(self.counts, volume.dims)):
            if count > dim:
                raise GridError(f"Сетка {self.counts} превышает размеры объёма {volume.dims} по оси {axis}")


def grid_positions(volume: Volume3D, grid: GridSpec) -> Tuple[np.ndarray, np.ndarray]:
    """
    Векторизованные узлы сетки
    
    Узлы стоят в серединах страт: по оси длиной L с α узлами
    координата k-го узла равна (k + 0.5)·L/α.
    
    Returns:
        (indices (N, 3), positions_mm (N, 3)) в порядке x-fastest
    """
    grid.validate_for(volume)
    extent = volume.extent_mm
    axes_idx = [np.arange(c) for c in grid.counts]
    mesh = np.meshgrid(*axes_idx, indexing='ij')
    indices = np.stack([m.ravel(order='F') for m in mesh], axis=1)
    step = extent / np.asarray(grid.counts, dtype=np.float64)
    positions = (indices + 0.5) * step
    return indices, positions


def sample_grid(volume: Volume3D, grid: GridSpec) -> List[Tuple[Tuple[int, int, int], np.ndarray]]:
    """
    Список узлов сетки Ω
    
    Args:
        volume: Объём (используется только геометрия)
        grid: Спецификация сетки
        
    Returns:
        Список (индекс узла, позиция в мм), порядок x-fastest
    """
    indices, positions = grid_positions(volume, grid)
    return [(tuple(int(i) for i in idx), pos) for idx, pos in zip(indices, positions)]


def grid_volume_spacing(volume: Volume3D, grid: GridSpec) -> Tuple[float, float, float]:
    """Физический шаг объёма, построенного на узлах сетки"""
    step = volume.extent_mm / np.asarray(grid.counts, dtype=np.float64)
    return tuple(float(s) for s in step)
