"""
Рендеринг срезов объёма в 8-битные PNG
"""

from enum import Enum
from pathlib import Path
from typing import Union

import numpy as np
from loguru import logger
from PIL import Image

from .volume import Volume3D, VolumeKind, VolumeValidationError


class SliceAxis(Enum):
    """Ось, перпендикулярная срезу"""
    X = "x"
    Y = "y"
    Z = "z"


def extract_slice(volume: Volume3D, axis: Union[SliceAxis, str], index: int) -> np.ndarray:
    """
    Двумерный срез объёма
    
    Returns:
        np.ndarray: Срез, индексы в порядке оставшихся осей
    """
    axis = SliceAxis(axis)
    axis_num = ['x', 'y', 'z'].index(axis.value)
    size = volume.dims[axis_num]
    if not 0 <= index < size:
        raise VolumeValidationError(f"Индекс среза {index} вне [0, {size}) по оси {axis.value}")
    return np.take(volume.array, index, axis=axis_num)


def to_grayscale(plane: np.ndarray, kind: VolumeKind) -> np.ndarray:
    """Перевод среза в uint8: бинарные как 0/255, прочие min-max по срезу"""
    if kind == VolumeKind.BINARY:
        return (plane > 0.5).astype(np.uint8) * 255
    
    lo, hi = float(plane.min()), float(plane.max())
    if hi <= lo:
        return np.full(plane.shape, 128, dtype=np.uint8)
    scaled = (plane.astype(np.float64) - lo) / (hi - lo)
    return np.round(scaled * 255).astype(np.uint8)


def render_slice(volume: Volume3D, axis: Union[SliceAxis, str], index: int, out: Union[str, Path]) -> Path:
    """
    Запись среза в PNG (оттенки серого)
    
    Args:
        volume: Объём
        axis: Ось среза x/y/z
        index: Номер среза
        out: Путь к PNG
        
    Returns:
        Path: Путь к записанному файлу
    """
    plane = extract_slice(volume, axis, index)
    pixels = to_grayscale(plane, volume.kind)
    
    out = Path(out)
    out.parent.mkdir(parents=True, exist_ok=True)
    # строки изображения идут по второй оставшейся оси
    Image.fromarray(np.ascontiguousarray(pixels.T)).save(out)
    logger.debug(f"Срез {SliceAxis(axis).value}={index} сохранён в {out}")
    return out
