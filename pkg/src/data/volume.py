"""
Контейнер воксельного объёма и его файловый формат (raw + YAML-сайдкар)
"""

import hashlib
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Sequence, Tuple, Union

import numpy as np
import yaml
from loguru import logger


PathLike = Union[str, Path]

PROBABILITY_TOLERANCE = 1e-6

_DTYPES = {
    "float32": np.dtype("<f4"),
    "float64": np.dtype("<f8"),
}


class VolumeKind(Enum):
    """Тип содержимого объёма"""
    SCALAR = "scalar"
    BINARY = "binary"
    PROBABILITY = "probability"


@dataclass(frozen=True, eq=False)
class Volume3D:
    """
    Осевая воксельная сетка с физическим шагом (мм/воксель)
    
    array хранится в форме (x, y, z); плоское представление data идёт
    с самой быстрой осью x. Объём неизменяем после создания.
    """
    array: np.ndarray
    spacing: Tuple[float, float, float]
    kind: VolumeKind = VolumeKind.SCALAR
    
    def __post_init__(self):
        arr = np.asarray(self.array)
        if arr.ndim != 3 or min(arr.shape) < 1:
            raise VolumeValidationError(f"Ожидался непустой 3D массив, получено {arr.shape}")
        if arr.dtype not in (np.float32, np.float64):
            arr = arr.astype(np.float32)
        arr = np.array(arr, copy=True)
        arr.flags.writeable = False
        object.__setattr__(self, 'array', arr)
        
        spacing = tuple(float(s) for s in self.spacing)
        if len(spacing) != 3 or not all(np.isfinite(s) and s > 0 for s in spacing):
            raise VolumeValidationError(f"Шаг сетки должен быть тремя положительными числами: {self.spacing}")
        object.__setattr__(self, 'spacing', spacing)
        object.__setattr__(self, 'kind', VolumeKind(self.kind))
        self._validate_kind()
    
    def _validate_kind(self):
        """Проверка инвариантов типа содержимого"""
        values = self.array
        if not np.all(np.isfinite(values)):
            raise VolumeValidationError("Объём содержит нечисловые значения")
        
        if self.kind == VolumeKind.BINARY:
            if not np.all((values == 0) | (values == 1)):
                raise VolumeValidationError("Бинарный объём содержит значения вне {0, 1}")
        elif self.kind == VolumeKind.PROBABILITY:
            if values.min() < 0 or values.max() > 1:
                raise VolumeValidationError("Вероятности должны лежать в [0, 1]")
            total = float(values.sum(dtype=np.float64))
            if total != 0.0 and abs(total - 1.0) > PROBABILITY_TOLERANCE:
                raise VolumeValidationError(f"Сумма вероятностей {total} не равна 0 или 1")
    
    @classmethod
    def from_array(
        cls,
        array: np.ndarray,
        spacing: Tuple[float, float, float],
        kind: VolumeKind = VolumeKind.SCALAR
    ) -> 'Volume3D':
        """Создание из массива формы (x, y, z)"""
        return cls(np.asarray(array), spacing, kind)

    @classmethod
    def from_flat(
        cls,
        data: Sequence[float],
        dims: Tuple[int, int, int],
        spacing: Tuple[float, float, float],
        kind: VolumeKind = VolumeKind.SCALAR
    ) -> 'Volume3D':
        """Создание из плоского массива в порядке x-fastest"""
        flat = np.asarray(data)
        expected = int(np.prod(dims))
        if flat.size != expected:
            raise VolumeValidationError(f"Длина данных {flat.size} не равна x·y·z = {expected}")
        return cls(flat.reshape(tuple(dims), order='F'), spacing, kind)
    
    @property
    def dims(self) -> Tuple[int, int, int]:
        """Размеры в вокселях"""
        return tuple(int(n) for n in self.array.shape)
    
    @property
    def data(self) -> np.ndarray:
        """Плоское представление, ось x самая быстрая"""
        return self.array.ravel(order='F')
    
    @property
    def extent_mm(self) -> np.ndarray:
        """Физический размер объёма по осям"""
        return np.asarray(self.dims, dtype=np.float64) * np.asarray(self.spacing)
    
    @property
    def dtype_name(self) -> str:
        return "float64" if self.array.dtype == np.float64 else "float32"
    
    def contains(self, position_mm: Sequence[float]) -> bool:
        """Лежит ли точка внутри физического экстента"""
        p = np.asarray(position_mm, dtype=np.float64)
        return bool(np.all(p >= 0) and np.all(p < self.extent_mm))
    
    def voxel_at(self, position_mm: Sequence[float]) -> Tuple[int, int, int]:
        """
        Индекс вокселя, содержащего точку
        
        Воксель i занимает полуинтервал [i·s, (i+1)·s) по каждой оси.
        """
        if not self.contains(position_mm):
            raise VolumeValidationError(f"Точка {tuple(position_mm)} вне объёма {tuple(self.extent_mm)}")
        idx = np.floor(np.asarray(position_mm, dtype=np.float64) / np.asarray(self.spacing)).astype(int)
        idx = np.minimum(idx, np.asarray(self.dims) - 1)
        return tuple(int(i) for i in idx)
    
    def voxel_centers(self) -> np.ndarray:
        """Центры всех вокселей (N, 3) в мм, порядок x-fastest"""
        axes = [(np.arange(n) + 0.5) * s for n, s in zip(self.dims, self.spacing)]
        grid = np.meshgrid(*axes, indexing='ij')
        return np.stack([g.ravel(order='F') for g in grid], axis=1)
    
    def with_array(self, array: np.ndarray, kind: VolumeKind = None) -> 'Volume3D':
        """Новый объём той же геометрии"""
        return Volume3D(array, self.spacing, kind or self.kind)
    
    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Volume3D):
            return NotImplemented
        return (
            self.dims == other.dims
            and self.spacing == other.spacing
            and self.kind == other.kind
            and self.array.dtype == other.array.dtype
            and np.array_equal(self.array, other.array)
        )
    
    def __repr__(self):
        return f"Volume3D(dims={self.dims}, spacing={self.spacing}, kind={self.kind.value})"


def _paths(path: PathLike) -> Tuple[Path, Path]:
    """Пара путей (raw, сайдкар) по любому из них"""
    base = Path(path)
    if base.suffix in ('.raw', '.yaml'):
        base = base.with_suffix('')
    return base.with_suffix('.raw'), base.with_suffix('.yaml')


def write_volume(volume: Volume3D, path: PathLike) -> Path:
    """
    Запись объёма: little-endian raw (x-fastest) + YAML-сайдкар
    
    Args:
        volume: Объём
        path: Базовый путь (суффикс .raw/.yaml необязателен)
        
    Returns:
        Path: Путь к сайдкару
    """
    raw_path, sidecar_path = _paths(path)
    raw_path.parent.mkdir(parents=True, exist_ok=True)
    
    dtype_name = volume.dtype_name
    payload = volume.data.astype(_DTYPES[dtype_name]).tobytes()
    raw_path.write_bytes(payload)
    
    sidecar = {
        'dims': list(volume.dims),
        'spacing': list(volume.spacing),
        'kind': volume.kind.value,
        'dtype': dtype_name,
        'checksum': hashlib.sha256(payload).hexdigest(),
    }
    with open(sidecar_path, 'w', encoding='utf-8') as file:
        yaml.safe_dump(sidecar, file, default_flow_style=None, sort_keys=False)
    
    logger.debug(f"Объём {volume} записан в {raw_path}")
    return sidecar_path


def read_volume(path: PathLike) -> Volume3D:
    """
    Чтение объёма по сайдкару
    
    Args:
        path: Путь к .raw, .yaml или общий базовый путь
        
    Returns:
        Volume3D: Загруженный объём
        
    Raises:
        VolumeFormatError: нет файла, длина или контрольная сумма не совпадают
        VolumeValidationError: значения нарушают инварианты типа
    """
    raw_path, sidecar_path = _paths(path)
    for p in (raw_path, sidecar_path):
        if not p.exists():
            raise VolumeFormatError(f"Файл объёма не найден: {p}")
    
    try:
        with open(sidecar_path, 'r', encoding='utf-8') as file:
            sidecar = yaml.safe_load(file) or {}
        dims = tuple(int(n) for n in sidecar['dims'])
        spacing = tuple(float(s) for s in sidecar['spacing'])
        kind = VolumeKind(sidecar.get('kind', VolumeKind.SCALAR.value))
        dtype = _DTYPES[sidecar.get('dtype', 'float32')]
    except (KeyError, ValueError, TypeError, yaml.YAMLError) as e:
        raise VolumeFormatError(f"Некорректный сайдкар {sidecar_path}: {e}") from e
    
    payload = raw_path.read_bytes()
    expected = int(np.prod(dims))
    if len(payload) != expected * dtype.itemsize:
        raise VolumeFormatError(
            f"Сайдкар описывает {expected} значений, raw содержит {len(payload) / dtype.itemsize:g}"
        )
    
    checksum = sidecar.get('checksum')
    if checksum is not None and checksum != hashlib.sha256(payload).hexdigest():
        raise VolumeFormatError(f"Контрольная сумма {raw_path} не совпадает")
    
    data = np.frombuffer(payload, dtype=dtype).astype(dtype.newbyteorder('='))
    volume = Volume3D.from_flat(data, dims, spacing, kind)
    logger.debug(f"Объём {volume} прочитан из {raw_path}")
    return volume


class VolumeError(Exception):
    """Базовое исключение для объёмов"""
    pass


class VolumeFormatError(VolumeError):
    """Ошибка файлового формата"""
    pass


class VolumeValidationError(VolumeError):
    """Нарушение инвариантов объёма"""
    pass


class GridError(VolumeError):
    """Некорректная сетка выборки"""
    pass
