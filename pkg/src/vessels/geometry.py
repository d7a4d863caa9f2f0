"""
Геометрия цилиндрических сосудов: торцы, расстояния до осей
"""

import math
from dataclasses import dataclass
from typing import Sequence, Tuple

import numpy as np


@dataclass(frozen=True)
class Vessel:
    """
    Сосуд b = (c, h, r, o_xy, o_xz)
    
    c - центр масс (мм), h - высота цилиндра (мм), r - средний радиус (мм),
    o_xy ∈ [0, 2π] и o_xz ∈ [0, π] - ориентации в плоскостях xy и xz.
    """
    c: Tuple[float, float, float]
    h: float
    r: float
    o_xy: float
    o_xz: float
    
    def __post_init__(self):
        c = tuple(float(v) for v in self.c)
        object.__setattr__(self, 'c', c)
        values = c + (self.h, self.r, self.o_xy, self.o_xz)
        if len(c) != 3 or not all(math.isfinite(v) for v in values):
            raise InvalidVesselError(f"Нечисловые параметры сосуда: {values}")
        if self.h < 0 or self.r <= 0:
            raise InvalidVesselError(f"Высота должна быть ≥ 0, радиус > 0: h={self.h}, r={self.r}")
    
    def to_dict(self) -> dict:
        """Конвертация в словарь для сериализации"""
        return {
            'c': list(self.c),
            'h': self.h,
            'r': self.r,
            'o_xy': self.o_xy,
            'o_xz': self.o_xz,
        }
    
    @classmethod
    def from_dict(cls, payload: dict) -> 'Vessel':
        try:
            return cls(
                c=tuple(payload['c']),
                h=float(payload['h']),
                r=float(payload['r']),
                o_xy=float(payload['o_xy']),
                o_xz=float(payload['o_xz']),
            )
        except (KeyError, TypeError, ValueError) as e:
            raise InvalidVesselError(f"Некорректное описание сосуда {payload}: {e}") from e


def direction_vector(o_xy: float, o_xz: float, normalize: bool = False) -> np.ndarray:
    """
    Направляющий вектор [cos(o_xy), cos(π/4 - o_xy), cos(o_xz)]
    
    В общем случае вектор не единичный; normalize=True приводит его к длине 1.
    """
    u = np.array([math.cos(o_xy), math.cos(math.pi / 4 - o_xy), math.cos(o_xz)])
    if normalize:
        norm = float(np.linalg.norm(u))
        if norm > 0:
            u = u / norm
    return u


def endpoints(vessel: Vessel, normalize_axis: bool = False) -> Tuple[np.ndarray, np.ndarray]:
    """
    Торцы цилиндра sl = c - h/2·u и el = c + h/2·u
    
    Args:
        vessel: Сосуд
        normalize_axis: Нормировать направляющий вектор
        
    Returns:
        (sl, el): Начало и конец сосуда в мм
    """
    u = direction_vector(vessel.o_xy, vessel.o_xz, normalize_axis)
    c = np.asarray(vessel.c, dtype=np.float64)
    half = 0.5 * vessel.h * u
    return c - half, c + half


def segment_distances(starts: np.ndarray, ends: np.ndarray, points: np.ndarray) -> np.ndarray:
    """
    Расстояния от точек до отрезков осей
    
    Args:
        starts, ends: (V, 3) торцы отрезков
        points: (N, 3) точки
        
    Returns:
        np.ndarray: (N, V) евклидовы расстояния
    """
    points = np.atleast_2d(np.asarray(points, dtype=np.float64))
    axis = ends - starts                                   # (V, 3)
    length_sq = np.einsum('vk,vk->v', axis, axis)          # (V,)
    rel = points[:, None, :] - starts[None, :, :]          # (N, V, 3)
    with np.errstate(divide='ignore', invalid='ignore'):
        t = np.einsum('nvk,vk->nv', rel, axis) / length_sq
    t = np.where(length_sq > 0, np.clip(np.nan_to_num(t), 0.0, 1.0), 0.0)
    closest = starts[None, :, :] + t[..., None] * axis[None, :, :]
    return np.linalg.norm(points[:, None, :] - closest, axis=2)


def surface_distances(
    starts: np.ndarray, ends: np.ndarray, radii: np.ndarray, points: np.ndarray
) -> np.ndarray:
    """Расстояния до поверхности цилиндров (до оси минус r, не меньше 0)"""
    return np.maximum(segment_distances(starts, ends, points) - radii[None, :], 0.0)


def nearest_indices(
    starts: np.ndarray, ends: np.ndarray, radii: np.ndarray, points: np.ndarray
) -> Tuple[np.ndarray, np.ndarray]:
    """
    Ближайший сосуд для каждой точки
    
    При равенстве расстояний выбирается меньший индекс.
    
    Returns:
        (indices (N,), distances (N,))
    """
    dist = surface_distances(starts, ends, radii, points)
    idx = np.argmin(dist, axis=1)
    return idx, dist[np.arange(dist.shape[0]), idx]


def as_point(p: Sequence[float]) -> np.ndarray:
    point = np.asarray(p, dtype=np.float64).reshape(3)
    if not np.all(np.isfinite(point)):
        raise InvalidVesselError(f"Нечисловая точка {p}")
    return point


class VesselGraphError(Exception):
    """Базовое исключение для сосудов и графа"""
    pass


class InvalidVesselError(VesselGraphError):
    """Некорректные параметры сосуда"""
    pass


class DisconnectedGraphError(VesselGraphError):
    """Граф не связен там, где требуется связность"""
    pass
