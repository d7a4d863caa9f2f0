"""
Рандомизированное преобразование Хафа для эллипсов
"""

import math
from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np
from loguru import logger
from scipy import ndimage
from skimage.measure import EllipseModel

from .edges import EdgeMap, EIGHT_CONNECTED


SAMPLE_SIZE = 5
REFINEMENTS = 2
# Выборка слишком сжата или вытянута в линию
MIN_SPREAD = 1.0
COLLINEAR_RATIO = 1e-3
# Радиус окрестности опорной точки в долях размера среза
NEIGHBOURHOOD = 0.5


@dataclass(frozen=True)
class Ellipse2D:
    """
    Эллипс в пиксельных координатах среза
    
    semi_axes = (a, b), a ≥ b > 0; rotation - угол большой оси в [0, π).
    """
    center: Tuple[float, float]
    semi_axes: Tuple[float, float]
    rotation: float
    
    def __post_init__(self):
        a, b = (float(v) for v in self.semi_axes)
        if not (a >= b > 0) or not math.isfinite(a):
            raise ValueError(f"Полуоси эллипса должны удовлетворять a ≥ b > 0: {(a, b)}")
        object.__setattr__(self, 'semi_axes', (a, b))
        object.__setattr__(self, 'center', tuple(float(c) for c in self.center))
        object.__setattr__(self, 'rotation', float(self.rotation) % math.pi)
    
    @classmethod
    def normalized(cls, xc: float, yc: float, a: float, b: float, theta: float) -> 'Ellipse2D':
        """Приведение произвольных параметров к a ≥ b, rotation ∈ [0, π)"""
        a, b = abs(a), abs(b)
        if a < b:
            a, b = b, a
            theta += math.pi / 2
        return cls((xc, yc), (a, b), theta)
    
    @property
    def area(self) -> float:
        return math.pi * self.semi_axes[0] * self.semi_axes[1]
    
    @property
    def perimeter(self) -> float:
        """Периметр по Рамануджану"""
        a, b = self.semi_axes
        h = ((a - b) / (a + b)) ** 2
        return math.pi * (a + b) * (1 + 3 * h / (10 + math.sqrt(4 - 3 * h)))
    
    def rho(self, points: np.ndarray) -> np.ndarray:
        """Алгебраический радиус: 1 на границе, < 1 внутри"""
        points = np.atleast_2d(points)
        dx = points[:, 0] - self.center[0]
        dy = points[:, 1] - self.center[1]
        c, s = math.cos(self.rotation), math.sin(self.rotation)
        a, b = self.semi_axes
        u = (dx * c + dy * s) / a
        v = (-dx * s + dy * c) / b
        return np.sqrt(u * u + v * v)
    
    def boundary_distance(self, points: np.ndarray) -> np.ndarray:
        """Приближённое расстояние до границы, пиксели"""
        return np.abs(self.rho(points) - 1.0) * math.sqrt(self.semi_axes[0] * self.semi_axes[1])
    
    def rasterize(self, shape: Tuple[int, int]) -> np.ndarray:
        """Пиксели, центры которых лежат внутри эллипса"""
        xs, ys = np.meshgrid(np.arange(shape[0]), np.arange(shape[1]), indexing='ij')
        points = np.stack([xs.ravel(), ys.ravel()], axis=1).astype(np.float64)
        return (self.rho(points) <= 1.0).reshape(shape)
    
    def outline(self, shape: Tuple[int, int]) -> np.ndarray:
        """Внутренняя граница растеризованного эллипса"""
        filled = self.rasterize(shape)
        return filled & ~ndimage.binary_erosion(filled)
    
    def iou(self, other: 'Ellipse2D', shape: Tuple[int, int]) -> float:
        mine, theirs = self.rasterize(shape), other.rasterize(shape)
        union = np.logical_or(mine, theirs).sum()
        return float(np.logical_and(mine, theirs).sum() / union) if union else 0.0
    
    def boundary_points(self, count: Optional[int] = None) -> np.ndarray:
        """Точки границы по параметру, против часовой стрелки"""
        count = count or max(16, int(math.ceil(self.perimeter)))
        t = np.linspace(0.0, 2 * math.pi, count, endpoint=False)
        a, b = self.semi_axes
        c, s = math.cos(self.rotation), math.sin(self.rotation)
        x = self.center[0] + a * np.cos(t) * c - b * np.sin(t) * s
        y = self.center[1] + a * np.cos(t) * s + b * np.sin(t) * c
        return np.stack([x, y], axis=1)


@dataclass(frozen=True)
class _Candidate:
    ellipse: Ellipse2D
    ratio: float
    
    @property
    def score(self) -> float:
        """Подтверждённая длина границы, взвешенная долей подтверждения"""
        return self.ratio * self.ratio * self.ellipse.perimeter


def fit_ellipse(points: np.ndarray) -> Optional[Ellipse2D]:
    """
    Эллипс по точкам через EllipseModel
    
    Вырожденная выборка (почти одна точка или прямая) и любая неудача
    подгонки дают None. Соглашение об угле в разных версиях scikit-image
    отличается, поэтому берётся та из двух трактовок, у которой меньше невязка.
    """
    points = np.asarray(points, dtype=np.float64)
    if points.shape[0] < SAMPLE_SIZE:
        return None
    spread = np.linalg.svd(points - points.mean(axis=0), compute_uv=False)
    if spread[0] < MIN_SPREAD or spread[1] < COLLINEAR_RATIO * spread[0]:
        return None
    
    model = EllipseModel()
    try:
        with np.errstate(all='ignore'):
            if not model.estimate(points):
                return None
    except (TypeError, ValueError, ZeroDivisionError, FloatingPointError, np.linalg.LinAlgError) as e:
        logger.trace(f"Подгонка эллипса отклонена: {e}")
        return None
    
    params = np.asarray(model.params)
    if params.shape != (5,) or np.iscomplexobj(params):
        return None
    params = params.astype(np.float64)
    if not np.all(np.isfinite(params)) or min(params[2], params[3]) <= 0:
        return None
    xc, yc, a, b, theta = params
    
    best, best_residual = None, math.inf
    for angle in (theta, theta + math.pi / 2):
        ellipse = Ellipse2D.normalized(xc, yc, a, b, angle)
        residual = float(np.mean(ellipse.boundary_distance(points)))
        if residual < best_residual:
            best, best_residual = ellipse, residual
    return best


def boundary_support(ellipse: Ellipse2D, confirmed: np.ndarray) -> float:
    """Доля точек границы эллипса, попадающих в подтверждённые пиксели"""
    pixels = np.rint(ellipse.boundary_points()).astype(np.int64)
    inside = np.all((pixels >= 0) & (pixels < np.array(confirmed.shape)), axis=1)
    if not inside.any():
        return 0.0
    hits = confirmed[pixels[inside, 0], pixels[inside, 1]]
    return float(hits.sum() / pixels.shape[0])


def hough_ellipses(
    edges: EdgeMap,
    n: int,
    iterations: int = 600,
    min_support_ratio: float = 0.5,
    min_axis: float = 3.0,
    suppression_iou: float = 0.5,
    seed: int = 0,
    tolerance: float = 1.5
) -> List[Ellipse2D]:
    """
    До n эллипсов, последовательно извлекаемых из карты рёбер
    
    Эллипсы ищутся по одному. В каждом раунде пять точек выборки берутся
    из 8-связной компоненты случайной опорной точки и из её окрестности,
    кандидат уточняется по своим инлайерам и оценивается долей границы,
    подтверждённой рёбрами. Лучший кандидат принимается, если эта доля
    не меньше min_support_ratio, а перекрытие с уже принятыми не больше
    suppression_iou. Его инлайеры удаляются с карты перед следующим раундом.
    
    Args:
        edges: Карта рёбер
        n: Сколько эллипсов вернуть (≥ 1)
        iterations: Общее число случайных выборок на все раунды
        min_support_ratio: Минимальная подтверждённая доля границы
        min_axis: Минимальная малая полуось, пиксели
        suppression_iou: Порог подавления
        seed: Зерно генератора
        tolerance: Ширина полосы инлайеров, пиксели
        
    Returns:
        List[Ellipse2D]: До n эллипсов в порядке извлечения
    """
    if n < 1:
        raise ValueError(f"n должно быть ≥ 1: {n}")
    if edges.count < SAMPLE_SIZE:
        return []
    
    shape = edges.dims
    max_axis = 2.0 * max(shape)
    reach = NEIGHBOURHOOD * max(shape)
    per_round = max(1, math.ceil(iterations / n))
    rng = np.random.Generator(np.random.Philox(key=[seed, 0]))
    
    def admissible(ellipse: Optional[Ellipse2D]) -> bool:
        return ellipse is not None and ellipse.semi_axes[1] >= min_axis and ellipse.semi_axes[0] <= max_axis
    
    remaining = edges.pixels.copy()
    kept: List[Ellipse2D] = []
    tried = 0
    
    for _ in range(n):
        current = EdgeMap(remaining)
        points = current.points()
        if points.shape[0] < SAMPLE_SIZE:
            break
        labels, _ = current.components()
        point_labels = labels[remaining]
        confirmed = ndimage.binary_dilation(remaining, structure=EIGHT_CONNECTED)
        best: Optional[_Candidate] = None
        
        for _ in range(per_round):
            tried += 1
            anchor = int(rng.integers(points.shape[0]))
            pool = np.flatnonzero(point_labels == point_labels[anchor])
            near = np.linalg.norm(points[pool] - points[anchor], axis=1) <= reach
            if near.sum() >= SAMPLE_SIZE:
                pool = pool[near]
            elif pool.size < SAMPLE_SIZE:
                pool = np.flatnonzero(np.linalg.norm(points - points[anchor], axis=1) <= reach)
                if pool.size < SAMPLE_SIZE:
                    continue
            
            ellipse = fit_ellipse(points[rng.choice(pool, size=SAMPLE_SIZE, replace=False)])
            if not admissible(ellipse):
                continue
            
            inliers = ellipse.boundary_distance(points) < tolerance
            if inliers.sum() < 0.25 * min_support_ratio * ellipse.perimeter:
                continue
            for _ in range(REFINEMENTS):
                refined = fit_ellipse(points[inliers])
                if not admissible(refined):
                    break
                ellipse = refined
                inliers = ellipse.boundary_distance(points) < tolerance
            
            candidate = _Candidate(ellipse, boundary_support(ellipse, confirmed))
            if candidate.ratio < min_support_ratio:
                continue
            if best is not None and candidate.score <= best.score:
                continue
            if any(ellipse.iou(other, shape) > suppression_iou for other in kept):
                continue
            best = candidate
        
        if best is None:
            break
        kept.append(best.ellipse)
        claimed = best.ellipse.boundary_distance(points) < 2.0 * tolerance
        remaining[tuple(points[claimed].astype(np.int64).T)] = False
    
    logger.trace(f"Хаф: {tried} выборок, принято {len(kept)}")
    return kept
