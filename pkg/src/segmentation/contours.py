"""
Замыкание контура: обход рёбер вокруг найденного эллипса
"""

import math
from dataclasses import dataclass
from typing import List, Tuple

import numpy as np
from loguru import logger
from skimage.draw import polygon as fill_polygon

from .edges import EdgeMap
from .hough import Ellipse2D


@dataclass(frozen=True)
class ClosedContour:
    """
    Замкнутая цепочка пикселей
    
    Последняя вершина соединяется с первой. fallback=True - цепочку
    не удалось замкнуть и контуром служит растеризованный эллипс-затравка.
    """
    vertices: np.ndarray
    fallback: bool = False
    
    @property
    def area(self) -> float:
        """Площадь по формуле шнурков"""
        if len(self.vertices) < 3:
            return 0.0
        x, y = self.vertices[:, 0], self.vertices[:, 1]
        return 0.5 * abs(float(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1))))
    
    def fill(self, shape: Tuple[int, int]) -> np.ndarray:
        """Внутренность многоугольника вместе с пикселями цепочки"""
        mask = np.zeros(shape, dtype=bool)
        if len(self.vertices) == 0:
            return mask
        if len(self.vertices) >= 3:
            rr, cc = fill_polygon(self.vertices[:, 0], self.vertices[:, 1], shape=shape)
            mask[rr, cc] = True
        inside = (
            (self.vertices[:, 0] >= 0) & (self.vertices[:, 0] < shape[0])
            & (self.vertices[:, 1] >= 0) & (self.vertices[:, 1] < shape[1])
        )
        chain = self.vertices[inside].astype(int)
        mask[chain[:, 0], chain[:, 1]] = True
        return mask


def ellipse_contour(ellipse: Ellipse2D, shape: Tuple[int, int]) -> ClosedContour:
    """Растеризованный эллипс как запасной контур"""
    points = np.rint(ellipse.boundary_points()).astype(int)
    points[:, 0] = np.clip(points[:, 0], 0, shape[0] - 1)
    points[:, 1] = np.clip(points[:, 1], 0, shape[1] - 1)
    keep = np.ones(len(points), dtype=bool)
    keep[1:] = np.any(points[1:] != points[:-1], axis=1)
    return ClosedContour(points[keep], fallback=True)


def _angles(ellipse: Ellipse2D, points: np.ndarray) -> np.ndarray:
    """Угол точки в системе координат эллипса, [0, 2π)"""
    c, s = math.cos(ellipse.rotation), math.sin(ellipse.rotation)
    dx = points[:, 0] - ellipse.center[0]
    dy = points[:, 1] - ellipse.center[1]
    u = (dx * c + dy * s) / ellipse.semi_axes[0]
    v = (-dx * s + dy * c) / ellipse.semi_axes[1]
    return np.mod(np.arctan2(v, u), 2 * math.pi)


def close_contour(
    edges: EdgeMap,
    seed_ellipse: Ellipse2D,
    bridge_limit: float = 5.0,
    pixel_budget: int = 4000,
    band: float = 3.0,
    min_area_ratio: float = 0.5
) -> ClosedContour:
    """
    Жадный обход рёбер вокруг эллипса-затравки до замыкания
    
    Участвуют рёберные пиксели в полосе шириной band вокруг границы
    эллипса. Из текущего пикселя шаг делается к ближайшему 8-соседу
    впереди по углу; если такого нет, разрыв до bridge_limit пикселей
    перекрывается прямым мостом. Цепочка замкнута, когда обход прошёл
    не меньше 3/2 оборота и вернулся к началу ближе bridge_limit.
    
    Args:
        edges: Карта рёбер
        seed_ellipse: Эллипс из преобразования Хафа
        bridge_limit: Максимальный перекрываемый разрыв, пиксели
        pixel_budget: Максимум шагов обхода
        band: Полуширина полосы вокруг эллипса, пиксели
        min_area_ratio: Минимальная площадь контура относительно эллипса
        
    Returns:
        ClosedContour: Цепочка или растеризованный эллипс с флагом fallback
    """
    shape = edges.dims
    points = edges.points()
    if points.shape[0]:
        points = points[seed_ellipse.boundary_distance(points) <= band]
    if points.shape[0] < 3:
        logger.warning("Рёбра не пересекают эллипс-затравку: используется сам эллипс")
        return ellipse_contour(seed_ellipse, shape)
    
    angles = _angles(seed_ellipse, points)
    order = np.lexsort((points[:, 1], points[:, 0], angles))
    points, angles = points[order], angles[order]
    
    visited = np.zeros(len(points), dtype=bool)
    chain: List[int] = [0]
    visited[0] = True
    current = 0
    travelled = 0.0
    closed = False
    
    for _ in range(min(pixel_budget, len(points))):
        if travelled >= 1.5 * math.pi:
            if np.linalg.norm(points[current] - points[0]) <= bridge_limit:
                closed = True
                break
        
        distance = np.linalg.norm(points - points[current], axis=1)
        advance = np.mod(angles - angles[current], 2 * math.pi)
        ahead = ~visited & (advance < math.pi / 2)
        
        step = ahead & (distance <= math.sqrt(2) + 1e-9)
        if not step.any():
            step = ahead & (distance <= bridge_limit)
        if not step.any():
            break
        
        options = np.flatnonzero(step)
        nxt = int(options[np.lexsort((advance[options], distance[options]))[0]])
        travelled += float(advance[nxt])
        visited[nxt] = True
        chain.append(nxt)
        current = nxt
    else:
        closed = travelled >= 1.5 * math.pi and np.linalg.norm(points[current] - points[0]) <= bridge_limit
    
    if not closed:
        logger.warning(f"Контур не замкнут за {len(chain)} шагов: используется эллипс-затравка")
        return ellipse_contour(seed_ellipse, shape)
    
    contour = ClosedContour(points[chain].astype(int))
    if contour.area < min_area_ratio * seed_ellipse.area:
        logger.warning(
            f"Площадь контура {contour.area:.1f} меньше {min_area_ratio:.2f} площади эллипса: "
            f"используется эллипс-затравка"
        )
        return ellipse_contour(seed_ellipse, shape)
    return contour
