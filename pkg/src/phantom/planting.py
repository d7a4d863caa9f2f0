"""
Посадка метастазов пропорционально плотной эталонной оценке модели M
"""

from typing import Optional

import numpy as np
from loguru import logger
from pydantic import BaseModel, Field

from ..biophysics.params import SimulationParams
from ..data.volume import Volume3D, VolumeKind
from ..vessels.graph import build_graph
from .generator import GroundTruth, PhantomError
from .oracle import dense_colonization, nearest_by_loop


class PlantingParams(BaseModel):
    """Параметры посадки"""
    n: int = Field(5, ge=0, description="Число метастазов")
    max_site_distance: float = Field(8.0, gt=0, description="Макс. расстояние до оси сосуда, мм")
    blob_radius: float = Field(1.5, ge=0, description="Радиус очага, мм")
    seed: int = Field(7, ge=0)
    
    model_config = {'frozen': True}


def plant_metastases(
    gt: GroundTruth,
    params: SimulationParams,
    n: int,
    seed: int,
    planting: Optional[PlantingParams] = None,
    normalize_axis: bool = False
) -> Volume3D:
    """
    Маска метастазов "после" для фантома
    
    Места выбираются без возвращения с вероятностями, пропорциональными
    эталонной оценке M, среди вокселей лёгких не дальше max_site_distance
    от оси сосуда. Очаг - шар blob_radius вокруг места, ограниченный теми
    же допустимыми вокселями.
    
    Args:
        gt: Разметка фантома
        params: Параметры модели
        n: Число мест
        seed: Зерно выбора
        planting: Геометрия очагов
        normalize_axis: Нормировка направляющего вектора при построении графа
        
    Returns:
        Volume3D: Бинарная маска
        
    Raises:
        PlantingError: n < 0 или допустимых вокселей меньше n
    """
    planting = planting or PlantingParams()
    lung = gt.lung_mask
    if n < 0:
        raise PlantingError(f"Число метастазов должно быть ≥ 0: {n}")
    if n == 0:
        return Volume3D(np.zeros(lung.dims, dtype=np.float32), lung.spacing, VolumeKind.BINARY)
    
    oracle = dense_colonization(gt.vessels, gt.tumor, lung, params, normalize_axis)
    centers = lung.voxel_centers()
    graph = build_graph(gt.vessels, params.R_0, params.delta_R, normalize_axis)
    _, _, axis_dist = nearest_by_loop(graph, centers)
    
    allowed = (lung.data == 1.0) & (axis_dist <= planting.max_site_distance)
    candidates = np.flatnonzero(allowed & (oracle.data > 0))
    if candidates.size < n:
        raise PlantingError(
            f"Запрошено {n} метастазов, доступно {candidates.size} колонизируемых вокселей"
        )
    
    weights = oracle.data[candidates] / oracle.data[candidates].sum()
    rng = np.random.Generator(np.random.Philox(key=[seed, 0]))
    sites = rng.choice(candidates, size=n, replace=False, p=weights)
    
    mask = np.zeros(centers.shape[0], dtype=bool)
    for site in sites:
        blob = np.linalg.norm(centers - centers[site], axis=1) <= planting.blob_radius
        mask |= blob & allowed
    
    logger.info(f"Посажено {n} метастазов: {int(mask.sum())} вокселей")
    return Volume3D.from_flat(mask.astype(np.float32), lung.dims, lung.spacing, VolumeKind.BINARY)


class PlantingError(PhantomError):
    """Посадка невозможна"""
    pass
