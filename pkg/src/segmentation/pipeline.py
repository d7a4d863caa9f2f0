"""
Посрезовая сегментация объёма вдоль оси z
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional, Union

import numpy as np
from loguru import logger
from PIL import Image
from pydantic import BaseModel, Field

from ..data.volume import Volume3D
from .contours import ClosedContour, close_contour
from .edges import EdgeMap, canny_adaptive
from .hough import Ellipse2D, hough_ellipses
from .reconstruction import reconstruct_tissue


class SegmentationParams(BaseModel):
    """Параметры сегментации"""
    canny_sigma: float = Field(1.5, gt=0)
    ellipses_per_slice: int = Field(2, ge=1)
    hough_iterations: int = Field(600, ge=1)
    min_support_ratio: float = Field(0.5, ge=0, le=1)
    min_axis: float = Field(3.0, gt=0, description="Минимальная малая полуось, пиксели")
    suppression_iou: float = Field(0.5, ge=0, le=1)
    bridge_limit: float = Field(5.0, ge=1)
    pixel_budget: int = Field(4000, ge=1)
    smoothing_iterations: int = Field(3, ge=0)
    seed: int = Field(0, ge=0)
    workers: int = Field(1, ge=1)
    debug_dir: Optional[str] = None
    
    model_config = {'frozen': True}


@dataclass
class SliceRecord:
    """Результат одного среза"""
    z: int
    edges: EdgeMap
    ellipses: List[Ellipse2D] = field(default_factory=list)
    contours: List[ClosedContour] = field(default_factory=list)
    
    @property
    def flagged(self) -> bool:
        """Срез без найденных эллипсов"""
        return not self.ellipses
    
    @property
    def fallbacks(self) -> int:
        return sum(1 for c in self.contours if c.fallback)


@dataclass
class SegmentationResult:
    mask: Volume3D
    records: List[SliceRecord]
    
    @property
    def flagged_slices(self) -> List[int]:
        return [r.z for r in self.records if r.flagged]
    
    @property
    def empty(self) -> bool:
        return not self.mask.array.any()
    
    def summary(self) -> dict:
        return {
            'slices': len(self.records),
            'flagged_slices': self.flagged_slices,
            'fallback_contours': sum(r.fallbacks for r in self.records),
            'tissue_voxels': int(self.mask.array.sum()),
            'empty': self.empty,
        }


def segment_slice(image: np.ndarray, z: int, params: SegmentationParams) -> SliceRecord:
    """Рёбра, эллипсы и замкнутые контуры одного среза"""
    edges = canny_adaptive(image, params.canny_sigma)
    ellipses = hough_ellipses(
        edges,
        params.ellipses_per_slice,
        iterations=params.hough_iterations,
        min_support_ratio=params.min_support_ratio,
        min_axis=params.min_axis,
        suppression_iou=params.suppression_iou,
        seed=params.seed + z,
    )
    contours = [
        close_contour(edges, e, bridge_limit=params.bridge_limit, pixel_budget=params.pixel_budget)
        for e in ellipses
    ]
    return SliceRecord(z, edges, ellipses, contours)


def segment_volume(volume: Volume3D, params: Optional[SegmentationParams] = None) -> SegmentationResult:
    """
    Бинарная маска колонизируемой ткани из скалярного объёма
    
    Срезы обрабатываются независимо (при workers > 1 - в пуле потоков),
    затем контуры собираются в объём и сглаживаются.
    
    Args:
        volume: Скалярный объём
        params: Параметры сегментации
        
    Returns:
        SegmentationResult: Маска, записи по срезам и флаги
    """
    params = params or SegmentationParams()
    nz = volume.dims[2]
    logger.info(f"Сегментация {nz} срезов, воркеров {params.workers}")
    
    def run(z: int) -> SliceRecord:
        return segment_slice(np.asarray(volume.array[:, :, z], dtype=np.float64), z, params)
    
    if params.workers > 1:
        with ThreadPoolExecutor(max_workers=params.workers) as pool:
            records = list(pool.map(run, range(nz)))
    else:
        records = [run(z) for z in range(nz)]
    
    mask = reconstruct_tissue(
        [r.contours for r in records],
        volume.dims[:2],
        volume.spacing,
        params.smoothing_iterations,
    )
    result = SegmentationResult(mask, records)
    
    flagged = result.flagged_slices
    if flagged:
        logger.warning(f"Срезы без эллипсов: {len(flagged)} из {nz}")
    if params.debug_dir:
        dump_debug(result, params.debug_dir)
    
    logger.info(f"Сегментация завершена: {int(mask.array.sum())} вокселей ткани")
    return result


def dump_debug(result: SegmentationResult, out_dir: Union[str, Path]) -> List[Path]:
    """
    PNG-наложения по срезам: рёбра белым, контуры красным, эллипсы зелёным
    
    Returns:
        List[Path]: Записанные файлы
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    for record in result.records:
        shape = record.edges.dims
        rgb = np.zeros(shape + (3,), dtype=np.uint8)
        rgb[record.edges.pixels] = (255, 255, 255)
        for ellipse in record.ellipses:
            rgb[ellipse.outline(shape)] = (0, 255, 0)
        for contour in record.contours:
            chain = contour.vertices
            inside = (chain[:, 0] >= 0) & (chain[:, 0] < shape[0]) & (chain[:, 1] >= 0) & (chain[:, 1] < shape[1])
            rgb[chain[inside, 0], chain[inside, 1]] = (255, 0, 0)
        path = out_dir / f"slice_{record.z:04d}.png"
        Image.fromarray(np.ascontiguousarray(rgb.transpose(1, 0, 2))).save(path)
        written.append(path)
    logger.debug(f"Отладочные наложения: {len(written)} файлов в {out_dir}")
    return written
