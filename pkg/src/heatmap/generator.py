"""
Генерация тепловой карты: оценка модели M в узлах сетки Ω и L1-нормировка
"""

import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Tuple, Union

import numpy as np
import yaml
from loguru import logger

from ..biophysics.model import FlowModel
from ..biophysics.params import SimulationParams, TumorSpec
from ..core.config import fingerprint
from ..data.grid import GridSpec, grid_positions, grid_volume_spacing
from ..data.volume import GridError, Volume3D, VolumeKind, read_volume, write_volume
from ..vessels.graph import VesselGraph


DEFAULT_CHUNK = 1024


@dataclass(frozen=True)
class HeatmapResult:
    """Ожидаемые числа клеток в узлах сетки и нормированная вероятность P(I)"""
    raw: Volume3D
    prob: Volume3D
    grid: GridSpec
    params_fingerprint: str
    zero_mass: bool = False
    
    def manifest(self) -> dict:
        return {
            'grid': list(self.grid.counts),
            'params_fingerprint': self.params_fingerprint,
            'zero_mass': self.zero_mass,
            'raw_total': float(self.raw.array.sum(dtype=np.float64)),
        }


def resolve_workers(workers: Optional[int]) -> int:
    """0 или None - число доступных ядер"""
    if not workers:
        return os.cpu_count() or 1
    return max(1, int(workers))


def _evaluate_chunk(
    flow: FlowModel,
    positions: np.ndarray,
    tissue_values: np.ndarray,
    counters: np.ndarray
) -> np.ndarray:
    """Оценка модели для непрерывного куска узлов (выполняется в воркере)"""
    expected = flow.expected_counts(positions, tissue_values)
    if not flow.params.stochastic:
        return expected
    return flow.sample_many(expected, counters)


def evaluate_points(
    flow: FlowModel,
    positions: np.ndarray,
    tissue_values: np.ndarray,
    workers: int = 1,
    chunk_size: int = DEFAULT_CHUNK
) -> np.ndarray:
    """
    Параллельная оценка модели в точках
    
    Результат собирается по индексам кусков, поэтому не зависит
    от числа воркеров.
    """
    n = positions.shape[0]
    counters = np.arange(n)
    bounds = [(start, min(start + chunk_size, n)) for start in range(0, n, chunk_size)]
    
    # доли переноса считаются до раздачи, воркеры получают готовый кэш
    for target in range(len(flow.graph)):
        flow.fraction_to(target)
    
    if workers <= 1 or len(bounds) <= 1:
        parts = [_evaluate_chunk(flow, positions[a:b], tissue_values[a:b], counters[a:b]) for a, b in bounds]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = [
                pool.submit(_evaluate_chunk, flow, positions[a:b], tissue_values[a:b], counters[a:b])
                for a, b in bounds
            ]
            parts = [f.result() for f in futures]
    
    return np.concatenate(parts) if parts else np.zeros(0)


def normalize_l1(raw_values: np.ndarray) -> Tuple[np.ndarray, bool]:
    """
    L1-нормировка ожиданий в вероятности
    
    Returns:
        (prob, zero_mass): при нулевой массе prob нулевой и флаг поднят
    """
    raw_values = np.asarray(raw_values, dtype=np.float64)
    total = float(raw_values.sum())
    if total <= 0.0:
        logger.warning("Нулевая масса тепловой карты: вероятность оставлена нулевой")
        return np.zeros_like(raw_values), True
    return raw_values / total, False


def generate_heatmap(
    graph: VesselGraph,
    tumor: TumorSpec,
    tissue: Volume3D,
    grid: GridSpec,
    params: SimulationParams,
    workers: Optional[int] = 1
) -> HeatmapResult:
    """
    Тепловая карта P(I) по узлам сетки Ω
    
    Args:
        graph: Граф кровотока G
        tumor: Первичная опухоль (τ_l, τ_s)
        tissue: Бинарная колонизируемая ткань I
        grid: Сетка Ω
        params: Параметры модели
        workers: Число процессов; 0/None - все ядра
        
    Returns:
        HeatmapResult: raw на сетке и нормированная prob
        
    Raises:
        HeatmapError: ткань не бинарная
        ExtentMismatchError: опухоль вне ткани или сетка крупнее объёма ткани
    """
    if tissue.kind != VolumeKind.BINARY:
        raise HeatmapError(f"Ткань должна быть бинарным объёмом, получено {tissue.kind.value}")
    if not tissue.contains(tumor.location):
        raise ExtentMismatchError(
            f"Опухоль {tumor.location} вне физического экстента ткани {tuple(tissue.extent_mm)}"
        )
    try:
        grid.validate_for(tissue)
    except GridError as e:
        raise ExtentMismatchError(f"Сетка {grid.counts} не помещается в ткань {tissue.dims}: {e}") from e
    
    _, positions = grid_positions(tissue, grid)
    voxels = np.minimum(
        np.floor(positions / np.asarray(tissue.spacing)).astype(int),
        np.asarray(tissue.dims) - 1
    )
    tissue_values = tissue.array[voxels[:, 0], voxels[:, 1], voxels[:, 2]].astype(np.float64)
    
    n_workers = resolve_workers(workers)
    logger.info(f"Тепловая карта: сетка {grid.counts}, {grid.size} узлов, воркеров {n_workers}")
    
    flow = FlowModel(graph, tumor, params)
    raw_values = evaluate_points(flow, positions, tissue_values, n_workers)
    
    spacing = grid_volume_spacing(tissue, grid)
    raw = Volume3D.from_flat(raw_values.astype(np.float64), grid.counts, spacing, VolumeKind.SCALAR)
    
    prob_values, zero_mass = normalize_l1(raw_values)
    total = float(raw_values.sum())
    prob = Volume3D.from_flat(prob_values, grid.counts, spacing, VolumeKind.PROBABILITY)
    
    result = HeatmapResult(raw, prob, grid, fingerprint(params), zero_mass)
    logger.info(f"Тепловая карта готова: масса {total:.6g}, нулевая={zero_mass}")
    return result


def upsample_to_volume(result: HeatmapResult, target_dims: Tuple[int, int, int]) -> Volume3D:
    """
    Перенос вероятностей на плотный объём ближайшим соседом
    
    Каждый целевой воксель получает значение своей страты сетки,
    затем объём перенормируется к сумме 1.
    """
    counts = np.asarray(result.grid.counts)
    target = np.asarray(target_dims, dtype=int)
    if target.shape != (3,) or np.any(target < counts):
        raise HeatmapError(f"Целевые размеры {tuple(target_dims)} меньше сетки {tuple(counts)}")
    
    strata = [
        np.minimum(np.floor((np.arange(n) + 0.5) * c / n).astype(int), c - 1)
        for n, c in zip(target, counts)
    ]
    values = result.prob.array.astype(np.float64)[np.ix_(*strata)]
    spacing = tuple(float(s) for s in result.prob.extent_mm / target)
    
    total = float(values.sum())
    if total > 0:
        values = values / total
    return Volume3D(values, spacing, VolumeKind.PROBABILITY)


def save_heatmap(result: HeatmapResult, out_dir: Union[str, Path], extra: Optional[dict] = None) -> Path:
    """Запись raw, prob и manifest.yaml"""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    write_volume(result.raw, out_dir / "raw")
    write_volume(result.prob, out_dir / "prob")
    manifest = result.manifest()
    if extra:
        manifest.update(extra)
    manifest_path = out_dir / "manifest.yaml"
    with open(manifest_path, 'w', encoding='utf-8') as file:
        yaml.safe_dump(manifest, file, sort_keys=False, allow_unicode=True)
    logger.debug(f"Тепловая карта сохранена в {out_dir}")
    return manifest_path


def load_heatmap(out_dir: Union[str, Path]) -> HeatmapResult:
    """Чтение тепловой карты, записанной save_heatmap"""
    out_dir = Path(out_dir)
    try:
        with open(out_dir / "manifest.yaml", 'r', encoding='utf-8') as file:
            manifest = yaml.safe_load(file)
    except FileNotFoundError as e:
        raise HeatmapError(f"Манифест тепловой карты не найден в {out_dir}") from e
    return HeatmapResult(
        raw=read_volume(out_dir / "raw"),
        prob=read_volume(out_dir / "prob"),
        grid=GridSpec(counts=tuple(manifest['grid'])),
        params_fingerprint=manifest.get('params_fingerprint', ''),
        zero_mass=bool(manifest.get('zero_mass', False)),
    )


class HeatmapError(Exception):
    """Базовое исключение для тепловых карт"""
    pass


class ExtentMismatchError(HeatmapError):
    """Входы описывают разные физические экстенты"""
    pass
