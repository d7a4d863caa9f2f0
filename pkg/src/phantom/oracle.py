"""
Плотная эталонная оценка модели M в каждом вокселе

Написана независимо от src.biophysics: собственный поиск ближайшего
сосуда и собственный рекурсивный перебор путей. Используется для посадки
метастазов и как эталон для тепловых карт.
"""

import math
from typing import Dict, List, Sequence

import numpy as np
from loguru import logger

from ..biophysics.params import SimulationParams, TumorSpec
from ..data.volume import Volume3D, VolumeKind
from ..vessels.geometry import Vessel
from ..vessels.graph import VesselGraph, build_graph, max_spanning_tree


def _axis_distance(point: np.ndarray, start: np.ndarray, end: np.ndarray) -> np.ndarray:
    """Расстояние от точек (N, 3) до отрезка [start, end]"""
    axis = end - start
    length_sq = float(axis @ axis)
    if length_sq == 0.0:
        return np.linalg.norm(point - start, axis=1)
    t = np.clip(((point - start) @ axis) / length_sq, 0.0, 1.0)
    return np.linalg.norm(point - (start + t[:, None] * axis), axis=1)


def nearest_by_loop(graph: VesselGraph, points: np.ndarray):
    """
    Ближайший сосуд перебором по сосудам
    
    Returns:
        (индексы, расстояния до поверхности, расстояния до оси)
    """
    points = np.atleast_2d(points)
    best = np.full(points.shape[0], np.inf)
    best_axis = np.full(points.shape[0], np.inf)
    index = np.zeros(points.shape[0], dtype=int)
    for v in range(len(graph)):
        axis_dist = _axis_distance(points, graph.starts[v], graph.ends[v])
        surface = np.maximum(axis_dist - graph.vessels[v].r, 0.0)
        closer = surface < best
        index[closer] = v
        best[closer] = surface[closer]
        best_axis = np.minimum(best_axis, axis_dist)
    return index, best, best_axis


def _path_mass(
    adjacency: Dict[int, List[int]],
    heights: Sequence[float],
    node: int,
    target: int,
    length: float,
    visited: set,
    nu: float,
    lambda_len: float
) -> float:
    if node == target:
        return math.exp(-lambda_len * length)
    mass = 0.0
    for nxt in adjacency[node]:
        if nxt in visited:
            continue
        extended = length + heights[nxt]
        if extended >= nu:
            continue
        visited.add(nxt)
        mass += _path_mass(adjacency, heights, nxt, target, extended, visited, nu, lambda_len)
        visited.discard(nxt)
    return mass


def oracle_fraction(graph: VesselGraph, source: int, target: int, params: SimulationParams) -> float:
    """Сумма exp(-λ·L) по простым путям короче ν, не больше 1"""
    if params.xi >= params.N0:
        return 0.0
    nu = math.log(params.N0 / params.xi) / params.lambda_len
    heights = [v.h for v in graph.vessels]
    if heights[source] >= nu:
        return 0.0
    adjacency: Dict[int, List[int]] = {i: [] for i in range(len(graph))}
    for i, j in graph.edges:
        adjacency[i].append(j)
        adjacency[j].append(i)
    mass = _path_mass(adjacency, heights, source, target, heights[source], {source}, nu, params.lambda_len)
    return min(mass, 1.0)


def dense_colonization(
    vessels: Sequence[Vessel],
    tumor: TumorSpec,
    tissue: Volume3D,
    params: SimulationParams,
    normalize_axis: bool = False
) -> Volume3D:
    """
    Ожидаемое число осевших клеток в центре каждого вокселя
    
    Args:
        vessels: Сосуды
        tumor: Первичная опухоль
        tissue: Бинарная ткань, задаёт геометрию
        params: Параметры модели
        normalize_axis: Нормировка направляющего вектора
        
    Returns:
        Volume3D: Скалярный float64 объём ожиданий
    """
    graph = build_graph(vessels, params.R_0, params.delta_R, normalize_axis)
    if params.use_spanning_tree and len(graph.edges) != len(graph) - 1:
        graph = max_spanning_tree(graph)
    
    source_idx, source_dist, _ = nearest_by_loop(graph, np.asarray(tumor.location, dtype=np.float64)[None, :])
    source = int(source_idx[0])
    t_reach = max(0.0, (float(source_dist[0]) - tumor.radius) / params.g)
    window = max(0.0, params.T - t_reach)
    
    centers = tissue.voxel_centers()
    targets, _, _ = nearest_by_loop(graph, centers)
    fractions = {int(t): oracle_fraction(graph, source, int(t), params) for t in np.unique(targets)}
    
    values = np.array([fractions[int(t)] for t in targets]) * params.d * window * params.p_settle
    values = np.where(tissue.data == 1.0, values, 0.0)
    
    logger.debug(f"Эталон: источник {source}, окно {window:.3f} дн, масса {values.sum():.6g}")
    return Volume3D.from_flat(values.astype(np.float64), tissue.dims, tissue.spacing, VolumeKind.SCALAR)
