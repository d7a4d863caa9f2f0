"""
Модель M(G, p[l], I, τ) -> c: ожидаемое число клеток, осевших в точке τ
"""

from typing import Dict, Optional, Sequence

import numpy as np
from loguru import logger

from ..contracts.colonization import ColonizationModel
from ..contracts.growth import GrowthModel
from ..contracts.transport import TransportModel
from ..data.volume import Volume3D, VolumeKind
from ..vessels.graph import VesselGraph, max_spanning_tree, nearest_vessel, nearest_vessels
from .params import SimulationParams, TumorSpec
from .submodels import (
    RadialGrowth, ExponentialDecayTransport, default_submodels, decay_horizon
)


def nu_from_decay(params: SimulationParams) -> float:
    """
    Граница длины пути ν из порога вымирания ξ

    Returns:
        float: ν = ln(N0/ξ)/λ в мм; 0 при ξ ≥ N0
    """
    return decay_horizon(params.N0, params.xi, params.lambda_len)


def time_to_vessel(tumor: TumorSpec, graph: VesselGraph, params: SimulationParams) -> float:
    """
    Время роста опухоли до контакта с ближайшим сосудом

    Returns:
        float: max(0, (расстояние - радиус)/g) в днях
    """
    if len(graph) == 0:
        raise SimulationError("Граф сосудов пуст")
    _, distance = nearest_vessel(graph, tumor.location)
    return RadialGrowth(params.g).time_to_contact(distance, tumor.radius)


def transported_fraction(graph: VesselGraph, s: int, t: int, params: SimulationParams) -> float:
    """
    Доля когорты, дошедшая от сосуда s до сосуда t

    Сумма exp(-λ·L) по всем допустимым путям короче ν, не больше 1.
    """
    transport = ExponentialDecayTransport(params.lambda_len, params.N0, params.xi)
    return transport.fraction(graph, s, t)


class FlowModel:
    """
    Подготовленная модель M для одной опухоли

    Кэширует ближайший к опухоли сосуд b_s^S, время контакта и доли
    переноса к каждому целевому сосуду, чтобы оценка многих точек τ
    не повторяла поиск путей.
    """

    def __init__(
        self,
        graph: VesselGraph,
        tumor: TumorSpec,
        params: SimulationParams,
        growth: Optional[GrowthModel] = None,
        transport: Optional[TransportModel] = None,
        colonization: Optional[ColonizationModel] = None
    ):
        if len(graph) == 0:
            raise SimulationError("Граф сосудов пуст")

        default_growth, default_transport, default_colonization = default_submodels(params)
        self.growth = growth or default_growth
        self.transport = transport or default_transport
        self.colonization = colonization or default_colonization
        self.params = params
        self.tumor = tumor

        if params.use_spanning_tree and not graph.is_tree():
            graph = max_spanning_tree(graph)
        self.graph = graph

        self.source, self.source_distance = nearest_vessel(graph, tumor.location)
        self.t_reach = self.growth.time_to_contact(self.source_distance, tumor.radius)
        self.window = max(0.0, params.T - self.t_reach)
        self._fractions: Dict[int, float] = {}

        logger.debug(
            f"Модель потока: b_s^S={self.source}, t_reach={self.t_reach:.3f} дн, "
            f"окно отделения {self.window:.3f} дн"
        )

    def fraction_to(self, target: int) -> float:
        """Доля переноса к целевому сосуду (с кэшем)"""
        if target not in self._fractions:
            self._fractions[target] = self.transport.fraction(self.graph, self.source, target)
        return self._fractions[target]

    def expected_counts(self, points: np.ndarray, tissue_values: np.ndarray) -> np.ndarray:
        """
        Ожидаемое число осевших клеток для массива точек

        Args:
            points: (N, 3) точки τ в мм
            tissue_values: (N,) значения бинарной ткани в этих точках

        Returns:
            np.ndarray: (N,) неотрицательные ожидания
        """
        points = np.atleast_2d(np.asarray(points, dtype=np.float64))
        tissue_values = np.asarray(tissue_values, dtype=np.float64).reshape(-1)
        if self.window <= 0:
            return np.zeros(points.shape[0])

        targets, _ = nearest_vessels(self.graph, points)
        lookup = np.zeros(len(self.graph))
        for target in np.unique(targets):
            lookup[target] = self.fraction_to(int(target))
        fractions = lookup[targets]

        arrivals = self.params.d * self.window * fractions
        settled = self.colonization.expected(arrivals)
        return np.where(tissue_values == 1.0, settled, 0.0)

    def sample(self, mean: float, counter: int) -> float:
        """Случайная реализация в точке с данным счётчиком"""
        return self.colonization.sample(mean, self.params.seed, counter)

    def sample_many(self, means: np.ndarray, counters: np.ndarray) -> np.ndarray:
        """Реализации для массива точек; i-я зависит только от counters[i]"""
        return self.colonization.sample_many(means, self.params.seed, counters)


def model_M(
    graph: VesselGraph,
    tumor: TumorSpec,
    tissue: Volume3D,
    tau: Sequence[float],
    params: SimulationParams,
    counter: Optional[int] = None
) -> float:
    """
    Число клеток, осевших в точке τ

    c = [I(τ) = 1]·d·max(0, T - t_reach)·доля_переноса(b_s^S, b_s^T)·p_settle.
    В стохастическом режиме возвращается пуассоновская выборка с этим
    средним; счётчик по умолчанию - плоский индекс вокселя τ.

    Args:
        graph: Граф кровотока G
        tumor: Первичная опухоль
        tissue: Бинарный объём колонизируемой ткани I
        tau: Точка интереса, мм
        params: Параметры модели
        counter: Счётчик генератора (индекс узла сетки)

    Returns:
        float: Число клеток c ≥ 0
    """
    if tissue.kind != VolumeKind.BINARY:
        raise SimulationError(f"Ткань должна быть бинарным объёмом, получено {tissue.kind.value}")
    if not tissue.contains(tau):
        raise SimulationError(f"Точка τ={tuple(tau)} вне объёма")

    flow = FlowModel(graph, tumor, params)
    voxel = tissue.voxel_at(tau)
    mean = float(flow.expected_counts(np.asarray(tau)[None, :], [tissue.array[voxel]])[0])

    if not params.stochastic:
        return mean
    if counter is None:
        nx_, ny_, _ = tissue.dims
        counter = voxel[0] + nx_ * (voxel[1] + ny_ * voxel[2])
    return flow.sample(mean, counter)


class SimulationError(Exception):
    """Ошибка вычисления биофизической модели"""
    pass
