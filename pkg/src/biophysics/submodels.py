"""
Упрощённые подмодели по умолчанию: радиальный рост,
экспоненциальное затухание в кровотоке, пуассоновская колонизация
"""

import math

import numpy as np

from ..contracts.colonization import ColonizationModel
from ..contracts.growth import GrowthModel
from ..contracts.transport import TransportModel
from ..vessels.graph import VesselGraph, paths_within, path_length
from .params import SimulationParams


def decay_horizon(N0: float, xi: float, lambda_len: float) -> float:
    """
    Длина пути, на которой когорта N0 падает до порога ξ

    N(L) = N0·exp(-λ·L) = ξ  =>  ν = ln(N0/ξ)/λ; при ξ ≥ N0 ν = 0.
    """
    if xi >= N0:
        return 0.0
    return math.log(N0 / xi) / lambda_len


def colonization_draw(mean: float, seed: int, counter: int) -> float:
    """
    Пуассоновская выборка со счётным генератором Philox

    Ключ генератора - пара (seed, counter), поэтому выборка в точке не
    зависит от порядка обхода и числа воркеров.
    """
    if mean <= 0:
        return 0.0
    key = np.array([seed % 2**64, counter % 2**64], dtype=np.uint64)
    rng = np.random.Generator(np.random.Philox(key=key))
    return float(rng.poisson(mean))


class RadialGrowth(GrowthModel):
    """Опухоль растёт радиально с постоянной скоростью g мм/день"""

    def __init__(self, speed: float):
        self.speed = speed

    def time_to_contact(self, distance_mm: float, tumor_radius: float) -> float:
        return max(0.0, (distance_mm - tumor_radius) / self.speed)


class ExponentialDecayTransport(TransportModel):
    """Когорта затухает как exp(-λ·L) вдоль пути длины L"""

    def __init__(self, lambda_len: float, N0: float, xi: float):
        self.lambda_len = lambda_len
        self.N0 = N0
        self.xi = xi

    def horizon(self) -> float:
        return decay_horizon(self.N0, self.xi, self.lambda_len)

    def survival(self, length_mm: float) -> float:
        return math.exp(-self.lambda_len * length_mm)

    def fraction(self, graph: VesselGraph, source: int, target: int) -> float:
        nu = self.horizon()
        if nu <= 0:
            return 0.0
        total = 0.0
        for path in paths_within(graph, source, target, nu):
            total += self.survival(path_length(graph, path))
        return min(total, 1.0)


class PoissonColonization(ColonizationModel):
    """Каждое прибытие оседает с вероятностью p_settle; шум - Пуассон"""

    def __init__(self, p_settle: float):
        self.p_settle = p_settle

    def expected(self, arrivals):
        return self.p_settle * arrivals

    def sample(self, mean: float, seed: int, counter: int) -> float:
        return colonization_draw(mean, seed, counter)


def default_submodels(params: SimulationParams):
    """Тройка подмоделей по умолчанию для набора параметров"""
    return (
        RadialGrowth(params.g),
        ExponentialDecayTransport(params.lambda_len, params.N0, params.xi),
        PoissonColonization(params.p_settle),
    )
