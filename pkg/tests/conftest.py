"""
Общие фикстуры тестов
"""

import math

import numpy as np
import pytest

from src.biophysics.params import SimulationParams, TumorSpec
from src.data.volume import Volume3D, VolumeKind
from src.phantom.generator import PhantomSpec, generate_phantom
from src.vessels.geometry import Vessel


def small_phantom_section() -> dict:
    """Фантом 16³ с деревом глубины 1 (3 сосуда)"""
    return {
        'dims': [16, 16, 16],
        'spacing': [1.0, 1.0, 1.0],
        'lung_ellipsoids': [
            {'center': [4.5, 8.0, 8.0], 'semi_axes': [3.5, 6.0, 6.5]},
            {'center': [11.5, 8.0, 8.0], 'semi_axes': [3.5, 6.0, 6.5]},
        ],
        'vessel_tree': {
            'root_start': [8.0, 8.0, 14.0],
            'root_direction': [0.0, 0.0, -1.0],
            'branching': 2,
            'depth': 1,
            'root_radius': 1.0,
            'radius_decay': 0.8,
            'root_length': 4.0,
            'length_decay': 0.8,
            'branch_angle': 0.6,
            'angle_jitter': 0.05,
        },
        'tumor': {'location': [4.5, 8.0, 8.0], 'radius': 1.0},
        'noise_sigma': 0.02,
        'smoothing_sigma': 1.0,
        'seed': 3,
    }


@pytest.fixture
def params() -> SimulationParams:
    """Параметры модели по умолчанию"""
    return SimulationParams()


@pytest.fixture
def small_spec() -> PhantomSpec:
    return PhantomSpec(**small_phantom_section())


@pytest.fixture(scope="session")
def small_phantom():
    """Сгенерированный фантом 16³ (объём, разметка)"""
    return generate_phantom(PhantomSpec(**small_phantom_section()))


@pytest.fixture
def full_tissue() -> Volume3D:
    """Бинарная ткань 16³ из одних единиц"""
    return Volume3D(np.ones((16, 16, 16), dtype=np.float32), (1.0, 1.0, 1.0), VolumeKind.BINARY)


@pytest.fixture
def single_vessel() -> Vessel:
    """Сосуд высоты 10 мм вдоль [1, √2/2, 0] с центром (5, 5, 5)"""
    return Vessel(c=(5.0, 5.0, 5.0), h=10.0, r=0.5, o_xy=0.0, o_xz=math.pi / 2)


@pytest.fixture
def touching_tumor() -> TumorSpec:
    """Опухоль, касающаяся single_vessel"""
    return TumorSpec(location=(5.0, 5.0, 5.0), radius=1.0)


@pytest.fixture
def point_vessels():
    """Фабрика вырожденных сосудов (h = 0) в заданных точках"""
    def make(points, h: float = 0.0, r: float = 0.5):
        return [Vessel(c=tuple(p), h=h, r=r, o_xy=0.0, o_xz=math.pi / 2) for p in points]
    return make
