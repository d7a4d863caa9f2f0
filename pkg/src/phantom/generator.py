"""
Генератор фантома: два эллипсоида лёгких, бифуркационное дерево сосудов,
первичная опухоль и гауссов шум
"""

import math
from dataclasses import dataclass, replace
from pathlib import Path
from typing import List, Tuple, Union

import numpy as np
import yaml
from loguru import logger
from pydantic import BaseModel, Field, field_validator, model_validator
from scipy import ndimage
from scipy.special import ndtri

from ..biophysics.params import TumorSpec
from ..data.volume import Volume3D, VolumeKind, read_volume, write_volume
from ..vessels.geometry import Vessel, endpoints, segment_distances
from ..vessels.io import save_vessels, load_vessels


Vector = Tuple[float, float, float]

# потоки счётного генератора
NOISE_STREAM = 1
JITTER_STREAM = 2

RENDER_CHUNK = 32768

# одно 64-битное слово из каждого блока Philox4x64
PHILOX_WORDS = 4


def counter_normals(seed: int, stream: int, start: int, count: int) -> np.ndarray:
    """
    Стандартные нормальные величины с индексами start..start+count-1
    
    Значение с индексом i зависит только от (seed, stream, i): Philox
    с ключом (seed, stream) и счётчиком i, первое слово блока переводится
    в равномерную величину на (0, 1) и затем через обратную функцию
    нормального распределения.
    """
    if start < 0 or count < 0:
        raise ValueError(f"Индексы должны быть неотрицательными: start={start}, count={count}")
    bits = np.random.Philox(key=[seed, stream], counter=start)
    words = bits.random_raw(PHILOX_WORDS * count)[::PHILOX_WORDS]
    uniform = ((words >> np.uint64(11)).astype(np.float64) + 0.5) * 2.0 ** -53
    return ndtri(uniform)


class EllipsoidSpec(BaseModel):
    """Осевой эллипсоид лёгкого"""
    center: Vector = Field(..., description="Центр, мм")
    semi_axes: Vector = Field(..., description="Полуоси, мм")
    
    @field_validator('semi_axes')
    @classmethod
    def _positive(cls, value: Vector) -> Vector:
        if any(a <= 0 for a in value):
            raise ValueError(f"Полуоси должны быть положительны: {value}")
        return value
    
    def contains(self, points: np.ndarray) -> np.ndarray:
        """Маска точек (N, 3), лежащих внутри эллипсоида"""
        scaled = (np.atleast_2d(points) - np.asarray(self.center)) / np.asarray(self.semi_axes)
        return np.einsum('nk,nk->n', scaled, scaled) <= 1.0


class VesselTreeSpec(BaseModel):
    """Параметры рекурсивного бифуркационного дерева"""
    root_start: Vector = Field(..., description="Начало корневого сосуда, мм")
    root_direction: Vector = Field((0.0, 0.0, -1.0), description="Желаемое направление корня")
    branching: int = Field(2, ge=1, description="Число дочерних ветвей")
    depth: int = Field(3, ge=0, description="Глубина дерева (0 - только корень)")
    root_radius: float = Field(2.5, gt=0, description="Радиус корня, мм")
    radius_decay: float = Field(0.7, gt=0, le=1, description="Множитель радиуса на поколение")
    root_length: float = Field(12.0, gt=0, description="Длина корневого сегмента, мм")
    length_decay: float = Field(0.8, gt=0, le=1, description="Множитель длины на поколение")
    branch_angle: float = Field(0.6, ge=0, le=math.pi / 2, description="Угол ветвления, рад")
    angle_jitter: float = Field(0.08, ge=0, description="Разброс угла ветвления, рад")
    
    @property
    def n_vessels(self) -> int:
        return sum(self.branching ** g for g in range(self.depth + 1))


class PhantomSpec(BaseModel):
    """Полное описание фантома"""
    dims: Tuple[int, int, int] = Field((64, 64, 64), description="Размеры, воксели")
    spacing: Vector = Field((1.0, 1.0, 1.0), description="Шаг, мм/воксель")
    lung_ellipsoids: List[EllipsoidSpec] = Field(..., min_length=2, max_length=2)
    vessel_tree: VesselTreeSpec
    tumor: TumorSpec
    noise_sigma: float = Field(0.02, ge=0)
    smoothing_sigma: float = Field(1.0, ge=0, description="Сглаживание фона, воксели")
    tissue_intensity: float = Field(0.6)
    lung_intensity: float = Field(0.15)
    vessel_intensity: float = Field(1.0)
    tumor_intensity: float = Field(0.9)
    seed: int = Field(42, ge=0)
    
    model_config = {'frozen': True}
    
    @field_validator('dims')
    @classmethod
    def _dims(cls, value: Tuple[int, int, int]) -> Tuple[int, int, int]:
        if any(n < 2 for n in value):
            raise ValueError(f"Размеры фантома должны быть ≥ 2: {value}")
        return value
    
    @field_validator('spacing')
    @classmethod
    def _spacing(cls, value: Vector) -> Vector:
        if any(s <= 0 for s in value):
            raise ValueError(f"Шаг должен быть положительным: {value}")
        return value
    
    @model_validator(mode='after')
    def _vessel_contrast(self) -> 'PhantomSpec':
        background = max(self.tissue_intensity, self.lung_intensity)
        if self.vessel_intensity - background < 3 * self.noise_sigma:
            raise ValueError(
                f"Контраст сосудов {self.vessel_intensity - background:.3g} меньше 3·σ = {3 * self.noise_sigma:.3g}"
            )
        return self
    
    @property
    def extent_mm(self) -> np.ndarray:
        return np.asarray(self.dims, dtype=np.float64) * np.asarray(self.spacing)
    
    @classmethod
    def from_config(cls, section: dict) -> 'PhantomSpec':
        return cls(**section)


@dataclass(frozen=True)
class GroundTruth:
    """Разметка фантома"""
    vessels: Tuple[Vessel, ...]
    lung_mask: Volume3D
    tumor: TumorSpec
    metastasis_mask: Volume3D
    
    def with_metastases(self, mask: Volume3D) -> 'GroundTruth':
        return replace(self, metastasis_mask=mask)


def direction_to_angles(direction: np.ndarray) -> Tuple[float, float, np.ndarray]:
    """
    Подбор ориентаций (o_xy, o_xz) под желаемое направление
    
    Вектор [cos a, cos(π/4 - a), cos b] не может быть вертикальным: его
    xy-часть не короче 0.54, поэтому крутые направления прижимаются к
    ближайшему достижимому наклону.
    
    Returns:
        (o_xy, o_xz, u): углы и соответствующий ненормированный вектор u
    """
    w = np.asarray(direction, dtype=np.float64)
    w = w / np.linalg.norm(w)
    w_xy = math.hypot(w[0], w[1])
    
    if w_xy < 1e-12:
        # минимум длины xy-части
        o_xy = 5 * math.pi / 8
    else:
        o_xy = math.atan2(math.sqrt(2) * w[1] - w[0], w[0]) % (2 * math.pi)
    
    u_xy = math.hypot(math.cos(o_xy), math.cos(math.pi / 4 - o_xy))
    if w_xy < 1e-12:
        cos_b = math.copysign(1.0, w[2])
    else:
        cos_b = float(np.clip(u_xy * w[2] / w_xy, -1.0, 1.0))
    o_xz = math.acos(cos_b)
    
    u = np.array([math.cos(o_xy), math.cos(math.pi / 4 - o_xy), cos_b])
    return o_xy, o_xz, u


def vessel_between(start: np.ndarray, direction: np.ndarray, length: float, radius: float) -> Vessel:
    """Сосуд с торцом sl = start и физической длиной length"""
    o_xy, o_xz, u = direction_to_angles(direction)
    h = length / float(np.linalg.norm(u))
    center = np.asarray(start, dtype=np.float64) + 0.5 * h * u
    return Vessel(c=tuple(center), h=h, r=radius, o_xy=o_xy, o_xz=o_xz)


def _spread_basis(direction: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Ортонормированный базис плоскости, перпендикулярной направлению"""
    reference = np.array([0.0, 1.0, 0.0])
    if abs(float(np.dot(direction, reference))) > 0.99:
        reference = np.array([1.0, 0.0, 0.0])
    e1 = np.cross(direction, reference)
    e1 /= np.linalg.norm(e1)
    e2 = np.cross(direction, e1)
    return e1, e2


def grow_vessel_tree(tree: VesselTreeSpec, seed: int) -> List[Vessel]:
    """
    Рекурсивная бифуркация: начало каждой дочерней ветви совпадает
    с концом родительской
    
    Args:
        tree: Параметры дерева
        seed: Зерно разброса углов; отклонение ветви зависит только от её номера
        
    Returns:
        List[Vessel]: Сосуды в порядке обхода в ширину
    """
    jitter = counter_normals(seed, JITTER_STREAM, 0, tree.n_vessels)
    vessels: List[Vessel] = []
    
    frontier = [(np.asarray(tree.root_start, dtype=np.float64), np.asarray(tree.root_direction, dtype=np.float64))]
    for generation in range(tree.depth + 1):
        length = tree.root_length * tree.length_decay ** generation
        radius = tree.root_radius * tree.radius_decay ** generation
        first_child = sum(tree.branching ** g for g in range(generation + 1))
        next_frontier = []
        for start, wanted in frontier:
            vessel = vessel_between(start, wanted, length, radius)
            vessels.append(vessel)
            if generation == tree.depth:
                continue
            
            _, end = endpoints(vessel)
            actual = (end - start) / np.linalg.norm(end - start)
            e1, e2 = _spread_basis(actual)
            phase = generation * math.pi / 2
            for k in range(tree.branching):
                phi = phase + 2 * math.pi * k / tree.branching
                theta = tree.branch_angle + tree.angle_jitter * jitter[first_child + len(next_frontier)]
                child = math.cos(theta) * actual + math.sin(theta) * (math.cos(phi) * e1 + math.sin(phi) * e2)
                next_frontier.append((end, child))
        frontier = next_frontier
    
    return vessels


def _vessel_mask(vessels: List[Vessel], centers: np.ndarray, dims: Tuple[int, int, int]) -> np.ndarray:
    """Воксели, центр которых ближе r к оси хотя бы одного сосуда"""
    pairs = [endpoints(v) for v in vessels]
    starts = np.array([p[0] for p in pairs])
    ends = np.array([p[1] for p in pairs])
    radii = np.array([v.r for v in vessels])
    
    inside = np.zeros(centers.shape[0], dtype=bool)
    for a in range(0, centers.shape[0], RENDER_CHUNK):
        dist = segment_distances(starts, ends, centers[a:a + RENDER_CHUNK])
        inside[a:a + RENDER_CHUNK] = np.any(dist <= radii[None, :], axis=1)
    return inside.reshape(dims, order='F')


def generate_phantom(spec: PhantomSpec) -> Tuple[Volume3D, GroundTruth]:
    """
    Синтетический КТ-объём и его разметка
    
    Фон - ткань с более тёмными лёгкими, сглаженный гауссовым фильтром;
    поверх него яркие сосуды и опухоль, затем гауссов шум.
    
    Args:
        spec: Описание фантома
        
    Returns:
        (скалярный объём, GroundTruth с пустой маской метастазов)
        
    Raises:
        PhantomSpecError: опухоль вне лёгких, дерево выходит за объём
            или самый короткий сегмент короче двух вокселей
    """
    tree = spec.vessel_tree
    location = np.asarray(spec.tumor.location, dtype=np.float64)
    if not any(e.contains(location[None, :])[0] for e in spec.lung_ellipsoids):
        raise PhantomSpecError(f"Опухоль {spec.tumor.location} лежит вне обоих лёгких")
    
    deepest = tree.root_length * tree.length_decay ** tree.depth
    if deepest < 2 * min(spec.spacing):
        raise PhantomSpecError(
            f"Сегменты глубины {tree.depth} короче двух вокселей ({deepest:.3g} мм)"
        )
    
    vessels = grow_vessel_tree(tree, spec.seed)
    extent = spec.extent_mm
    for i, vessel in enumerate(vessels):
        for point in endpoints(vessel):
            if np.any(point < 0) or np.any(point >= extent):
                raise PhantomSpecError(
                    f"Сосуд {i} выходит за объём {tuple(extent)}: торец {tuple(np.round(point, 3))}"
                )
    
    geometry = Volume3D(np.zeros(spec.dims, dtype=np.float32), spec.spacing, VolumeKind.BINARY)
    centers = geometry.voxel_centers()
    
    lungs = np.zeros(centers.shape[0], dtype=bool)
    for ellipsoid in spec.lung_ellipsoids:
        lungs |= ellipsoid.contains(centers)
    lungs = lungs.reshape(spec.dims, order='F')
    
    vessel_voxels = _vessel_mask(vessels, centers, spec.dims)
    tumor_voxels = (
        np.linalg.norm(centers - location, axis=1) <= spec.tumor.radius
    ).reshape(spec.dims, order='F')
    
    background = np.where(lungs, spec.lung_intensity, spec.tissue_intensity)
    if spec.smoothing_sigma > 0:
        background = ndimage.gaussian_filter(background, spec.smoothing_sigma, mode='nearest')
    intensity = np.where(vessel_voxels, spec.vessel_intensity, background)
    intensity = np.where(tumor_voxels, spec.tumor_intensity, intensity)
    
    if spec.noise_sigma > 0:
        noise = counter_normals(spec.seed, NOISE_STREAM, 0, int(np.prod(spec.dims))).reshape(spec.dims, order='F')
        intensity = intensity + spec.noise_sigma * noise
    
    volume = Volume3D(intensity.astype(np.float32), spec.spacing, VolumeKind.SCALAR)
    lung_mask = Volume3D(lungs.astype(np.float32), spec.spacing, VolumeKind.BINARY)
    empty = Volume3D(np.zeros(spec.dims, dtype=np.float32), spec.spacing, VolumeKind.BINARY)
    
    logger.info(
        f"Фантом {spec.dims}: {len(vessels)} сосудов, {int(lungs.sum())} вокселей лёгких, "
        f"{int(vessel_voxels.sum())} вокселей сосудов"
    )
    return volume, GroundTruth(tuple(vessels), lung_mask, spec.tumor, empty)


def save_ground_truth(gt: GroundTruth, out_dir: Union[str, Path]) -> Path:
    """Запись разметки: маски, vessels.json и tumor.yaml"""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    write_volume(gt.lung_mask, out_dir / "lung_mask")
    write_volume(gt.metastasis_mask, out_dir / "metastasis_mask")
    save_vessels(gt.vessels, out_dir / "vessels.json")
    with open(out_dir / "tumor.yaml", 'w', encoding='utf-8') as file:
        yaml.safe_dump(
            {'location': list(gt.tumor.location), 'radius': gt.tumor.radius}, file,
            default_flow_style=None, sort_keys=False
        )
    return out_dir


def load_tumor(path: Union[str, Path]) -> TumorSpec:
    """Чтение tumor.yaml"""
    try:
        with open(path, 'r', encoding='utf-8') as file:
            payload = yaml.safe_load(file) or {}
        return TumorSpec(location=tuple(payload['location']), radius=payload['radius'])
    except (OSError, KeyError, TypeError) as e:
        raise PhantomError(f"Не удалось прочитать опухоль из {path}: {e}") from e


def load_ground_truth(out_dir: Union[str, Path]) -> GroundTruth:
    out_dir = Path(out_dir)
    return GroundTruth(
        vessels=tuple(load_vessels(out_dir / "vessels.json")),
        lung_mask=read_volume(out_dir / "lung_mask"),
        tumor=load_tumor(out_dir / "tumor.yaml"),
        metastasis_mask=read_volume(out_dir / "metastasis_mask"),
    )


class PhantomError(Exception):
    """Базовое исключение для фантома"""
    pass


class PhantomSpecError(PhantomError):
    """Описание фантома нарушает инварианты"""
    pass
