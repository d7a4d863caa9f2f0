"""
Главный модуль симулятора: этапы конвейера и их оркестрация
"""

import json
import shutil
import time
from contextlib import contextmanager
from importlib import metadata
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple, Union

import yaml
from loguru import logger

from . import __version__
from .biophysics.params import SimulationParams
from .core.config import Config, config, fingerprint
from .data.grid import GridSpec
from .data.render import render_slice
from .data.volume import Volume3D, read_volume, write_volume
from .heatmap.generator import generate_heatmap, save_heatmap, upsample_to_volume
from .metrics.scores import ScoreReport, score_batch
from .phantom.generator import PhantomSpec, generate_phantom, load_tumor, save_ground_truth
from .phantom.planting import PlantingParams, plant_metastases
from .segmentation.pipeline import SegmentationParams, segment_volume
from .vessels.graph import VesselGraph, build_graph, max_spanning_tree
from .vessels.io import load_graph, load_vessels, save_graph


PathLike = Union[str, Path]

REPORTED_PACKAGES = (
    "numpy", "scipy", "pandas", "scikit-image", "networkx",
    "pillow", "pydantic", "pyyaml", "loguru",
)


def package_versions() -> Dict[str, str]:
    """Версии пакетов для манифеста"""
    versions = {"metasim": __version__}
    for name in REPORTED_PACKAGES:
        try:
            versions[name] = metadata.version(name)
        except metadata.PackageNotFoundError:
            versions[name] = "unknown"
    return versions


class MetastasisPipeline:
    """
    Конвейер: фантом → сегментация → граф сосудов → тепловая карта → оценка

    Каждая команда cmd_* - самостоятельный этап с файловыми входами и
    выходами; cmd_pipeline прогоняет их подряд в одном каталоге.
    """

    def __init__(
        self,
        settings: Optional[Config] = None,
        out_dir: Optional[PathLike] = None,
        seed: Optional[int] = None,
        workers: Optional[int] = None,
        zeta: Optional[float] = None,
        grid: Optional[Tuple[int, int, int]] = None,
        stochastic: Optional[bool] = None
    ):
        """
        Инициализация конвейера

        Args:
            settings: Конфигурация; по умолчанию копия глобальной
            out_dir: Каталог результатов
            seed: Зерно для всех генераторов
            workers: Процессы тепловой карты
            zeta: Порог жёсткого скора
            grid: Сетка Ω
            stochastic: Пуассоновский режим модели
        """
        # флаги меняют копию, а не глобальную конфигурацию
        self.config = settings or Config(config.config_path)
        self.config.merge({
            'pipeline.out_dir': str(out_dir) if out_dir is not None else None,
            'phantom.seed': seed,
            'planting.seed': seed,
            'segmentation.seed': seed,
            'simulation.seed': seed,
            'heatmap.workers': workers,
            'metrics.zeta': zeta,
            'heatmap.grid': list(grid) if grid is not None else None,
            'simulation.stochastic': True if stochastic else None,
        })
        self.stages: List[Dict[str, Any]] = []
        self.fingerprints: Dict[str, str] = {}

    @property
    def out_dir(self) -> Path:
        return Path(self.config.get('pipeline.out_dir', 'runs/latest'))

    # Параметры из конфигурации

    @property
    def normalize_axis(self) -> bool:
        return bool(self.config.get('vessels.normalize_axis', False))

    def simulation_params(self) -> SimulationParams:
        params = SimulationParams.from_config(self.config.simulation_config)
        self.fingerprints['simulation'] = fingerprint(params)
        return params

    def grid_spec(self) -> GridSpec:
        grid = GridSpec(counts=tuple(self.config.get('heatmap.grid', [16, 16, 16])))
        self.fingerprints['grid'] = fingerprint(grid)
        return grid

    def phantom_spec(self) -> PhantomSpec:
        spec = PhantomSpec.from_config(self.config.phantom_config)
        self.fingerprints['phantom'] = fingerprint(spec)
        return spec

    def segmentation_params(self) -> SegmentationParams:
        params = SegmentationParams(**self.config.segmentation_config)
        self.fingerprints['segmentation'] = fingerprint(params)
        return params

    def planting_params(self) -> PlantingParams:
        params = PlantingParams(**self.config.planting_config)
        self.fingerprints['planting'] = fingerprint(params)
        return params

    @contextmanager
    def stage(self, name: str):
        """Этап с замером времени; любая ошибка превращается в PipelineError(name)"""
        started = time.perf_counter()
        logger.info(f"▶️ Этап {name}")
        try:
            yield
        except PipelineError:
            raise
        except Exception as e:
            logger.error(f"❌ Этап {name} завершился ошибкой: {e}")
            self.stages.append({'stage': name, 'status': 'failed', 'seconds': time.perf_counter() - started})
            raise PipelineError(name, e) from e
        elapsed = time.perf_counter() - started
        self.stages.append({'stage': name, 'status': 'ok', 'seconds': round(elapsed, 3)})
        logger.info(f"✅ Этап {name} завершён за {elapsed:.2f} с")

    def _graph_from(self, path: PathLike, params: SimulationParams) -> VesselGraph:
        """Граф из файла графа или из списка сосудов"""
        payload = json.loads(Path(path).read_text(encoding='utf-8'))
        if isinstance(payload, dict) and 'edges' in payload:
            return load_graph(path)
        return build_graph(load_vessels(path), params.R_0, params.delta_R, self.normalize_axis)

    # Команды

    def cmd_phantom(self, out_dir: Optional[PathLike] = None) -> Dict[str, Path]:
        """
        Фантом и его разметка

        Returns:
            Dict[str, Path]: volume, truth (каталог), vessels, tumor, metastases
        """
        out = Path(out_dir) if out_dir is not None else self.out_dir / "phantom"
        with self.stage("phantom"):
            spec = self.phantom_spec()
            volume, truth = generate_phantom(spec)
            planting = self.planting_params()
            if planting.n > 0:
                mask = plant_metastases(
                    truth, self.simulation_params(), planting.n, planting.seed, planting,
                    normalize_axis=self.normalize_axis,
                )
                truth = truth.with_metastases(mask)
            write_volume(volume, out / "volume")
            truth_dir = save_ground_truth(truth, out / "truth")
        return {
            'volume': out / "volume.yaml",
            'truth': truth_dir,
            'vessels': truth_dir / "vessels.json",
            'tumor': truth_dir / "tumor.yaml",
            'lung_mask': truth_dir / "lung_mask.yaml",
            'metastases': truth_dir / "metastasis_mask.yaml",
        }

    def cmd_segment(self, volume_path: PathLike, out_dir: Optional[PathLike] = None) -> Path:
        """Маска колонизируемой ткани из скалярного объёма"""
        out = Path(out_dir) if out_dir is not None else self.out_dir / "segmentation"
        with self.stage("segment"):
            volume = read_volume(volume_path)
            result = segment_volume(volume, self.segmentation_params())
            sidecar = write_volume(result.mask, out / "tissue")
            with open(out / "segmentation.json", 'w', encoding='utf-8') as file:
                json.dump(result.summary(), file, indent=2)
        return sidecar

    def cmd_vessels(self, vessels_path: PathLike, out_dir: Optional[PathLike] = None) -> Dict[str, Path]:
        """Граф G и его максимальное остовное дерево"""
        out = Path(out_dir) if out_dir is not None else self.out_dir / "vessels"
        with self.stage("vessels"):
            params = self.simulation_params()
            graph = self._graph_from(vessels_path, params)
            tree = max_spanning_tree(graph)
            files = {
                'graph': save_graph(graph, out / "graph.json"),
                'tree': save_graph(tree, out / "tree.json"),
            }
        return files

    def cmd_heatmap(
        self,
        tissue_path: PathLike,
        vessels_path: PathLike,
        tumor_path: PathLike,
        out_dir: Optional[PathLike] = None
    ) -> Path:
        """
        Тепловая карта P(I)

        Пишет raw и prob на сетке и prob_volume, перенесённую на размеры ткани.
        """
        out = Path(out_dir) if out_dir is not None else self.out_dir / "heatmap"
        with self.stage("heatmap"):
            params = self.simulation_params()
            tissue = read_volume(tissue_path)
            graph = self._graph_from(vessels_path, params)
            tumor = load_tumor(tumor_path)
            result = generate_heatmap(
                graph, tumor, tissue, self.grid_spec(), params,
                workers=self.config.get('heatmap.workers', 0)
            )
            save_heatmap(result, out, extra={'seed': params.seed, 'stochastic': params.stochastic})
            write_volume(upsample_to_volume(result, tissue.dims), out / "prob_volume")
        return out

    def cmd_score(
        self,
        truth_path: PathLike,
        pred_path: PathLike,
        zeta: Optional[float] = None,
        out_dir: Optional[PathLike] = None
    ) -> ScoreReport:
        """Мягкий и жёсткий скоры предсказания против истины"""
        out = Path(out_dir) if out_dir is not None else self.out_dir / "scores"
        with self.stage("score"):
            truth = read_volume(truth_path)
            pred = read_volume(pred_path)
            if zeta is None:
                zeta = self.config.get('metrics.zeta')
            report = score_batch(
                [(truth, pred)], zeta,
                case_ids=[Path(truth_path).stem],
                percentile=float(self.config.get('metrics.zeta_percentile', 95.0))
            )
            report.write(out)
        return report

    def cmd_render(
        self,
        volume_path: PathLike,
        out_path: Optional[PathLike] = None,
        axis: Optional[str] = None,
        index: Optional[int] = None
    ) -> Path:
        """PNG-срез объёма"""
        with self.stage("render"):
            volume = read_volume(volume_path)
            return self._render(volume, Path(volume_path).stem, out_path, axis, index)

    def _render(
        self,
        volume: Volume3D,
        name: str,
        out_path: Optional[PathLike] = None,
        axis: Optional[str] = None,
        index: Optional[int] = None
    ) -> Path:
        axis = axis or self.config.get('pipeline.render_axis', 'z')
        if index is None:
            index = self.config.get('pipeline.render_index')
        if index is None:
            index = volume.dims["xyz".index(axis)] // 2
        out = Path(out_path) if out_path is not None else self.out_dir / "renders" / f"{name}_{axis}{index}.png"
        return render_slice(volume, axis, index, out)

    def cmd_pipeline(
        self,
        volume_path: Optional[PathLike] = None,
        vessels_path: Optional[PathLike] = None,
        tumor_path: Optional[PathLike] = None,
        truth_path: Optional[PathLike] = None
    ) -> Dict[str, Any]:
        """
        Полный прогон

        Без входного объёма сначала строится фантом, и его маска
        метастазов служит истиной для оценки. При ошибке любого этапа
        созданные файлы удаляются.

        Returns:
            Dict[str, Any]: Пути результатов и отчёт (если была истина)
        """
        out = self.out_dir
        existed = out.exists()
        created: List[Path] = []
        started = time.perf_counter()
        outputs: Dict[str, Any] = {}

        def track(path: Path) -> Path:
            created.append(path)
            return path

        try:
            if volume_path is None:
                files = self.cmd_phantom(track(out / "phantom"))
                volume_path, vessels_path = files['volume'], files['vessels']
                tumor_path, truth_path = files['tumor'], truth_path or files['metastases']
            elif vessels_path is None or tumor_path is None:
                raise PipelineError("inputs", ValueError("Для собственного объёма нужны файлы сосудов и опухоли"))

            outputs['tissue'] = self.cmd_segment(volume_path, track(out / "segmentation"))
            outputs.update(self.cmd_vessels(vessels_path, track(out / "vessels")))
            outputs['heatmap'] = self.cmd_heatmap(outputs['tissue'], outputs['graph'], tumor_path, track(out / "heatmap"))
            prob_volume = outputs['heatmap'] / "prob_volume.yaml"

            if truth_path is not None:
                outputs['report'] = self.cmd_score(truth_path, prob_volume, out_dir=track(out / "scores"))

            renders = track(out / "renders")
            with self.stage("render"):
                outputs['renders'] = [
                    self._render(read_volume(path), name, renders / f"{name}.png")
                    for name, path in (('volume', volume_path), ('tissue', outputs['tissue']), ('heatmap', prob_volume))
                ]
        except Exception as e:
            self._cleanup(out, existed, created)
            if isinstance(e, PipelineError):
                raise
            raise PipelineError("pipeline", e) from e

        outputs['manifest'] = self.write_manifest(out, time.perf_counter() - started)
        logger.info(f"🏁 Конвейер завершён, результаты в {out}")
        return outputs

    def _cleanup(self, out: Path, existed: bool, created: List[Path]) -> None:
        """Удаление частичных результатов"""
        if not existed:
            shutil.rmtree(out, ignore_errors=True)
        else:
            for path in created:
                shutil.rmtree(path, ignore_errors=True)
        logger.warning(f"Частичные результаты в {out} удалены")

    def write_manifest(self, out_dir: Optional[PathLike] = None, wall_time: Optional[float] = None) -> Path:
        """
        Манифест прогона: копия конфигурации, зёрна, отпечатки, версии, время

        Returns:
            Path: Путь к manifest.yaml
        """
        out = Path(out_dir) if out_dir is not None else self.out_dir
        out.mkdir(parents=True, exist_ok=True)
        manifest = {
            'config': self.config.as_dict(),
            'seeds': {
                section: self.config.get(f'{section}.seed')
                for section in ('phantom', 'planting', 'segmentation', 'simulation')
            },
            'fingerprints': dict(self.fingerprints),
            'versions': package_versions(),
            'stages': list(self.stages),
            'wall_time_seconds': round(wall_time, 3) if wall_time is not None else None,
        }
        path = out / "manifest.yaml"
        with open(path, 'w', encoding='utf-8') as file:
            yaml.safe_dump(manifest, file, sort_keys=False, allow_unicode=True)
        return path


class PipelineError(Exception):
    """Ошибка этапа конвейера"""

    def __init__(self, stage: str, cause: Optional[BaseException] = None):
        self.stage = stage
        self.cause = cause
        super().__init__(f"[{stage}] {cause}" if cause is not None else f"[{stage}]")
