"""
Unit тесты для генерации тепловой карты
"""

import numpy as np
import pytest

from src.biophysics.params import SimulationParams, TumorSpec
from src.contracts.colonization import ColonizationModel
from src.data.grid import GridSpec
from src.data.volume import Volume3D, VolumeKind
from src.heatmap.generator import (
    HeatmapResult, generate_heatmap, load_heatmap, normalize_l1, resolve_workers,
    save_heatmap, upsample_to_volume, ExtentMismatchError, HeatmapError
)
from src.phantom.oracle import dense_colonization
from src.vessels.graph import VesselGraph, build_graph


def _result(values, dims) -> HeatmapResult:
    """Результат с заданной вероятностью на сетке dims"""
    prob = Volume3D.from_flat(np.asarray(values, dtype=np.float64), dims, (1.0, 1.0, 1.0), VolumeKind.PROBABILITY)
    raw = prob.with_array(prob.array, VolumeKind.SCALAR)
    return HeatmapResult(raw, prob, GridSpec(counts=dims), "test")


@pytest.fixture
def vessel_graph(single_vessel) -> VesselGraph:
    return VesselGraph((single_vessel,))


class TestNormalize:
    """Тесты для L1-нормировки"""
    
    def test_two_points(self):
        """raw (3, 1) - prob (0.75, 0.25)"""
        prob, zero = normalize_l1(np.array([3.0, 1.0]))
        np.testing.assert_array_equal(prob, [0.75, 0.25])
        assert not zero
    
    def test_zero_mass(self):
        prob, zero = normalize_l1(np.zeros(4))
        assert zero
        assert prob.sum() == 0.0
    
    def test_resolve_workers(self):
        assert resolve_workers(3) == 3
        assert resolve_workers(0) >= 1
        assert resolve_workers(None) >= 1


class TestGenerateHeatmap:
    """Тесты для алгоритма тепловой карты"""
    
    def test_probability_sums_to_one(self, vessel_graph, touching_tumor, full_tissue, params):
        result = generate_heatmap(vessel_graph, touching_tumor, full_tissue, GridSpec(counts=(4, 4, 4)), params)
        assert result.raw.dims == (4, 4, 4)
        assert result.raw.spacing == (4.0, 4.0, 4.0)
        assert np.all(result.raw.array >= 0)
        assert result.prob.array.sum() == pytest.approx(1.0, abs=1e-9)
        assert not result.zero_mass
        assert result.params_fingerprint
    
    def test_empty_tissue(self, vessel_graph, touching_tumor, full_tissue, params):
        """Ткань из нулей - нулевая масса с флагом"""
        empty = full_tissue.with_array(np.zeros(full_tissue.dims))
        result = generate_heatmap(vessel_graph, touching_tumor, empty, GridSpec(counts=(4, 4, 4)), params)
        assert result.zero_mass
        assert result.prob.array.sum() == 0.0
        assert result.manifest()['zero_mass'] is True
    
    def test_point_mass(self, vessel_graph, touching_tumor, full_tissue, params):
        """Единственная точка ткани получает вероятность 1"""
        array = np.zeros(full_tissue.dims)
        array[6, 6, 5] = 1.0
        tissue = full_tissue.with_array(array)
        result = generate_heatmap(vessel_graph, touching_tumor, tissue, GridSpec.dense_for(tissue), params)
        assert result.prob.array[6, 6, 5] == 1.0
        assert result.prob.array.sum() == 1.0
    
    @pytest.mark.parametrize("k", [0.5, 2.0, 10.0])
    def test_gauge_invariance(self, vessel_graph, touching_tumor, full_tissue, params, k):
        """Масштаб d или p_settle не меняет вероятность"""
        grid = GridSpec(counts=(8, 8, 8))
        base = generate_heatmap(vessel_graph, touching_tumor, full_tissue, grid, params)
        scaled_d = generate_heatmap(
            vessel_graph, touching_tumor, full_tissue, grid, params.model_copy(update={'d': params.d * k})
        )
        np.testing.assert_allclose(scaled_d.prob.array, base.prob.array, atol=1e-12, rtol=0)
        settle = min(1.0, params.p_settle * k)
        scaled_p = generate_heatmap(
            vessel_graph, touching_tumor, full_tissue, grid, params.model_copy(update={'p_settle': settle})
        )
        np.testing.assert_allclose(scaled_p.prob.array, base.prob.array, atol=1e-12, rtol=0)
    
    @pytest.mark.parametrize("stochastic", [False, True])
    def test_workers_bitwise_identical(self, small_phantom, params, stochastic):
        """Любое число воркеров даёт тот же результат"""
        _, gt = small_phantom
        graph = build_graph(gt.vessels, params.R_0, params.delta_R)
        params = params.model_copy(update={'stochastic': stochastic})
        grid = GridSpec.dense_for(gt.lung_mask)
        results = [
            generate_heatmap(graph, gt.tumor, gt.lung_mask, grid, params, workers=w)
            for w in (1, 2, 8)
        ]
        for other in results[1:]:
            assert np.array_equal(other.raw.array, results[0].raw.array)
            assert np.array_equal(other.prob.array, results[0].prob.array)
    
    def test_dense_grid_matches_oracle(self, small_phantom, params):
        """Плотная сетка совпадает с независимой эталонной оценкой"""
        _, gt = small_phantom
        graph = build_graph(gt.vessels, params.R_0, params.delta_R)
        result = generate_heatmap(graph, gt.tumor, gt.lung_mask, GridSpec.dense_for(gt.lung_mask), params)
        oracle = dense_colonization(gt.vessels, gt.tumor, gt.lung_mask, params)
        assert oracle.array.sum() > 0
        np.testing.assert_allclose(result.raw.array, oracle.array, atol=1e-9, rtol=0)
    
    def test_full_graph_matches_oracle(self, small_phantom):
        """То же без остовного дерева"""
        _, gt = small_phantom
        params = SimulationParams(use_spanning_tree=False)
        graph = build_graph(gt.vessels, params.R_0, params.delta_R)
        result = generate_heatmap(graph, gt.tumor, gt.lung_mask, GridSpec.dense_for(gt.lung_mask), params)
        oracle = dense_colonization(gt.vessels, gt.tumor, gt.lung_mask, params)
        np.testing.assert_allclose(result.raw.array, oracle.array, atol=1e-9, rtol=0)
    
    def test_tumor_outside_extent(self, vessel_graph, full_tissue, params):
        tumor = TumorSpec(location=(20.0, 5.0, 5.0), radius=1.0)
        with pytest.raises(ExtentMismatchError):
            generate_heatmap(vessel_graph, tumor, full_tissue, GridSpec(counts=(4, 4, 4)), params)
    
    def test_non_binary_tissue(self, vessel_graph, touching_tumor, full_tissue, params):
        scalar = full_tissue.with_array(full_tissue.array, VolumeKind.SCALAR)
        with pytest.raises(HeatmapError):
            generate_heatmap(vessel_graph, touching_tumor, scalar, GridSpec(counts=(4, 4, 4)), params)
    
    def test_grid_larger_than_tissue(self, vessel_graph, touching_tumor, full_tissue, params):
        """Сетка крупнее объёма ткани отклоняется до вычислений"""
        with pytest.raises(ExtentMismatchError):
            generate_heatmap(vessel_graph, touching_tumor, full_tissue, GridSpec(counts=(32, 4, 4)), params)
    
    def test_stochastic_uses_batch_sampling(self, vessel_graph, touching_tumor, full_tissue, params, monkeypatch):
        """Пуассоновский режим берёт выборки пачкой через контракт колонизации"""
        calls = []
        batch = ColonizationModel.sample_many
        
        def spy(self, means, seed, counters):
            calls.append(len(means))
            return batch(self, means, seed, counters)
        
        monkeypatch.setattr(ColonizationModel, "sample_many", spy)
        params = params.model_copy(update={'stochastic': True})
        result = generate_heatmap(vessel_graph, touching_tumor, full_tissue, GridSpec(counts=(4, 4, 4)), params)
        assert sum(calls) == 64
        assert np.all(result.raw.array == np.round(result.raw.array))


class TestUpsample:
    """Тесты для переноса на плотный объём"""
    
    def test_copy_and_renormalize(self):
        """(0.75, 0.25) на 4×1×1 - (0.375, 0.375, 0.125, 0.125)"""
        volume = upsample_to_volume(_result([0.75, 0.25], (2, 1, 1)), (4, 1, 1))
        np.testing.assert_allclose(volume.data, [0.375, 0.375, 0.125, 0.125])
        assert volume.kind == VolumeKind.PROBABILITY
    
    def test_identity(self):
        values = np.arange(8, dtype=np.float64) / 28.0
        volume = upsample_to_volume(_result(values, (2, 2, 2)), (2, 2, 2))
        np.testing.assert_allclose(volume.data, values)
    
    def test_single_stratum(self):
        """Сетка 1×1×1 - равномерный объём"""
        volume = upsample_to_volume(_result([1.0], (1, 1, 1)), (4, 4, 4))
        np.testing.assert_allclose(volume.array, 1.0 / 64)
    
    def test_zero_mass_passes_through(self):
        volume = upsample_to_volume(_result([0.0, 0.0], (2, 1, 1)), (4, 2, 2))
        assert volume.array.sum() == 0.0
    
    def test_target_smaller_than_grid(self):
        with pytest.raises(HeatmapError):
            upsample_to_volume(_result([0.75, 0.25], (2, 1, 1)), (1, 1, 1))


class TestHeatmapIO:
    """Тесты для сохранения тепловой карты"""
    
    def test_roundtrip(self, tmp_path, vessel_graph, touching_tumor, full_tissue, params):
        result = generate_heatmap(vessel_graph, touching_tumor, full_tissue, GridSpec(counts=(4, 4, 4)), params)
        manifest = save_heatmap(result, tmp_path / "heatmap", extra={'seed': 1})
        assert manifest.exists()
        loaded = load_heatmap(tmp_path / "heatmap")
        assert loaded.raw == result.raw
        assert loaded.prob == result.prob
        assert loaded.grid == result.grid
        assert loaded.params_fingerprint == result.params_fingerprint
    
    def test_missing_manifest(self, tmp_path):
        with pytest.raises(HeatmapError):
            load_heatmap(tmp_path)
