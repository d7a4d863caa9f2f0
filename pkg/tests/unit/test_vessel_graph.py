"""
Unit тесты для сосудов, построения графа, остовного дерева и путей
"""

import itertools
import json
import math

import networkx as nx
import numpy as np
import pytest
from hypothesis import given, strategies as st

from src.vessels.geometry import Vessel, direction_vector, endpoints, InvalidVesselError, DisconnectedGraphError
from src.vessels.graph import (
    VesselGraph, build_graph, max_spanning_tree, nearest_vessel, path_length, paths_within
)
from src.vessels.io import load_graph, load_vessels, save_graph, save_vessels


def _graph(radii, edges, heights=None):
    """Граф с явными рёбрами, сосуды-точки на прямой"""
    heights = heights or [1.0] * len(radii)
    vessels = [
        Vessel(c=(float(i), 0.0, 0.0), h=h, r=r, o_xy=0.0, o_xz=math.pi / 2)
        for i, (r, h) in enumerate(zip(radii, heights))
    ]
    return VesselGraph(tuple(vessels), frozenset(edges))


def _random_connected(rng, n, extra):
    """Случайное остовное дерево плюс extra дополнительных рёбер"""
    edges = set()
    for i in range(1, n):
        j = int(rng.integers(i))
        edges.add((j, i))
    candidates = [e for e in itertools.combinations(range(n), 2) if e not in edges]
    for k in rng.permutation(len(candidates))[:extra]:
        edges.add(candidates[k])
    return edges


class TestEndpoints:
    """Тесты для формулы торцов"""
    
    def test_axis_along_x(self):
        """c=0, h=2, o_xy=0, o_xz=π/2"""
        sl, el = endpoints(Vessel((0, 0, 0), 2.0, 1.0, 0.0, math.pi / 2))
        np.testing.assert_allclose(sl, [-1.0, -0.70711, 0.0], atol=1e-5)
        np.testing.assert_allclose(el, [1.0, 0.70711, 0.0], atol=1e-5)
    
    def test_axis_at_quarter_pi(self):
        """c=0, h=2, o_xy=π/4, o_xz=π/2"""
        sl, el = endpoints(Vessel((0, 0, 0), 2.0, 1.0, math.pi / 4, math.pi / 2))
        np.testing.assert_allclose(sl, [-0.70711, -1.0, 0.0], atol=1e-5)
        np.testing.assert_allclose(el, [0.70711, 1.0, 0.0], atol=1e-5)
    
    def test_zero_height(self):
        """h = 0 - торцы совпадают с центром"""
        sl, el = endpoints(Vessel((1, 2, 3), 0.0, 1.0, 0.3, 0.2))
        np.testing.assert_array_equal(sl, [1, 2, 3])
        np.testing.assert_array_equal(el, [1, 2, 3])
    
    @given(
        st.tuples(*[st.floats(-100, 100)] * 3),
        st.floats(0, 50),
        st.floats(0, 2 * math.pi),
        st.floats(0, math.pi),
    )
    def test_formula_properties(self, c, h, o_xy, o_xz):
        """Середина - центр, длина - h·|u| (u не единичный)"""
        vessel = Vessel(c, h, 1.0, o_xy, o_xz)
        sl, el = endpoints(vessel)
        np.testing.assert_allclose((sl + el) / 2, c, atol=1e-9)
        u = direction_vector(o_xy, o_xz)
        assert np.linalg.norm(el - sl) == pytest.approx(h * np.linalg.norm(u), abs=1e-9)
    
    def test_normalized_axis(self):
        """normalize_axis даёт длину ровно h"""
        sl, el = endpoints(Vessel((0, 0, 0), 3.0, 1.0, 0.4, 1.1), normalize_axis=True)
        assert np.linalg.norm(el - sl) == pytest.approx(3.0)
    
    def test_invalid_vessel(self):
        """Радиус должен быть положительным"""
        with pytest.raises(InvalidVesselError):
            Vessel((0, 0, 0), 1.0, 0.0, 0.0, 0.0)
        with pytest.raises(InvalidVesselError):
            Vessel((0, float('nan'), 0), 1.0, 1.0, 0.0, 0.0)


class TestBuildGraph:
    """Тесты для построения графа расширяющимся радиусом"""
    
    def test_single_vessel(self, point_vessels):
        """Один сосуд - связный граф без рёбер"""
        graph = build_graph(point_vessels([(0, 0, 0)]), 1.0, 1.0)
        assert len(graph) == 1
        assert not graph.edges
        assert graph.is_connected()
    
    def test_shared_point(self):
        """el_1 == sl_2, R_0 = 1 - ровно одно ребро"""
        first = Vessel((0, 0, 0), 2.0, 1.0, 0.0, math.pi / 2)
        _, el = endpoints(first)
        u = direction_vector(0.0, math.pi / 2)
        second = Vessel(tuple(el + 1.5 * u), 3.0, 1.0, 0.0, math.pi / 2)
        graph = build_graph([first, second], 1.0, 1.0)
        assert graph.edges == frozenset({(0, 1)})
        assert graph.expansions == 0
    
    def test_gap_of_five(self, point_vessels):
        """Разрыв 5 мм, R_0 = 1, δ_R = 1 - четыре расширения"""
        graph = build_graph(point_vessels([(0, 0, 0), (5, 0, 0)]), 1.0, 1.0)
        assert len(graph.edges) == 1
        assert graph.expansions == 4
        assert graph.search_radius == pytest.approx(5.0)
    
    def test_sorted_by_height(self):
        """Сосуды упорядочены по h, при равенстве - по исходному индексу"""
        vessels = [
            Vessel((0, 0, 0), 3.0, 1.0, 0.0, 1.0),
            Vessel((1, 0, 0), 1.0, 1.0, 0.0, 1.0),
            Vessel((2, 0, 0), 3.0, 1.0, 0.0, 1.0),
        ]
        graph = build_graph(vessels, 1.0, 1.0)
        assert [v.h for v in graph.vessels] == [1.0, 3.0, 3.0]
        assert graph.source_index == (1, 0, 2)
    
    def test_invalid_radius(self, point_vessels):
        """R_0 и δ_R положительны"""
        with pytest.raises(InvalidVesselError):
            build_graph(point_vessels([(0, 0, 0)]), 0.0, 1.0)
        with pytest.raises(InvalidVesselError):
            build_graph([], 1.0, 1.0)
    
    def test_random_sets_connected_and_deterministic(self):
        """100 случайных наборов 1..50 сосудов, включая далеко разнесённые"""
        rng = np.random.default_rng(2024)
        for trial in range(100):
            n = int(rng.integers(1, 51))
            scale = 1000.0 if trial % 5 == 0 else 30.0
            vessels = [
                Vessel(
                    c=tuple(rng.uniform(0, scale, 3)),
                    h=float(rng.uniform(0, 8)),
                    r=float(rng.uniform(0.2, 3)),
                    o_xy=float(rng.uniform(0, 2 * math.pi)),
                    o_xz=float(rng.uniform(0, math.pi)),
                )
                for _ in range(n)
            ]
            first = build_graph(vessels, 1.0, 0.5)
            second = build_graph(vessels, 1.0, 0.5)
            assert first.is_connected()
            assert first.edges == second.edges
            assert all(i < j for i, j in first.edges)


class TestMaxSpanningTree:
    """Тесты для максимального остовного дерева"""
    
    def test_tree_is_unchanged(self):
        """Дерево остаётся тем же"""
        graph = _graph([1, 2, 3, 4], {(0, 1), (1, 2), (1, 3)})
        assert max_spanning_tree(graph).edges == graph.edges
    
    def test_triangle(self):
        """Треугольник: остаётся самое тяжёлое ребро, ничья решается лексикографически"""
        # веса min(r_i, r_j): (0,1) -> 3, (0,2) -> 2, (1,2) -> 2
        tree = max_spanning_tree(_graph([4.0, 3.0, 2.0], {(0, 1), (0, 2), (1, 2)}))
        assert tree.edges == frozenset({(0, 1), (0, 2)})
        assert tree.vessels == _graph([4.0, 3.0, 2.0], set()).vessels
    
    def test_disconnected(self):
        """Несвязный граф - ошибка"""
        with pytest.raises(DisconnectedGraphError):
            max_spanning_tree(_graph([1, 1, 1], {(0, 1)}))
    
    def test_matches_exhaustive_enumeration(self):
        """50 случайных связных графов |B| ≤ 7 против полного перебора"""
        rng = np.random.default_rng(7)
        for _ in range(50):
            n = int(rng.integers(2, 8))
            radii = [float(rng.integers(1, 6)) for _ in range(n)]
            graph = _graph(radii, _random_connected(rng, n, int(rng.integers(0, 6))))
            
            best = -math.inf
            for subset in itertools.combinations(sorted(graph.edges), n - 1):
                candidate = nx.Graph(list(subset))
                candidate.add_nodes_from(range(n))
                if nx.is_tree(candidate):
                    best = max(best, sum(graph.weight(i, j) for i, j in subset))
            
            tree = max_spanning_tree(graph)
            assert len(tree.edges) == n - 1
            assert tree.is_tree()
            assert sum(graph.weight(i, j) for i, j in tree.edges) == pytest.approx(best)


class TestNearestVessel:
    """Тесты для поиска ближайшего сосуда"""
    
    def test_point_on_axis(self, single_vessel):
        """Точка на оси - расстояние 0"""
        graph = VesselGraph((single_vessel,))
        sl, el = endpoints(single_vessel)
        assert nearest_vessel(graph, (sl + el) / 2 + 0.1 * (el - sl)) == (0, 0.0)
    
    def test_distance_minus_radius(self):
        """Расстояние 10 до оси при r = 2 - ответ 8"""
        vessel = Vessel((0, 0, 0), 4.0, 2.0, 0.0, math.pi / 2)
        sl, el = endpoints(vessel)
        axis = (el - sl) / np.linalg.norm(el - sl)
        normal = np.cross(axis, [0.0, 0.0, 1.0])
        normal /= np.linalg.norm(normal)
        index, distance = nearest_vessel(VesselGraph((vessel,)), 10.0 * normal)
        assert index == 0
        assert distance == pytest.approx(8.0)
    
    def test_tie_breaks_to_lower_index(self, point_vessels):
        """Два равноудалённых сосуда - меньший индекс"""
        graph = VesselGraph(tuple(point_vessels([(-3, 0, 0), (3, 0, 0)])))
        assert nearest_vessel(graph, (0, 0, 0))[0] == 0


class TestPathsWithin:
    """Тесты для перебора путей ограниченной длины"""
    
    def test_tree_single_path(self):
        """На дереве ровно один путь"""
        graph = _graph([1] * 4, {(0, 1), (1, 2), (1, 3)})
        assert paths_within(graph, 0, 3, 10.0) == [(0, 1, 3)]
    
    def test_four_cycle(self):
        """4-цикл с единичными высотами, противоположные углы"""
        graph = _graph([1] * 4, {(0, 1), (1, 2), (2, 3), (0, 3)})
        assert paths_within(graph, 0, 2, 5.0) == [(0, 1, 2), (0, 3, 2)]
        assert paths_within(graph, 0, 2, 2.0) == []
    
    def test_strict_bound(self):
        """Путь длины ровно ν исключается"""
        graph = _graph([1] * 4, {(0, 1), (1, 2), (2, 3), (0, 3)})
        assert paths_within(graph, 0, 2, 3.0) == []
        assert len(paths_within(graph, 0, 2, 3.0 + 1e-9)) == 2
    
    def test_same_vessel(self):
        """s == t - путь из одного сосуда длины h_s"""
        graph = _graph([1, 1], {(0, 1)}, heights=[2.0, 1.0])
        assert paths_within(graph, 0, 0, 2.5) == [(0,)]
        assert paths_within(graph, 0, 0, 2.0) == []
    
    def test_matches_exhaustive_dfs(self):
        """50 случайных графов |B| ≤ 10 против перебора networkx"""
        rng = np.random.default_rng(11)
        for _ in range(50):
            n = int(rng.integers(2, 11))
            heights = [float(rng.integers(1, 5)) for _ in range(n)]
            graph = _graph([1.0] * n, _random_connected(rng, n, int(rng.integers(0, 8))), heights)
            s, t = (int(v) for v in rng.choice(n, size=2, replace=False))
            nu = float(rng.integers(2, 25))
            
            expected = {
                tuple(p) for p in nx.all_simple_paths(graph.to_networkx(), s, t)
                if path_length(graph, p) < nu
            }
            found = paths_within(graph, s, t, nu)
            assert set(found) == expected
            assert len(found) == len(expected)
            lengths = [path_length(graph, p) for p in found]
            assert lengths == sorted(lengths)


class TestVesselIO:
    """Тесты для JSON-формата сосудов и графа"""
    
    def test_vessels_roundtrip(self, tmp_path, single_vessel):
        """Список сосудов сохраняется и читается"""
        path = save_vessels([single_vessel], tmp_path / "vessels.json")
        assert load_vessels(path) == [single_vessel]
        assert set(json.loads(path.read_text())[0]) == {'c', 'h', 'r', 'o_xy', 'o_xz'}
    
    def test_graph_roundtrip(self, tmp_path, point_vessels):
        """Граф сохраняет рёбра и параметры построения"""
        graph = build_graph(point_vessels([(0, 0, 0), (5, 0, 0), (0, 2, 0)]), 1.0, 1.0)
        loaded = load_graph(save_graph(graph, tmp_path / "graph.json"))
        assert loaded.edges == graph.edges
        assert loaded.expansions == graph.expansions
        assert loaded.vessels == graph.vessels
