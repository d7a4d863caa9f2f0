"""
Граф кровотока G = (B, E): построение расширяющимся радиусом,
максимальное остовное дерево по радиусу и перебор путей ограниченной длины
"""

import math
from dataclasses import dataclass, field, replace
from typing import Dict, FrozenSet, List, Optional, Sequence, Tuple

import networkx as nx
import numpy as np
from loguru import logger
from networkx.utils import UnionFind

from .geometry import (
    Vessel, endpoints, nearest_indices, as_point,
    InvalidVesselError, DisconnectedGraphError
)


Edge = Tuple[int, int]
Path = Tuple[int, ...]


@dataclass(frozen=True)
class VesselGraph:
    """
    Граф сосудов

    vessels отсортированы по высоте h (при равенстве - по исходному индексу),
    рёбра - неупорядоченные пары индексов этого списка (i < j).
    """
    vessels: Tuple[Vessel, ...]
    edges: FrozenSet[Edge] = frozenset()
    normalize_axis: bool = False
    search_radius: float = 0.0
    expansions: int = 0
    source_index: Tuple[int, ...] = ()
    _cache: Dict[str, np.ndarray] = field(default_factory=dict, init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, 'vessels', tuple(self.vessels))
        edges = set()
        for i, j in self.edges:
            if i == j:
                raise InvalidVesselError(f"Петля на сосуде {i}")
            if not (0 <= i < len(self.vessels) and 0 <= j < len(self.vessels)):
                raise InvalidVesselError(f"Ребро ({i}, {j}) ссылается на несуществующий сосуд")
            edges.add((min(i, j), max(i, j)))
        object.__setattr__(self, 'edges', frozenset(edges))
        if not self.source_index:
            object.__setattr__(self, 'source_index', tuple(range(len(self.vessels))))

    def __len__(self) -> int:
        return len(self.vessels)

    def _arrays(self) -> Dict[str, np.ndarray]:
        """Массивы торцов, радиусов и высот (ленивый кэш)"""
        if not self._cache:
            pairs = [endpoints(v, self.normalize_axis) for v in self.vessels]
            self._cache['sl'] = np.array([p[0] for p in pairs]).reshape(-1, 3)
            self._cache['el'] = np.array([p[1] for p in pairs]).reshape(-1, 3)
            self._cache['r'] = np.array([v.r for v in self.vessels], dtype=np.float64)
            self._cache['h'] = np.array([v.h for v in self.vessels], dtype=np.float64)
        return self._cache

    @property
    def starts(self) -> np.ndarray:
        return self._arrays()['sl']

    @property
    def ends(self) -> np.ndarray:
        return self._arrays()['el']

    @property
    def radii(self) -> np.ndarray:
        return self._arrays()['r']

    @property
    def heights(self) -> np.ndarray:
        return self._arrays()['h']

    def weight(self, i: int, j: int) -> float:
        """Вес ребра: радиус более узкого сосуда"""
        return min(self.vessels[i].r, self.vessels[j].r)

    def sorted_edges(self) -> List[Edge]:
        return sorted(self.edges)

    def neighbors(self) -> List[List[int]]:
        """Списки смежности, отсортированные по возрастанию"""
        adjacency: List[List[int]] = [[] for _ in self.vessels]
        for i, j in self.sorted_edges():
            adjacency[i].append(j)
            adjacency[j].append(i)
        return [sorted(a) for a in adjacency]

    def to_networkx(self) -> nx.Graph:
        """Неориентированный взвешенный граф networkx"""
        graph = nx.Graph()
        graph.add_nodes_from(range(len(self.vessels)))
        for i, j in self.sorted_edges():
            graph.add_edge(i, j, weight=self.weight(i, j))
        return graph

    def is_connected(self) -> bool:
        if not self.vessels:
            return False
        return nx.is_connected(self.to_networkx())

    def is_tree(self) -> bool:
        return self.is_connected() and len(self.edges) == len(self.vessels) - 1


def build_graph(
    vessels: Sequence[Vessel],
    R_0: float,
    delta_R: float,
    normalize_axis: bool = False
) -> VesselGraph:
    """
    Построение графа G расширяющимся радиусом поиска

    В каждом раунде сосуд, чей торец sl лежит в пределах R от sl или el
    другого ещё не смежного с ним сосуда, соединяется с ближайшим из таких
    кандидатов по ||sl_i - el_j||. Если раунд не добавил рёбер, а граф не
    связен, радиус растёт: R_k = R_0 + k·δ_R. Процесс останавливается, как
    только граф связен.

    Args:
        vessels: Сосуды в исходном порядке
        R_0: Начальный радиус поиска, мм
        delta_R: Шаг радиуса, мм
        normalize_axis: Нормировать направляющий вектор торцов

    Returns:
        VesselGraph: Связный граф
    """
    if not vessels:
        raise InvalidVesselError("Список сосудов пуст")
    if not (R_0 > 0 and delta_R > 0 and math.isfinite(R_0) and math.isfinite(delta_R)):
        raise InvalidVesselError(f"R_0 и δ_R должны быть положительны: {R_0}, {delta_R}")

    order = sorted(range(len(vessels)), key=lambda i: (vessels[i].h, i))
    ordered = tuple(vessels[i] for i in order)
    n = len(ordered)

    if n == 1:
        return VesselGraph(ordered, frozenset(), normalize_axis, R_0, 0, tuple(order))

    pairs = [endpoints(v, normalize_axis) for v in ordered]
    sl = np.array([p[0] for p in pairs])
    el = np.array([p[1] for p in pairs])
    if not (np.all(np.isfinite(sl)) and np.all(np.isfinite(el))):
        raise InvalidVesselError("Торцы сосудов содержат нечисловые координаты")

    to_end = np.linalg.norm(sl[:, None, :] - el[None, :, :], axis=2)
    to_start = np.linalg.norm(sl[:, None, :] - sl[None, :, :], axis=2)
    reach = np.minimum(to_start, to_end)
    np.fill_diagonal(reach, np.inf)

    adjacent = np.eye(n, dtype=bool)
    components = UnionFind(range(n))
    n_components = n
    edges = set()
    k = 0
    radius = R_0

    while n_components > 1:
        added = False
        for i in range(n):
            candidates = (reach[i] <= radius) & ~adjacent[i]
            if not candidates.any():
                continue
            j = int(np.argmin(np.where(candidates, to_end[i], np.inf)))
            edges.add((min(i, j), max(i, j)))
            adjacent[i, j] = adjacent[j, i] = True
            if components[i] != components[j]:
                components.union(i, j)
                n_components -= 1
            added = True
            logger.debug(f"Ребро ({i}, {j}) при R={radius:.3f}")

        if n_components == 1:
            break
        if not added:
            # до появления нового кандидата раунды рёбер не добавляют
            next_reach = float(reach[~adjacent].min())
            k_next = max(k + 1, math.ceil((next_reach - R_0) / delta_R))
            while R_0 + k_next * delta_R < next_reach:
                k_next += 1
            k = k_next
            radius = R_0 + k * delta_R

    graph = VesselGraph(ordered, frozenset(edges), normalize_axis, radius, k, tuple(order))
    logger.info(f"Граф сосудов построен: {n} узлов, {len(edges)} рёбер, R={radius:.3f} мм, расширений {k}")
    return graph


def max_spanning_tree(graph: VesselGraph) -> VesselGraph:
    """
    Максимальное по радиусу остовное дерево (Краскал)

    Вес ребра min(r_i, r_j); при равных весах раньше берётся
    лексикографически меньшее ребро.

    Raises:
        DisconnectedGraphError: граф не связен
    """
    if not graph.is_connected():
        raise DisconnectedGraphError("Остовное дерево определено только для связного графа")

    ranked = sorted(graph.edges, key=lambda e: (-graph.weight(*e), e[0], e[1]))
    forest = UnionFind(range(len(graph)))
    tree = []
    for i, j in ranked:
        if forest[i] != forest[j]:
            forest.union(i, j)
            tree.append((i, j))
            if len(tree) == len(graph) - 1:
                break

    logger.debug(f"Остовное дерево: {len(tree)} из {len(graph.edges)} рёбер")
    return replace(graph, edges=frozenset(tree))


def path_length(graph: VesselGraph, path: Sequence[int]) -> float:
    """Длина пути: сумма высот h всех сосудов пути, включая концы"""
    return float(sum(graph.vessels[i].h for i in path))


def paths_within(graph: VesselGraph, s: int, t: int, nu: float) -> List[Path]:
    """
    Все простые пути от s до t длиной строго меньше ν

    Поиск в глубину с отсечением по накопленной длине. Результат упорядочен
    по длине, затем лексикографически.

    Args:
        graph: Граф сосудов
        s, t: Индексы начального и конечного сосудов
        nu: Граница длины пути, мм

    Returns:
        List[Path]: Пути как кортежи индексов
    """
    n = len(graph)
    if not (0 <= s < n and 0 <= t < n):
        raise InvalidVesselError(f"Индексы ({s}, {t}) вне графа из {n} сосудов")

    heights = graph.heights
    if s == t:
        return [(s,)] if heights[s] < nu else []

    adjacency = graph.neighbors()
    found: List[Tuple[float, Path]] = []

    path = [s]
    on_path = {s}
    stack = [(iter(adjacency[s]), float(heights[s]))]
    while stack:
        children, length = stack[-1]
        child = next(children, None)
        if child is None:
            stack.pop()
            on_path.discard(path.pop())
            continue
        if child in on_path:
            continue
        extended = length + float(heights[child])
        if extended >= nu:
            continue
        if child == t:
            found.append((extended, tuple(path) + (t,)))
            continue
        path.append(child)
        on_path.add(child)
        stack.append((iter(adjacency[child]), extended))

    found.sort()
    return [p for _, p in found]


def nearest_vessel(graph: VesselGraph, point: Sequence[float]) -> Tuple[int, float]:
    """
    Ближайший к точке сосуд

    Расстояние - от точки до отрезка оси (sl, el) минус радиус, не меньше 0;
    при равенстве выбирается меньший индекс.

    Returns:
        (индекс сосуда, расстояние в мм)
    """
    if not graph.vessels:
        raise InvalidVesselError("Граф пуст")
    idx, dist = nearest_indices(graph.starts, graph.ends, graph.radii, as_point(point)[None, :])
    return int(idx[0]), float(dist[0])


def nearest_vessels(graph: Optional[VesselGraph], points: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Векторизованный nearest_vessel для массива точек (N, 3)"""
    if graph is None or not graph.vessels:
        raise InvalidVesselError("Граф пуст")
    return nearest_indices(graph.starts, graph.ends, graph.radii, np.asarray(points, dtype=np.float64))
