"""
JSON-формат списка сосудов и графа
"""

import json
from pathlib import Path
from typing import List, Sequence, Union

from loguru import logger

from .geometry import Vessel, VesselGraphError
from .graph import VesselGraph


PathLike = Union[str, Path]


def save_vessels(vessels: Sequence[Vessel], path: PathLike) -> Path:
    """Запись списка сосудов: [{c, h, r, o_xy, o_xz}, ...], углы в радианах"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps([v.to_dict() for v in vessels], indent=2), encoding='utf-8')
    logger.debug(f"Сохранено {len(vessels)} сосудов в {path}")
    return path


def load_vessels(path: PathLike) -> List[Vessel]:
    """Чтение списка сосудов (или сосудов из файла графа)"""
    path = Path(path)
    try:
        payload = json.loads(path.read_text(encoding='utf-8'))
    except FileNotFoundError as e:
        raise VesselGraphError(f"Файл сосудов не найден: {path}") from e
    except json.JSONDecodeError as e:
        raise VesselGraphError(f"Некорректный JSON {path}: {e}") from e
    
    if isinstance(payload, dict):
        payload = payload.get('vessels', [])
    return [Vessel.from_dict(item) for item in payload]


def save_graph(graph: VesselGraph, path: PathLike) -> Path:
    """Запись графа: сосуды в порядке графа плюс рёбра [[i, j], ...]"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    payload = {
        'vessels': [v.to_dict() for v in graph.vessels],
        'edges': [list(e) for e in graph.sorted_edges()],
        'normalize_axis': graph.normalize_axis,
        'search_radius': graph.search_radius,
        'expansions': graph.expansions,
        'source_index': list(graph.source_index),
    }
    path.write_text(json.dumps(payload, indent=2), encoding='utf-8')
    logger.debug(f"Граф ({len(graph)} узлов, {len(graph.edges)} рёбер) сохранён в {path}")
    return path


def load_graph(path: PathLike) -> VesselGraph:
    """Чтение графа, записанного save_graph"""
    path = Path(path)
    try:
        payload = json.loads(path.read_text(encoding='utf-8'))
        return VesselGraph(
            vessels=tuple(Vessel.from_dict(v) for v in payload['vessels']),
            edges=frozenset(tuple(e) for e in payload.get('edges', [])),
            normalize_axis=bool(payload.get('normalize_axis', False)),
            search_radius=float(payload.get('search_radius', 0.0)),
            expansions=int(payload.get('expansions', 0)),
            source_index=tuple(payload.get('source_index', ())),
        )
    except FileNotFoundError as e:
        raise VesselGraphError(f"Файл графа не найден: {path}") from e
    except (json.JSONDecodeError, KeyError, TypeError) as e:
        raise VesselGraphError(f"Некорректный файл графа {path}: {e}") from e
