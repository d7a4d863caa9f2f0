"""
Командная строка симулятора метастазирования
"""

import argparse
import sys
from pathlib import Path
from typing import List, Optional, Tuple

from loguru import logger
from pydantic import ValidationError

# Добавляем корень проекта в sys.path
sys.path.insert(0, str(Path(__file__).resolve().parent.parent))

from src.core.config import Config, DEFAULT_CONFIG_PATH  # noqa: E402
from src.core.logger import setup_logging  # noqa: E402
from src.main import MetastasisPipeline, PipelineError  # noqa: E402


EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_INVALID = 2


def parse_grid(value: str) -> Tuple[int, int, int]:
    """Разбор --grid X,Y,Z"""
    parts = value.split(',')
    if len(parts) != 3:
        raise argparse.ArgumentTypeError(f"Ожидалось X,Y,Z, получено {value!r}")
    try:
        return tuple(int(p) for p in parts)
    except ValueError as e:
        raise argparse.ArgumentTypeError(f"Некорректная сетка {value!r}") from e


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="metasim",
        description="Симулятор колонизации лёгких метастазами рака лёгкого"
    )
    parser.add_argument('--config', type=Path, default=DEFAULT_CONFIG_PATH, help="YAML-файл конфигурации")
    parser.add_argument('--out', type=Path, help="Каталог результатов")
    parser.add_argument('--seed', type=int, help="Зерно для всех генераторов")
    parser.add_argument('--workers', type=int, help="Процессы тепловой карты (0 - все ядра)")
    parser.add_argument('--zeta', type=float, help="Порог жёсткого скора")
    parser.add_argument('--grid', type=parse_grid, help="Сетка Ω: X,Y,Z")
    parser.add_argument('--stochastic', action='store_true', help="Пуассоновский режим модели")
    
    commands = parser.add_subparsers(dest='command', required=True)
    
    commands.add_parser('phantom', help="Синтетический фантом с разметкой")
    
    segment = commands.add_parser('segment', help="Маска ткани из объёма")
    segment.add_argument('volume', type=Path)
    
    vessels = commands.add_parser('vessels', help="Граф сосудов и остовное дерево")
    vessels.add_argument('vessels', type=Path)
    
    heatmap = commands.add_parser('heatmap', help="Тепловая карта P(I)")
    heatmap.add_argument('tissue', type=Path)
    heatmap.add_argument('vessels', type=Path)
    heatmap.add_argument('tumor', type=Path)
    
    score = commands.add_parser('score', help="Мягкий и жёсткий скоры")
    score.add_argument('truth', type=Path)
    score.add_argument('pred', type=Path)
    
    render = commands.add_parser('render', help="PNG-срез объёма")
    render.add_argument('volume', type=Path)
    render.add_argument('--axis', choices=['x', 'y', 'z'])
    render.add_argument('--index', type=int)
    render.add_argument('--png', type=Path, help="Путь к PNG")
    
    pipeline = commands.add_parser('pipeline', help="Полный прогон (без --volume - на фантоме)")
    pipeline.add_argument('--volume', type=Path)
    pipeline.add_argument('--vessels', type=Path)
    pipeline.add_argument('--tumor', type=Path)
    pipeline.add_argument('--truth', type=Path)
    
    return parser


def run(args: argparse.Namespace) -> None:
    """Выполнение выбранной команды"""
    runner = MetastasisPipeline(
        Config(args.config),
        out_dir=args.out,
        seed=args.seed,
        workers=args.workers,
        zeta=args.zeta,
        grid=args.grid,
        stochastic=args.stochastic,
    )
    
    if args.command == 'phantom':
        files = runner.cmd_phantom()
        runner.write_manifest()
        logger.info(f"Фантом записан: {files['volume']}")
    elif args.command == 'segment':
        logger.info(f"Маска ткани: {runner.cmd_segment(args.volume)}")
        runner.write_manifest()
    elif args.command == 'vessels':
        files = runner.cmd_vessels(args.vessels)
        runner.write_manifest()
        logger.info(f"Граф: {files['graph']}, дерево: {files['tree']}")
    elif args.command == 'heatmap':
        logger.info(f"Тепловая карта: {runner.cmd_heatmap(args.tissue, args.vessels, args.tumor)}")
        runner.write_manifest()
    elif args.command == 'score':
        report = runner.cmd_score(args.truth, args.pred, args.zeta)
        runner.write_manifest()
        print(report.to_table().to_string(index=False))
    elif args.command == 'render':
        logger.info(f"Срез: {runner.cmd_render(args.volume, args.png, args.axis, args.index)}")
    elif args.command == 'pipeline':
        outputs = runner.cmd_pipeline(args.volume, args.vessels, args.tumor, args.truth)
        if 'report' in outputs:
            print(outputs['report'].to_table().to_string(index=False))


def main(argv: Optional[List[str]] = None) -> int:
    """Точка входа; возвращает код выхода"""
    parser = build_parser()
    args = parser.parse_args(argv)
    
    try:
        setup_logging(settings=Config(args.config))
        run(args)
    except PipelineError as e:
        if isinstance(e.cause, ValidationError):
            logger.error(f"Некорректная конфигурация на этапе {e.stage}: {e.cause}")
            return EXIT_INVALID
        logger.error(f"Этап {e.stage} завершился ошибкой: {e.cause}")
        return EXIT_FAILURE
    except ValidationError as e:
        logger.error(f"Некорректная конфигурация: {e}")
        return EXIT_INVALID
    except Exception as e:
        logger.error(f"Ошибка: {e}")
        return EXIT_FAILURE
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
