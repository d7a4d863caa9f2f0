"""
Настройка системы логирования
"""

import os
import sys
from pathlib import Path
from typing import Optional
from loguru import logger

from .config import Config, config as default_config


LOG_LEVEL_ENV = "METASIM_LOG"


def setup_logging(level: Optional[str] = None, settings: Optional[Config] = None) -> None:
    """
    Настройка системы логирования
    
    Args:
        level: Явный уровень (важнее METASIM_LOG и файла конфигурации)
        settings: Конфигурация; по умолчанию глобальная
    """
    
    # Удаляем стандартный обработчик
    logger.remove()
    
    log_config = (settings or default_config).logging_config
    
    log_format = log_config.get('format', 
        "{time:YYYY-MM-DD HH:mm:ss} | {level} | {name}:{function}:{line} - {message}")
    
    log_level = (level or os.environ.get(LOG_LEVEL_ENV) or log_config.get('level', 'INFO')).upper()
    
    # Консольный вывод
    logger.add(
        sys.stdout,
        format=log_format,
        level=log_level,
        colorize=True
    )
    
    # Файловый вывод
    log_file = log_config.get('file')
    if log_file:
        log_path = Path(log_file)
        log_path.parent.mkdir(parents=True, exist_ok=True)
        
        logger.add(
            log_file,
            format=log_format,
            level=log_level,
            rotation=log_config.get('max_size', '10 MB'),
            retention=log_config.get('retention', '30 days'),
            compression="zip"
        )
    
    logger.debug(f"Система логирования настроена, уровень {log_level}")
