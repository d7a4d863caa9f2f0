"""
Модуль конфигурации симулятора
"""

import copy
import hashlib
import json
import yaml
from pathlib import Path
from typing import Dict, Any, Optional
from loguru import logger
from pydantic import BaseModel


DEFAULT_CONFIG_PATH = Path(__file__).parent.parent.parent / "config" / "settings.yaml"


class Config:
    """Класс для управления конфигурацией симулятора"""
    
    def __init__(self, config_path: Optional[str] = None):
        """
        Инициализация конфигурации
        
        Args:
            config_path: Путь к файлу конфигурации
        """
        if config_path is None:
            config_path = DEFAULT_CONFIG_PATH
        
        self.config_path = Path(config_path)
        self._config: Dict[str, Any] = {}
        self.load_config()
    
    def load_config(self) -> None:
        """Загрузка конфигурации из файла"""
        try:
            with open(self.config_path, 'r', encoding='utf-8') as file:
                self._config = yaml.safe_load(file) or {}
            logger.debug(f"Конфигурация загружена из {self.config_path}")
        except FileNotFoundError:
            logger.error(f"Файл конфигурации не найден: {self.config_path}")
            raise
        except yaml.YAMLError as e:
            logger.error(f"Ошибка парсинга YAML: {e}")
            raise
    
    def get(self, key: str, default: Any = None) -> Any:
        """
        Получение значения конфигурации по ключу
        
        Args:
            key: Ключ конфигурации (поддерживает вложенные ключи через точку)
            default: Значение по умолчанию
            
        Returns:
            Значение конфигурации или значение по умолчанию
        """
        keys = key.split('.')
        value = self._config
        
        try:
            for k in keys:
                value = value[k]
            return value
        except (KeyError, TypeError):
            return default
    
    def set(self, key: str, value: Any) -> None:
        """
        Установка значения конфигурации
        
        Args:
            key: Ключ конфигурации
            value: Новое значение
        """
        keys = key.split('.')
        section = self._config
        
        for k in keys[:-1]:
            if k not in section or section[k] is None:
                section[k] = {}
            section = section[k]
        
        section[keys[-1]] = value
        logger.debug(f"Конфигурация обновлена: {key} = {value}")
    
    def merge(self, overrides: Dict[str, Any]) -> None:
        """
        Применение переопределений поверх файла (флаги CLI важнее файла)
        
        Args:
            overrides: Словарь {dotted.key: value}; значения None пропускаются
        """
        for key, value in overrides.items():
            if value is not None:
                self.set(key, value)
    
    def as_dict(self) -> Dict[str, Any]:
        """Глубокая копия всей конфигурации"""
        return copy.deepcopy(self._config)
    
    @property
    def phantom_config(self) -> Dict[str, Any]:
        """Конфигурация фантома"""
        return self.get('phantom', {})
    
    @property
    def planting_config(self) -> Dict[str, Any]:
        """Конфигурация посадки метастазов"""
        return self.get('planting', {})
    
    @property
    def segmentation_config(self) -> Dict[str, Any]:
        """Конфигурация сегментации"""
        return self.get('segmentation', {})
    
    @property
    def simulation_config(self) -> Dict[str, Any]:
        """Параметры биофизической модели"""
        return self.get('simulation', {})
    
    @property
    def logging_config(self) -> Dict[str, Any]:
        """Получение конфигурации логирования"""
        return self.get('logging', {})


def fingerprint(model: BaseModel) -> str:
    """
    Отпечаток параметров: sha256 канонического JSON модели
    
    Args:
        model: Валидированная pydantic-модель
        
    Returns:
        str: Шестнадцатеричный хеш
    """
    content = json.dumps(model.model_dump(mode='json'), sort_keys=True)
    return hashlib.sha256(content.encode()).hexdigest()


# Глобальный экземпляр конфигурации
config = Config()
