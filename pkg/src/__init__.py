"""
Metasim - Основной пакет
"""

__version__ = "2.0.0"
__author__ = "Metasim Team"
__description__ = "Симулятор вероятностей колонизации метастазов рака лёгкого по 3D объёму"
