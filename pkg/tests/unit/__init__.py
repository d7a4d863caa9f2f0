"""
Модульные тесты
"""
