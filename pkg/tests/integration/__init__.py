"""
Интеграционные тесты
"""
