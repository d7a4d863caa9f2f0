"""
Тесты симулятора метастазирования
"""
