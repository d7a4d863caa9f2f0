"""
Скрипты запуска симулятора
"""
