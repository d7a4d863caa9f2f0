"""
Основные компоненты системы: конфигурация и логирование
"""
