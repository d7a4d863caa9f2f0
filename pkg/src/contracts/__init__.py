"""
Контракты подмоделей биофизической модели M
"""
