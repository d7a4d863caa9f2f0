"""
Сегментация колонизируемой ткани: рёбра, эллипсы, контуры, 3D-сглаживание
"""
