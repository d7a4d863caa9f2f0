"""
Оценка предсказаний: мягкий и жёсткий классификаторы
"""
