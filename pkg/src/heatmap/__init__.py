"""
Тепловая карта вероятности метастазирования P(I)
"""
