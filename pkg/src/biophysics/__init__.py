"""
Биофизическая модель M: рост, отделение клеток, перенос и колонизация
"""
