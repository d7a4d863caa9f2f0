"""
Воксельные объёмы: контейнер, файловый ввод-вывод, сетки и срезы
"""
