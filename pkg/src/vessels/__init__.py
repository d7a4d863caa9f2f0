"""
Сосуды-цилиндры и граф кровотока G = (B, E)
"""
