"""
Синтетический фантом лёгких с известной разметкой
"""
