"""
Slug Jouguet Solver

화학 슬러그 주입(2상 유동 + 흡착) 문제의 반해석 해법
"""

__version__ = "1.0.0"
__author__ = "Numerics Team"
