"""
Celeryタスクモジュール（モンテカルロ検出推定）
"""
