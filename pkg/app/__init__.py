"""
GHZ-like 状態を用いた半量子鍵配送シミュレータ
"""
__version__ = "1.0.0"
