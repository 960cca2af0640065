"""
量子状態・プロトコル・攻撃・後処理
"""
