"""
出力・設定ファイル・保存
"""
