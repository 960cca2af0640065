"""
アプリケーション設定を管理
環境変数（および .env）からシミュレーション設定を読み込む
"""

from pydantic_settings import BaseSettings
from typing import Optional


class Settings(BaseSettings):
    """アプリケーション設定"""

    # アプリケーション
    APP_NAME: str = "GHZ-like SQKD simulator"
    DEBUG: bool = False
    LOG_LEVEL: str = "INFO"

    # 乱数シード（--seed > SQKD_SEED > DEFAULT_SEED）
    SQKD_SEED: Optional[int] = None
    DEFAULT_SEED: int = 0

    # プロトコル既定値
    DEFAULT_N: int = 64
    DEFAULT_DELTA: int = 8
    DEFAULT_NU: int = 8

    # モンテカルロ
    DEFAULT_TRIALS: int = 40000
    MC_BACKEND: str = "local"  # local / celery
    MC_WORKERS: int = 1
    MC_CHUNK_SIZE: int = 2000

    # 後処理
    RECONCILE_BLOCK_SIZE: int = 8
    PA_SAFETY_MARGIN: int = 32
    ABORT_THRESHOLD: float = 0.0

    # データベース（トランスクリプト保存）
    DATABASE_URL: str = "sqlite:///./sqkd.db"

    # Redis / Celery
    CELERY_BROKER_URL: str = "redis://localhost:6379/0"
    CELERY_RESULT_BACKEND: str = "redis://localhost:6379/0"
    CELERY_ALWAYS_EAGER: bool = False

    class Config:
        env_file = ".env"
        env_file_encoding = "utf-8"

    def resolve_seed(self, cli_seed: Optional[int] = None) -> int:
        """CLI指定 > 環境変数 > 既定値 の順でシードを決定"""
        if cli_seed is not None:
            return cli_seed
        if self.SQKD_SEED is not None:
            return self.SQKD_SEED
        return self.DEFAULT_SEED


settings = Settings()
