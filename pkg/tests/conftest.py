"""
pytest共通設定
"""

import numpy as np
import pytest
from sqlalchemy import create_engine
from sqlalchemy.orm import sessionmaker
from sqlalchemy.pool import StaticPool

from app.models.database import Base
from app.schemas import ProtocolParams
from app.utils.seeding import substream


# テスト用インメモリデータベース
SQLALCHEMY_DATABASE_URL = "sqlite:///:memory:"

engine = create_engine(
    SQLALCHEMY_DATABASE_URL,
    connect_args={"check_same_thread": False},
    poolclass=StaticPool,
)
TestingSessionLocal = sessionmaker(autocommit=False, autoflush=False, bind=engine)


@pytest.fixture(scope="function")
def db_session():
    """テスト用DBセッション"""
    Base.metadata.create_all(bind=engine)
    session = TestingSessionLocal()
    try:
        yield session
    finally:
        session.close()
        Base.metadata.drop_all(bind=engine)


@pytest.fixture
def rng() -> np.random.Generator:
    """固定シードの乱数ストリーム"""
    return substream(20240601)


@pytest.fixture
def small_params() -> ProtocolParams:
    """小規模パラメータ (n, δ, ν) = (4, 2, 2)"""
    return ProtocolParams(n=4, delta=2, nu=2, seed=7)


@pytest.fixture
def eager_celery():
    """Celeryタスクをプロセス内で同期実行"""
    from app.tasks.celery_app import celery_app

    previous = celery_app.conf.task_always_eager
    celery_app.conf.task_always_eager = True
    try:
        yield celery_app
    finally:
        celery_app.conf.task_always_eager = previous
