"""
データモデル
"""

from app.models.database import Base, engine, SessionLocal, init_db
from app.models.session import SessionRow, RoundRow

__all__ = [
    "Base",
    "engine",
    "SessionLocal",
    "init_db",
    "SessionRow",
    "RoundRow",
]
