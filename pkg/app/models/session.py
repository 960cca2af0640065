"""
セッション・トランスクリプトのデータモデル
"""

from sqlalchemy import Boolean, Column, DateTime, ForeignKey, Integer, String, Text
from sqlalchemy.orm import relationship
from sqlalchemy.sql import func

from app.models.database import Base


class SessionRow(Base):
    """プロトコル実行1回ぶんの結果テーブル"""

    __tablename__ = "sessions"

    id = Column(Integer, primary_key=True, autoincrement=True)
    n = Column(Integer, nullable=False)
    delta = Column(Integer, nullable=False)
    nu = Column(Integer, nullable=False)
    seed = Column(String(20), nullable=False)  # 64ビット符号なしのため文字列で保持
    attack = Column(String(30), nullable=False, default="none", index=True)
    detected = Column(Boolean, nullable=False, default=False)
    detection_phase = Column(Integer)
    info_length = Column(Integer)
    leaked_bits = Column(Integer)
    final_key = Column(Text)  # 16進
    keys_agree = Column(Boolean, default=False)
    qubits_consumed = Column(Integer, nullable=False)
    created_at = Column(DateTime, server_default=func.now())

    # リレーションシップ
    rounds = relationship(
        "RoundRow", back_populates="session", cascade="all, delete-orphan", order_by="RoundRow.id"
    )

    def __repr__(self):
        return f"<SessionRow(id={self.id}, attack={self.attack}, detected={self.detected})>"


class RoundRow(Base):
    """1位置ぶんのトランスクリプトテーブル"""

    __tablename__ = "rounds"

    id = Column(Integer, primary_key=True, autoincrement=True)
    session_id = Column(Integer, ForeignKey("sessions.id"), nullable=False, index=True)
    phase = Column(Integer, nullable=False)
    position = Column(Integer, nullable=False)
    action = Column(String(4), nullable=False)  # CTRL / SIFT
    bob_bit = Column(Integer)
    checked = Column(Boolean, nullable=False, default=False)
    check_passed = Column(Boolean)
    alice_outcome_label = Column(String(20))
    kept_for_key = Column(Boolean, nullable=False, default=False)

    session = relationship("SessionRow", back_populates="rounds")

    def __repr__(self):
        return f"<RoundRow(phase={self.phase}, position={self.position}, action={self.action})>"
