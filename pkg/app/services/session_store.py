"""
セッション保存サービス
SessionResult とトランスクリプトを SQLite に保存・読み出しする
"""

from typing import List, Optional
import logging

from sqlalchemy.orm import Session

from app.core.postproc import post_processor
from app.models.session import RoundRow, SessionRow
from app.schemas import RoundRecord, SessionResult

logger = logging.getLogger(__name__)


class SessionStore:
    """セッション保存サービス"""

    def save_session(self, db: Session, result: SessionResult) -> SessionRow:
        key = result.key_material
        row = SessionRow(
            n=result.params.n,
            delta=result.params.delta,
            nu=result.params.nu,
            seed=str(result.params.seed),
            attack=result.attack,
            detected=result.detected,
            detection_phase=result.detection_phase,
            info_length=len(key.info_alice) if key else None,
            leaked_bits=result.leaked_bits,
            final_key=result.final_key_hex,
            keys_agree=result.keys_agree,
            qubits_consumed=post_processor.count_consumed_qubits(result).count,
        )
        row.rounds = [
            RoundRow(
                phase=r.phase,
                position=r.position,
                action=r.action.value,
                bob_bit=r.bob_bit,
                checked=r.checked,
                check_passed=r.check_passed,
                alice_outcome_label=r.alice_outcome_label,
                kept_for_key=r.kept_for_key,
            )
            for r in result.records
        ]
        try:
            db.add(row)
            db.commit()
            db.refresh(row)
        except Exception as e:
            db.rollback()
            logger.error(f"Failed to save session: {e}")
            raise
        logger.info(f"Session saved: id={row.id} rounds={len(row.rounds)}")
        return row

    def get_session(self, db: Session, session_id: int) -> Optional[SessionRow]:
        return db.query(SessionRow).filter(SessionRow.id == session_id).first()

    def load_rounds(self, db: Session, session_id: int) -> List[RoundRecord]:
        """保存済みトランスクリプトを RoundRecord として復元"""
        rows = (
            db.query(RoundRow)
            .filter(RoundRow.session_id == session_id)
            .order_by(RoundRow.id)
            .all()
        )
        return [
            RoundRecord(
                position=r.position,
                phase=r.phase,
                action=r.action,
                bob_bit=r.bob_bit,
                checked=r.checked,
                check_passed=r.check_passed,
                alice_outcome_label=r.alice_outcome_label,
                kept_for_key=r.kept_for_key,
            )
            for r in rows
        ]


session_store = SessionStore()
