"""
セッション保存サービスのテスト
"""

from app.core.adversary import AttackKind, AttackStrategy, PhaseScope
from app.core.protocol import ProtocolEngine
from app.models.session import RoundRow, SessionRow
from app.schemas import ProtocolParams
from app.services.session_store import SessionStore


class TestSessionStore:
    """SQLite への保存と復元"""

    def setup_method(self):
        self.store = SessionStore()
        self.engine = ProtocolEngine()

    def test_save_honest_session(self, db_session):
        result = self.engine.run_session(ProtocolParams(n=2, delta=1, nu=1, seed=3))
        row = self.store.save_session(db_session, result)
        assert row.id is not None
        assert row.detected is False
        assert row.info_length == 8
        assert row.qubits_consumed == 15 * 2 + 14 + 15
        assert db_session.query(RoundRow).count() == len(result.records)

    def test_load_rounds_roundtrip(self, db_session):
        result = self.engine.run_session(ProtocolParams(n=2, delta=1, nu=1, seed=4))
        row = self.store.save_session(db_session, result)
        assert self.store.load_rounds(db_session, row.id) == result.records

    def test_save_detected_session(self, db_session):
        strategy = AttackStrategy(kind=AttackKind.MEASURE_RESEND, phase_scope=PhaseScope.PHASE1)
        result = self.engine.run_session(ProtocolParams(n=8, delta=2, nu=2, seed=5), attack=strategy)
        row = self.store.save_session(db_session, result)
        stored = self.store.get_session(db_session, row.id)
        assert stored.detected is True
        assert stored.detection_phase == 1
        assert stored.attack == "measure-resend"
        assert stored.final_key is None

    def test_large_seed(self, db_session):
        """64ビットのシードもそのまま保存できる"""
        result = self.engine.run_session(ProtocolParams(n=1, delta=1, nu=1, seed=2**64 - 1))
        row = self.store.save_session(db_session, result)
        assert int(db_session.get(SessionRow, row.id).seed) == 2**64 - 1

    def test_missing_session(self, db_session):
        assert self.store.get_session(db_session, 999) is None
        assert self.store.load_rounds(db_session, 999) == []
