"""
プロトコル実行エンジン
GHZ-like 状態 |G001⟩ を用いる2者間 SQKD の Step 1〜9 を2フェーズで実行する

レジスタ配置
  第1フェーズ: [S1(往復粒子), S2, S3] + イブの量子ビット
  第2フェーズ: [S2'^U(往復粒子), S3'] + イブの量子ビット
"""

from typing import TYPE_CHECKING, List, Optional, Sequence, Tuple
import logging

import numpy as np

from app.config import settings
from app.core.postproc import ReconciliationError, post_processor
from app.core.qsim import (
    MeasurementBasis,
    StateVector,
    apply_unitary,
    discard_product_qubits,
    measure_subset,
    tensor,
)
from app.core.states import (
    G001,
    BellLabel,
    PauliLabel,
    bell,
    bell_basis,
    ghz_like,
    ghz_like_basis,
    pauli,
    z_basis,
)
from app.schemas import (
    BobAction,
    KeyMaterial,
    PostprocConfig,
    ProtocolParams,
    RoundRecord,
    SessionResult,
)
from app.utils.seeding import substream

if TYPE_CHECKING:
    from app.core.adversary import AttackStrategy

logger = logging.getLogger(__name__)

FLYING = 0
PHASE1_ALICE = [1, 2]
PHASE2_ALICE = [1]


class ProtocolError(ValueError):
    """位置数の帳尻が合わない等の内部不整合"""


class _Round:
    """チェック前の1位置ぶんの状態"""

    __slots__ = ("position", "phase", "state", "action", "bob_bit", "checked", "check_passed", "label", "kept")

    def __init__(self, position: int, phase: int, state: StateVector, action: BobAction, bob_bit: Optional[int]):
        self.position = position
        self.phase = phase
        self.state = state
        self.action = action
        self.bob_bit = bob_bit
        self.checked = False
        self.check_passed: Optional[bool] = None
        self.label: Optional[str] = None
        self.kept = False

    def to_record(self) -> RoundRecord:
        return RoundRecord(
            position=self.position,
            phase=self.phase,
            action=self.action,
            bob_bit=self.bob_bit,
            checked=self.checked,
            check_passed=self.check_passed,
            alice_outcome_label=self.label,
            kept_for_key=self.kept,
        )


class ProtocolEngine:
    """SQKD プロトコル実行エンジン"""

    def initial_state(self, phase: int) -> StateVector:
        """各フェーズで往復に出る直前の（正直な）状態"""
        if phase == 1:
            return ghz_like(G001)
        return bell(BellLabel.PHI_PLUS)

    def plan_bob_actions(
        self, total_positions: int, ctrl_count: int, rng: np.random.Generator
    ) -> List[BobAction]:
        """ちょうど ctrl_count 個の位置を一様ランダムに CTRL とし、残りを SIFT とする"""
        if not 0 <= ctrl_count <= total_positions:
            raise ProtocolError(f"CTRL 数が範囲外です: {ctrl_count} / {total_positions}")
        actions = [BobAction.SIFT] * total_positions
        for index in rng.choice(total_positions, size=ctrl_count, replace=False):
            actions[int(index)] = BobAction.CTRL
        return actions

    def bob_act(
        self, state: StateVector, flying_qubit: int, action: BobAction, rng: np.random.Generator
    ) -> Tuple[StateVector, Optional[int]]:
        """
        CTRL: そのまま反射
        SIFT: Z基底で測定し、同じ状態の新しい粒子を返送（射影後の粒子がそのまま新粒子になる）
        """
        if action is BobAction.CTRL:
            return state, None
        label, _, collapsed = measure_subset(state, [flying_qubit], z_basis(), rng)
        return collapsed, int(label)

    def check_steps(self, phase: int, action: BobAction) -> List[Tuple[List[int], MeasurementBasis]]:
        """アリスの検査測定（対象量子ビットと基底を測定順に並べたもの）"""
        if phase == 1:
            if action is BobAction.CTRL:
                return [([0, 1, 2], ghz_like_basis())]
            return [([0], z_basis()), (PHASE1_ALICE, bell_basis())]
        if action is BobAction.CTRL:
            return [([0, 1], bell_basis())]
        return [([0], z_basis()), ([1], z_basis())]

    def expected_outcome(self, phase: int, action: BobAction, bob_bit: Optional[int] = None) -> Tuple[str, ...]:
        """盗聴がない場合に check_steps が必ず返す結果"""
        if phase == 1:
            if action is BobAction.CTRL:
                return (str(G001),)
            bell_label = BellLabel.PSI_PLUS if bob_bit == 0 else BellLabel.PHI_PLUS
            return (str(bob_bit), bell_label.value)
        if action is BobAction.CTRL:
            return (BellLabel.PHI_PLUS.value,)
        return (str(bob_bit), str(bob_bit))

    def _measure_steps(
        self, state: StateVector, steps: List[Tuple[List[int], MeasurementBasis]], rng: np.random.Generator
    ) -> Tuple[str, ...]:
        labels = []
        for targets, basis in steps:
            label, _, state = measure_subset(state, targets, basis, rng)
            labels.append(label)
        return tuple(labels)

    def alice_check_ctrl_phase1(self, state: StateVector, rng: np.random.Generator) -> Tuple[bool, str]:
        """S1, S2, S3 を GHZ-like 基底で測定し、G001 なら合格"""
        labels = self._measure_steps(state, self.check_steps(1, BobAction.CTRL), rng)
        return labels == self.expected_outcome(1, BobAction.CTRL), labels[0]

    def alice_check_sift_phase1(
        self, state: StateVector, bob_bit: int, rng: np.random.Generator
    ) -> Tuple[bool, Tuple[str, str]]:
        """
        S1 をZ基底、(S2, S3) をベル基底で測定
        Z の結果がボブのビットと一致し、ビット0なら ψ+、ビット1なら φ+ であれば合格
        """
        labels = self._measure_steps(state, self.check_steps(1, BobAction.SIFT), rng)
        return labels == self.expected_outcome(1, BobAction.SIFT, bob_bit), labels

    def sift_phase1(
        self,
        rounds: Sequence[_Round],
        expected_survivors: int,
        rng: np.random.Generator,
        eve_qubits: int = 0,
    ) -> Tuple[List[int], List[int], List[StateVector]]:
        """
        Step 4: 未検査の SIFT 位置からアリスとボブの鍵素材 M_A1, M_B1 と (S2', S3') を得る
        アリスは S1' をZ基底で測定し、|0⟩ → ψ+ (0)、|1⟩ → φ+ (1) と符号化する
        """
        survivors = [r for r in rounds if r.action is BobAction.SIFT and not r.checked]
        if len(survivors) != expected_survivors:
            raise ProtocolError(f"第1フェーズの残存数が不正です: {len(survivors)} != {expected_survivors}")

        m_a1, m_b1, pairs = [], [], []
        for r in survivors:
            z_label, _, state = measure_subset(r.state, [0], z_basis(), rng)
            state = discard_product_qubits(state, [0])
            pairs.append(self._release_eve_qubits(state, eve_qubits, rng))
            m_a1.append(int(z_label))
            m_b1.append(r.bob_bit)
            r.kept = True
        return m_a1, m_b1, pairs

    def _release_eve_qubits(self, state: StateVector, eve_qubits: int, rng: np.random.Generator) -> StateVector:
        """
        第1フェーズ後にイブの手元に残る量子ビットはZ基底で測定して取り除く
        （以後誰も触れない部分系なので、残りの系の統計は変わらない）
        """
        for _ in range(eve_qubits):
            _, _, state = measure_subset(state, [2], z_basis(), rng)
            state = discard_product_qubits(state, [2])
        return state

    def alice_apply_correction(self, pair_state: StateVector, key_bit: int) -> StateVector:
        """Step 5: M_A1 ビットが0（ψ+）なら S2' に σ1、1（φ+）なら σ0"""
        label = PauliLabel.SIGMA1 if key_bit == 0 else PauliLabel.SIGMA0
        return apply_unitary(pair_state, pauli(label), [0])

    def alice_check_ctrl_phase2(self, pair_state: StateVector, rng: np.random.Generator) -> Tuple[bool, str]:
        """(S2'^U, S3') をベル基底で測定し、φ+ なら合格"""
        labels = self._measure_steps(pair_state, self.check_steps(2, BobAction.CTRL), rng)
        return labels == self.expected_outcome(2, BobAction.CTRL), labels[0]

    def alice_check_sift_phase2(
        self, pair_state: StateVector, bob_bit: int, rng: np.random.Generator
    ) -> Tuple[bool, Tuple[str, str]]:
        """両粒子をZ基底で測定し、どちらもボブのビットと一致すれば合格"""
        labels = self._measure_steps(pair_state, self.check_steps(2, BobAction.SIFT), rng)
        return labels == self.expected_outcome(2, BobAction.SIFT, bob_bit), labels

    def transmit(
        self,
        state: StateVector,
        phase: int,
        action: BobAction,
        rng: np.random.Generator,
        attack: Optional["AttackStrategy"] = None,
    ) -> Tuple[StateVector, Optional[int]]:
        """往復1回: イブ(往路) → ボブ → イブ(復路)"""
        active = attack is not None and attack.active_in(phase)
        if active:
            register = attack.initial_register()
            if register is not None:
                state = tensor(state, register)
            state = attack.forward(state, FLYING, rng)
        state, bob_bit = self.bob_act(state, FLYING, action, rng)
        if active:
            state = attack.backward(state, FLYING, rng)
        return state, bob_bit

    def check_round(self, phase: int, state: StateVector, action: BobAction, bob_bit: Optional[int], rng: np.random.Generator) -> Tuple[bool, str]:
        """アリスの盗聴検査（フェーズと操作に応じて切り替え）"""
        if phase == 1:
            if action is BobAction.CTRL:
                return self.alice_check_ctrl_phase1(state, rng)
            passed, labels = self.alice_check_sift_phase1(state, bob_bit, rng)
        else:
            if action is BobAction.CTRL:
                return self.alice_check_ctrl_phase2(state, rng)
            passed, labels = self.alice_check_sift_phase2(state, bob_bit, rng)
        return passed, ",".join(labels)

    def _run_checks(self, rounds: List[_Round], sift_checks: int, rng: np.random.Generator) -> Tuple[int, int]:
        """CTRL 位置は全て、SIFT 位置は sift_checks 個を無作為に選んで検査する"""
        sift_rounds = [r for r in rounds if r.action is BobAction.SIFT]
        if sift_checks > len(sift_rounds):
            raise ProtocolError(f"検査数 {sift_checks} が SIFT 位置数 {len(sift_rounds)} を超えています")
        for index in rng.choice(len(sift_rounds), size=sift_checks, replace=False):
            sift_rounds[int(index)].checked = True
        for r in rounds:
            if r.action is BobAction.CTRL:
                r.checked = True

        failed = 0
        checked = 0
        for r in rounds:
            if not r.checked:
                continue
            r.check_passed, r.label = self.check_round(r.phase, r.state, r.action, r.bob_bit, rng)
            checked += 1
            if not r.check_passed:
                failed += 1
                logger.debug(f"Check failed: phase={r.phase} position={r.position} action={r.action.value} outcome={r.label}")
        return failed, checked

    @staticmethod
    def _aborts(failed: int, checked: int, threshold: float) -> bool:
        return failed > 0 and failed / checked > threshold

    def _phase_rounds(
        self,
        phase: int,
        initial_states: Sequence[StateVector],
        ctrl_count: int,
        rng: np.random.Generator,
        attack: Optional["AttackStrategy"],
    ) -> List[_Round]:
        # 粒子は1個ずつ送られ、前の粒子が戻ってから次を送る
        actions = self.plan_bob_actions(len(initial_states), ctrl_count, rng)
        rounds = []
        for position, (state, action) in enumerate(zip(initial_states, actions)):
            state, bob_bit = self.transmit(state, phase, action, rng, attack)
            rounds.append(_Round(position, phase, state, action, bob_bit))
        return rounds

    def run_session(
        self,
        params: ProtocolParams,
        attack: Optional["AttackStrategy"] = None,
        rng: Optional[np.random.Generator] = None,
        postproc_config: Optional[PostprocConfig] = None,
        abort_threshold: Optional[float] = None,
    ) -> SessionResult:
        """Step 1〜9 を実行し、トランスクリプトと鍵を返す（検出は例外ではなく結果）"""
        rng = rng if rng is not None else substream(params.seed)
        threshold = settings.ABORT_THRESHOLD if abort_threshold is None else abort_threshold
        attack_name = attack.name if attack is not None else "none"
        logger.info(
            f"Session started: n={params.n} delta={params.delta} nu={params.nu} attack={attack_name}"
        )

        # Step 1〜3
        phase1 = self._phase_rounds(
            1, [self.initial_state(1)] * params.phase1_positions, params.phase1_ctrl, rng, attack
        )
        failed, checked = self._run_checks(phase1, params.phase1_checked_sift, rng)
        if self._aborts(failed, checked, threshold):
            return self._terminated(params, attack_name, phase1, 1, failed, checked)

        # Step 4〜5
        eve_qubits = attack.register_qubits if attack is not None and attack.active_in(1) else 0
        m_a1, m_b1, pairs = self.sift_phase1(phase1, params.phase1_key, rng, eve_qubits)
        corrected = [self.alice_apply_correction(p, bit) for p, bit in zip(pairs, m_a1)]
        if len(corrected) != params.phase2_positions:
            raise ProtocolError(f"第2フェーズの位置数が不正です: {len(corrected)} != {params.phase2_positions}")

        # Step 6〜7
        phase2 = self._phase_rounds(2, corrected, params.phase2_ctrl, rng, attack)
        failed, checked = self._run_checks(phase2, params.phase2_checked_sift, rng)
        if self._aborts(failed, checked, threshold):
            return self._terminated(params, attack_name, phase1 + phase2, 2, failed, checked)

        # Step 8
        survivors = [r for r in phase2 if r.action is BobAction.SIFT and not r.checked]
        if len(survivors) != params.phase2_key:
            raise ProtocolError(f"第2フェーズの残存数が不正です: {len(survivors)} != {params.phase2_key}")
        m_a2, m_b2 = [], []
        for r in survivors:
            label, _, _ = measure_subset(r.state, PHASE2_ALICE, z_basis(), rng)
            m_a2.append(int(label))
            m_b2.append(r.bob_bit)
            r.kept = True

        key_material = KeyMaterial(m_a1=m_a1, m_b1=m_b1, m_a2=m_a2, m_b2=m_b2)

        # Step 9
        config = postproc_config or PostprocConfig(
            block_size=settings.RECONCILE_BLOCK_SIZE, hash_seed=params.seed
        )
        final_key = final_key_bob = leaked = None
        try:
            final_key, final_key_bob, leaked = post_processor.finalize(
                key_material.info_alice, key_material.info_bob, config
            )
        except ReconciliationError as e:
            logger.error(f"Post-processing failed: {e}")

        logger.info(f"Session completed: info_bits={len(key_material.info_alice)} final_key={len(final_key or [])}")
        return SessionResult(
            params=params,
            attack=attack_name,
            records=[r.to_record() for r in phase1 + phase2],
            key_material=key_material,
            final_key=final_key,
            final_key_bob=final_key_bob,
            leaked_bits=leaked,
        )

    def _terminated(
        self,
        params: ProtocolParams,
        attack_name: str,
        rounds: List[_Round],
        phase: int,
        failed: int,
        checked: int,
    ) -> SessionResult:
        logger.warning(f"Eavesdropper detected in phase {phase}: {failed}/{checked} checks failed, session terminated")
        return SessionResult(
            params=params,
            attack=attack_name,
            records=[r.to_record() for r in rounds],
            detected=True,
            detection_phase=phase,
        )


protocol_engine = ProtocolEngine()
