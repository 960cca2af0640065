"""
盗聴者（イブ）エンジン
往復する粒子とイブ自身の探針量子ビットだけに作用する攻撃、検出確率の閉形式、
モンテカルロ推定、entangle-measure 攻撃の決定的解析
"""

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from enum import Enum
from typing import Any, Dict, Iterator, List, Optional, Sequence, Tuple
import logging
import math

import numpy as np

from app.config import settings
from app.core.protocol import FLYING, protocol_engine
from app.core.qsim import (
    PROBABILITY_FLOOR,
    MeasurementBasis,
    StateVector,
    Unitary,
    apply_unitary,
    born_distribution,
    make_basis_state,
    measure_subset,
    project,
    reduced_density,
    tensor,
    trace_distance,
)
from app.core.states import cnot, pauli, PauliLabel, swap, z_basis
from app.schemas import BobAction, DetectionRow, LeakageReport, ProtocolParams
from app.utils.seeding import child_seeds, substream

logger = logging.getLogger(__name__)

MAX_PROBE_DIM = 8
LEAKAGE_FLOOR = 1e-8


class AttackConfigError(ValueError):
    """攻撃設定の不整合（次元不一致・閉形式のない攻撃など）"""


class AttackKind(str, Enum):
    NONE = "none"
    MEASURE_RESEND = "measure-resend"
    INTERCEPT_RESEND = "intercept-resend"
    DOUBLE_CNOT = "double-cnot"
    ENTANGLE_MEASURE = "entangle-measure"


class PhaseScope(str, Enum):
    PHASE1 = "1"
    PHASE2 = "2"
    BOTH = "both"

    def covers(self, phase: int) -> bool:
        return self is PhaseScope.BOTH or self.value == str(phase)

    @property
    def phases(self) -> List[int]:
        return [p for p in (1, 2) if self.covers(p)]


def encode_complex(values) -> list:
    """複素配列を [re, im] の入れ子リストへ"""
    array = np.asarray(values, dtype=complex)
    if array.ndim == 1:
        return [[float(v.real), float(v.imag)] for v in array]
    return [encode_complex(row) for row in array]


def decode_complex(values) -> np.ndarray:
    """[re, im] の入れ子リストを複素配列へ"""
    array = np.asarray(values, dtype=float)
    if array.shape[-1] != 2:
        raise AttackConfigError("複素数は [re, im] の組で指定してください")
    return array[..., 0] + 1j * array[..., 1]


def _nearest_unitary(matrix: np.ndarray, atol: float) -> Unitary:
    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
        raise AttackConfigError(f"ユニタリの形状が不正です: {matrix.shape}")
    if not np.allclose(matrix.conj().T @ matrix, np.eye(matrix.shape[0]), atol=atol, rtol=0):
        raise AttackConfigError("not unitary")
    w, _, vh = np.linalg.svd(matrix)
    return Unitary(w @ vh)


@dataclass(frozen=True)
class EntangleMeasureConfig:
    """往路ユニタリ（U_E / U_H）、復路ユニタリ（U_F / U_L）と探針の初期状態"""

    probe_dim: int
    forward_unitary: Unitary
    return_unitary: Unitary
    initial_probe: StateVector

    def __post_init__(self):
        if self.probe_dim < 2 or self.probe_dim > MAX_PROBE_DIM or self.probe_dim & (self.probe_dim - 1):
            raise AttackConfigError(f"探針の次元は2〜{MAX_PROBE_DIM}の2のべきです: {self.probe_dim}")
        expected = 2 * self.probe_dim
        if self.forward_unitary.dim != expected or self.return_unitary.dim != expected:
            raise AttackConfigError(
                f"ユニタリの次元が 2·probe_dim = {expected} と一致しません: "
                f"{self.forward_unitary.dim}, {self.return_unitary.dim}"
            )
        if self.initial_probe.dim != self.probe_dim:
            raise AttackConfigError(f"探針初期状態の次元 {self.initial_probe.dim} != {self.probe_dim}")

    @property
    def probe_qubits(self) -> int:
        return self.probe_dim.bit_length() - 1

    @classmethod
    def identity(cls, probe_dim: int = 2) -> "EntangleMeasureConfig":
        num_qubits = (2 * probe_dim).bit_length() - 1
        return cls(
            probe_dim=probe_dim,
            forward_unitary=Unitary.identity(num_qubits),
            return_unitary=Unitary.identity(num_qubits),
            initial_probe=make_basis_state(num_qubits - 1, 0),
        )

    def to_dict(self) -> Dict[str, Any]:
        return {
            "probe_dim": self.probe_dim,
            "forward": encode_complex(self.forward_unitary.matrix),
            "return": encode_complex(self.return_unitary.matrix),
            "initial_probe": encode_complex(self.initial_probe.amplitudes),
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any], atol: float = 1e-10) -> "EntangleMeasureConfig":
        """atol 以内でユニタリ・正規化なら、最も近いユニタリ・正規化状態に丸めて読み込む"""
        try:
            probe = decode_complex(data["initial_probe"])
            if abs(np.linalg.norm(probe) - 1.0) > atol:
                raise AttackConfigError(f"探針初期状態が正規化されていません: norm={np.linalg.norm(probe)}")
            return cls(
                probe_dim=int(data["probe_dim"]),
                forward_unitary=_nearest_unitary(decode_complex(data["forward"]), atol),
                return_unitary=_nearest_unitary(decode_complex(data["return"]), atol),
                initial_probe=StateVector.normalized(probe),
            )
        except KeyError as e:
            raise AttackConfigError(f"必須項目がありません: {e}")


@dataclass(frozen=True)
class AttackStrategy:
    """攻撃の種類・対象フェーズ・設定（不変）"""

    kind: AttackKind = AttackKind.NONE
    phase_scope: PhaseScope = PhaseScope.BOTH
    em_config: Optional[EntangleMeasureConfig] = None
    pin_fake_zero: bool = False

    def __post_init__(self):
        if (self.kind is AttackKind.ENTANGLE_MEASURE) != (self.em_config is not None):
            raise AttackConfigError("em_config は entangle-measure 攻撃でのみ指定します")

    @property
    def name(self) -> str:
        return self.kind.value

    @property
    def probe_qubits(self) -> int:
        if self.kind is AttackKind.DOUBLE_CNOT:
            return 1
        if self.kind is AttackKind.ENTANGLE_MEASURE:
            return self.em_config.probe_qubits
        return 0

    @property
    def register_qubits(self) -> int:
        """イブがレジスタに追加する量子ビット数（intercept-resend は本物を保管する1量子ビット）"""
        if self.kind is AttackKind.INTERCEPT_RESEND:
            return 1
        return self.probe_qubits

    def active_in(self, phase: int) -> bool:
        return self.kind is not AttackKind.NONE and self.phase_scope.covers(phase)

    def initial_register(self) -> Optional[StateVector]:
        if self.kind is AttackKind.ENTANGLE_MEASURE:
            return self.em_config.initial_probe
        if self.register_qubits:
            return make_basis_state(self.register_qubits, 0)
        return None

    def _register(self, state: StateVector) -> List[int]:
        return list(range(state.num_qubits - self.register_qubits, state.num_qubits))

    def forward(self, state: StateVector, flying_qubit: int, rng: Optional[np.random.Generator]) -> StateVector:
        """往路（アリス→ボブ）の攻撃"""
        if self.kind is AttackKind.MEASURE_RESEND:
            _, _, state = measure_subset(state, [flying_qubit], z_basis(), rng)
            return state
        if self.kind is AttackKind.INTERCEPT_RESEND:
            storage = self._register(state)[0]
            if not self.pin_fake_zero and rng.random() < 0.5:
                state = apply_unitary(state, pauli(PauliLabel.SIGMA1), [storage])
            # 偽の粒子を送り、本物は手元に残す
            return apply_unitary(state, swap(), [flying_qubit, storage])
        if self.kind is AttackKind.DOUBLE_CNOT:
            return apply_unitary(state, cnot(), [flying_qubit] + self._register(state))
        if self.kind is AttackKind.ENTANGLE_MEASURE:
            return apply_unitary(state, self.em_config.forward_unitary, [flying_qubit] + self._register(state))
        return state

    def backward(self, state: StateVector, flying_qubit: int, rng: Optional[np.random.Generator]) -> StateVector:
        """復路（ボブ→アリス）の攻撃"""
        if self.kind is AttackKind.DOUBLE_CNOT:
            return apply_unitary(state, cnot(), [flying_qubit] + self._register(state))
        if self.kind is AttackKind.ENTANGLE_MEASURE:
            return apply_unitary(state, self.em_config.return_unitary, [flying_qubit] + self._register(state))
        return state

    def as_entangle_measure_config(self) -> Optional[EntangleMeasureConfig]:
        """ユニタリで書ける攻撃を entangle-measure 設定として表す（測定を伴う攻撃は None）"""
        if self.kind is AttackKind.ENTANGLE_MEASURE:
            return self.em_config
        if self.kind is AttackKind.DOUBLE_CNOT:
            return EntangleMeasureConfig(
                probe_dim=2, forward_unitary=cnot(), return_unitary=cnot(), initial_probe=make_basis_state(1, 0)
            )
        if self.kind is AttackKind.NONE:
            return EntangleMeasureConfig.identity()
        return None

    def to_payload(self) -> Dict[str, Any]:
        """ワーカーへ渡す JSON 互換の表現"""
        return {
            "kind": self.kind.value,
            "phase_scope": self.phase_scope.value,
            "pin_fake_zero": self.pin_fake_zero,
            "em_config": self.em_config.to_dict() if self.em_config is not None else None,
        }

    @classmethod
    def from_payload(cls, payload: Dict[str, Any]) -> "AttackStrategy":
        em = payload.get("em_config")
        return cls(
            kind=AttackKind(payload["kind"]),
            phase_scope=PhaseScope(payload.get("phase_scope", PhaseScope.BOTH.value)),
            em_config=EntangleMeasureConfig.from_dict(em) if em is not None else None,
            pin_fake_zero=bool(payload.get("pin_fake_zero", False)),
        )


def sift_check_probability(params: ProtocolParams, phase: int) -> float:
    """SIFT 位置が検査に回される確率（第1フェーズ 2δ/2(n+δ+ν)、第2フェーズ ν/(n+ν)）"""
    if phase == 1:
        return params.phase1_checked_sift / params.phase1_ctrl
    return params.phase2_checked_sift / params.phase2_ctrl


def detection_failures(
    params: ProtocolParams, strategy: AttackStrategy, phase: int, trials: int, seed: int
) -> int:
    """独立な攻撃位置を trials 回シミュレートし、検査に失敗した位置数を返す"""
    rng = substream(seed)
    check_probability = sift_check_probability(params, phase)
    initial = protocol_engine.initial_state(phase)
    failures = 0
    for _ in range(trials):
        action = BobAction.CTRL if rng.random() < 0.5 else BobAction.SIFT
        state, bob_bit = protocol_engine.transmit(initial, phase, action, rng, strategy)
        if action is BobAction.SIFT and rng.random() >= check_probability:
            continue
        passed, _ = protocol_engine.check_round(phase, state, action, bob_bit, rng)
        if not passed:
            failures += 1
    return failures


def leakage_tol(error_tol: float) -> float:
    """誤り率 error_tol のときに許す探針の識別可能性"""
    return LEAKAGE_FLOOR + 2.0 * math.sqrt(max(error_tol, 0.0))


class AdversaryEngine:
    """盗聴攻撃エンジン"""

    def attack_forward(
        self, strategy: AttackStrategy, state: StateVector, flying_qubit: int, rng: np.random.Generator
    ) -> StateVector:
        return strategy.forward(state, flying_qubit, rng)

    def attack_return(
        self, strategy: AttackStrategy, state: StateVector, flying_qubit: int, rng: np.random.Generator
    ) -> StateVector:
        return strategy.backward(state, flying_qubit, rng)

    def analytic_detection(self, kind: AttackKind, phase: int, params: ProtocolParams) -> float:
        """
        1位置あたりの検出確率の閉形式
        measure-resend: 1/4
        intercept-resend: 3/8 + δ/(4(n+δ+ν))（第1フェーズ）、3/8 + ν/(4(n+ν))（第2フェーズ）
        """
        kind = AttackKind(kind)
        if kind in (AttackKind.NONE, AttackKind.DOUBLE_CNOT):
            return 0.0
        if kind is AttackKind.MEASURE_RESEND:
            return 0.25
        if kind is AttackKind.INTERCEPT_RESEND:
            if phase == 1:
                return 3 / 8 + params.delta / (4 * (params.n + params.delta + params.nu))
            return 3 / 8 + params.nu / (4 * (params.n + params.nu))
        raise AttackConfigError(f"{kind.value} 攻撃には検出確率の閉形式がありません")

    def estimate_detection(
        self,
        params: ProtocolParams,
        strategy: AttackStrategy,
        phase: int,
        trials: int,
        rng: np.random.Generator,
        workers: Optional[int] = None,
        backend: Optional[str] = None,
    ) -> Tuple[float, float]:
        """モンテカルロ推定（p_hat, 二項標準誤差）"""
        if trials < 1:
            raise AttackConfigError(f"試行回数は1以上です: {trials}")
        workers = settings.MC_WORKERS if workers is None else workers
        backend = backend or settings.MC_BACKEND
        chunk = settings.MC_CHUNK_SIZE

        sizes = [min(chunk, trials - start) for start in range(0, trials, chunk)]
        seeds = child_seeds(rng, len(sizes))
        logger.info(
            f"Estimating detection: attack={strategy.name} phase={phase} trials={trials} "
            f"chunks={len(sizes)} backend={backend} workers={workers}"
        )

        if backend == "celery":
            failures = self._run_celery(params, strategy, phase, sizes, seeds)
        elif workers > 1:
            with ProcessPoolExecutor(max_workers=workers) as executor:
                failures = sum(
                    executor.map(
                        detection_failures,
                        [params] * len(sizes),
                        [strategy] * len(sizes),
                        [phase] * len(sizes),
                        sizes,
                        seeds,
                    )
                )
        else:
            failures = sum(
                detection_failures(params, strategy, phase, size, seed) for size, seed in zip(sizes, seeds)
            )

        p_hat = failures / trials
        std_err = math.sqrt(p_hat * (1.0 - p_hat) / trials)
        return p_hat, std_err

    def _run_celery(
        self,
        params: ProtocolParams,
        strategy: AttackStrategy,
        phase: int,
        sizes: Sequence[int],
        seeds: Sequence[int],
    ) -> int:
        from celery import group

        from app.tasks.detection import estimate_detection_chunk

        job = group(
            estimate_detection_chunk.s(
                {
                    "params": params.model_dump(),
                    "strategy": strategy.to_payload(),
                    "phase": phase,
                    "trials": size,
                    "seed": seed,
                }
            )
            for size, seed in zip(sizes, seeds)
        )
        return sum(result.get() for result in job.apply_async().results)

    def detection_row(
        self,
        params: ProtocolParams,
        strategy: AttackStrategy,
        phase: int,
        trials: int,
        rng: np.random.Generator,
        workers: Optional[int] = None,
    ) -> DetectionRow:
        """detect 出力の1行（閉形式がない攻撃は p_analytic 空欄）"""
        try:
            p_analytic = self.analytic_detection(strategy.kind, phase, params)
        except AttackConfigError:
            p_analytic = None
        p_hat, std_err = self.estimate_detection(params, strategy, phase, trials, rng, workers=workers)
        return DetectionRow(
            attack=strategy.name, phase=phase, p_analytic=p_analytic, p_hat=p_hat, std_err=std_err, trials=trials
        )

    def _branches(
        self,
        state: StateVector,
        steps: Sequence[Tuple[List[int], MeasurementBasis]],
        prob: float = 1.0,
        labels: Tuple[str, ...] = (),
    ) -> Iterator[Tuple[float, Tuple[str, ...], StateVector]]:
        """測定列の全結果を確率付きで列挙（確率が床未満の枝は除く）"""
        if not steps:
            yield prob, labels, state
            return
        (targets, basis), rest = steps[0], steps[1:]
        for label, p in zip(basis.labels, born_distribution(state, targets, basis)):
            if prob * p < PROBABILITY_FLOOR:
                continue
            _, collapsed = project(state, targets, basis, label)
            yield from self._branches(collapsed, rest, prob * p, labels + (label,))

    def analyze_entangle_measure(self, config: EntangleMeasureConfig, phase: int) -> LeakageReport:
        """
        1位置の状態を往路攻撃 → ボブの操作 → 復路攻撃 → アリスの検査まで厳密に伝播させ、
        誤り率と、各分岐（ボブの操作 × 測定結果）におけるイブの探針状態の最大トレース距離を求める
        """
        strategy = AttackStrategy(kind=AttackKind.ENTANGLE_MEASURE, em_config=config)
        start = tensor(protocol_engine.initial_state(phase), config.initial_probe)
        probe = list(range(start.num_qubits - config.probe_qubits, start.num_qubits))
        attacked = strategy.forward(start, FLYING, None)

        probe_states = []

        # CTRL: そのまま反射
        ctrl_state = strategy.backward(attacked, FLYING, None)
        expected = protocol_engine.expected_outcome(phase, BobAction.CTRL)
        ctrl_error = 0.0
        for prob, labels, final in self._branches(ctrl_state, protocol_engine.check_steps(phase, BobAction.CTRL)):
            if labels != expected:
                ctrl_error += prob
            probe_states.append(reduced_density(final, probe))

        # SIFT: ボブのZ測定結果ごと
        sift_error = 0.0
        steps = protocol_engine.check_steps(phase, BobAction.SIFT)
        for bob_bit, p_bit in enumerate(born_distribution(attacked, [FLYING], z_basis())):
            if p_bit < PROBABILITY_FLOOR:
                continue
            _, reflected = project(attacked, [FLYING], z_basis(), str(bob_bit))
            reflected = strategy.backward(reflected, FLYING, None)
            expected = protocol_engine.expected_outcome(phase, BobAction.SIFT, bob_bit)
            for prob, labels, final in self._branches(reflected, steps):
                if labels != expected:
                    sift_error += p_bit * prob
                probe_states.append(reduced_density(final, probe))

        distinguishability = max(
            (trace_distance(a, b) for i, a in enumerate(probe_states) for b in probe_states[i + 1 :]),
            default=0.0,
        )
        report = LeakageReport(
            phase=phase,
            ctrl_error=min(1.0, max(0.0, ctrl_error)),
            sift_error=min(1.0, max(0.0, sift_error)),
            probe_distinguishability=distinguishability,
        )
        logger.debug(
            f"Entangle-measure analysis: phase={phase} ctrl_error={report.ctrl_error:.3e} "
            f"sift_error={report.sift_error:.3e} distinguishability={report.probe_distinguishability:.3e}"
        )
        return report

    def certificate_holds(self, report: LeakageReport, error_tol: float) -> bool:
        """誤り率が許容内なら探針の識別可能性も leakage_tol 以内（誤り率が超えていれば自明に真）"""
        if error_tol < 0:
            raise AttackConfigError(f"error_tol は0以上です: {error_tol}")
        if report.max_error > error_tol:
            return True
        return report.probe_distinguishability <= leakage_tol(error_tol)

    def zero_error_certificate(self, config: EntangleMeasureConfig, phase: int, error_tol: float) -> bool:
        """誤りを生まない攻撃は探針に情報を残せないことの数値的証明書"""
        return self.certificate_holds(self.analyze_entangle_measure(config, phase), error_tol)


adversary_engine = AdversaryEngine()
