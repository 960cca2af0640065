"""
状態ベクトル・カーネル
最大6量子ビットの密な状態ベクトルに対するユニタリ適用、射影測定、部分トレース、トレース距離

インデックス規約: 量子ビット0が基底インデックスの最上位ビット
（|q0 q1 q2⟩ はケットの表記どおり左から読む）
"""

from typing import List, Sequence, Tuple
import logging

import numpy as np

logger = logging.getLogger(__name__)

MAX_QUBITS = 6
ALGEBRA_TOL = 1e-10  # 代数的恒等式の許容誤差
STATE_TOL = 1e-12  # 構成した状態の許容誤差
PROBABILITY_FLOOR = 1e-12  # これ未満の確率はサンプリング対象外


class QsimError(ValueError):
    """カーネル操作の前提条件違反"""


def _is_power_of_two(value: int) -> bool:
    return value >= 1 and (value & (value - 1)) == 0


def _num_qubits_for(dim: int) -> int:
    return dim.bit_length() - 1


class StateVector:
    """正規化済み純粋状態（呼び出し側からは不変）"""

    def __init__(self, amplitudes, atol: float = ALGEBRA_TOL):
        amps = np.array(amplitudes, dtype=np.complex128).reshape(-1)
        if amps.size < 2 or not _is_power_of_two(amps.size):
            raise QsimError(f"状態ベクトル長が不正です: {amps.size}")
        num_qubits = _num_qubits_for(amps.size)
        if num_qubits > MAX_QUBITS:
            raise QsimError(f"量子ビット数が上限を超えています: {num_qubits} > {MAX_QUBITS}")
        norm = float(np.linalg.norm(amps))
        if abs(norm - 1.0) > atol:
            raise QsimError(f"状態が正規化されていません: norm={norm}")
        amps.setflags(write=False)
        self._amplitudes = amps
        self.num_qubits = num_qubits

    @classmethod
    def normalized(cls, amplitudes) -> "StateVector":
        """未正規化の振幅から状態を作る"""
        amps = np.array(amplitudes, dtype=np.complex128).reshape(-1)
        norm = np.linalg.norm(amps)
        if norm < PROBABILITY_FLOOR:
            raise QsimError("零ベクトルは正規化できません")
        return cls(amps / norm)

    @property
    def amplitudes(self) -> np.ndarray:
        return self._amplitudes

    @property
    def dim(self) -> int:
        return self._amplitudes.size

    def allclose(self, other: "StateVector", atol: float = STATE_TOL) -> bool:
        """振幅が（大域位相を含めて）一致するか"""
        return other.dim == self.dim and bool(
            np.allclose(self._amplitudes, other._amplitudes, atol=atol, rtol=0)
        )

    def __repr__(self):
        return f"<StateVector(num_qubits={self.num_qubits})>"


class Unitary:
    """ユニタリ行列（U†U = I）"""

    def __init__(self, matrix, atol: float = ALGEBRA_TOL):
        m = np.array(matrix, dtype=np.complex128)
        if m.ndim != 2 or m.shape[0] != m.shape[1] or not _is_power_of_two(m.shape[0]):
            raise QsimError(f"ユニタリの形状が不正です: {m.shape}")
        if m.shape[0] < 2:
            raise QsimError("1次元のユニタリは扱いません")
        if not np.allclose(m.conj().T @ m, np.eye(m.shape[0]), atol=atol, rtol=0):
            raise QsimError("not unitary")
        m.setflags(write=False)
        self._matrix = m

    @classmethod
    def identity(cls, num_qubits: int) -> "Unitary":
        return cls(np.eye(2**num_qubits))

    @property
    def matrix(self) -> np.ndarray:
        return self._matrix

    @property
    def dim(self) -> int:
        return self._matrix.shape[0]

    @property
    def num_qubits(self) -> int:
        return _num_qubits_for(self.dim)

    def dagger(self) -> "Unitary":
        return Unitary(self._matrix.conj().T)

    def __repr__(self):
        return f"<Unitary(dim={self.dim})>"


class MeasurementBasis:
    """k量子ビット上の正規直交基底（2^k 個のラベル付き状態）"""

    def __init__(self, states: Sequence[StateVector], labels: Sequence[str]):
        if not states:
            raise QsimError("基底が空です")
        qubit_count = states[0].num_qubits
        if any(s.num_qubits != qubit_count for s in states):
            raise QsimError("基底状態の量子ビット数が揃っていません")
        if len(states) != 2**qubit_count:
            raise QsimError(f"基底状態の数が {2**qubit_count} ではありません: {len(states)}")
        if len(labels) != len(states) or len(set(labels)) != len(labels):
            raise QsimError("ラベルが不正です")

        matrix = np.array([s.amplitudes for s in states])
        gram = matrix.conj() @ matrix.T
        if not np.allclose(gram, np.eye(len(states)), atol=ALGEBRA_TOL, rtol=0):
            raise QsimError("基底が正規直交ではありません")
        matrix.setflags(write=False)

        self.qubit_count = qubit_count
        self.states = list(states)
        self.labels = list(labels)
        self._matrix = matrix
        self._index = {label: i for i, label in enumerate(self.labels)}

    @property
    def matrix(self) -> np.ndarray:
        """行が基底状態の振幅"""
        return self._matrix

    def index_of(self, label: str) -> int:
        if label not in self._index:
            raise QsimError(f"未知の測定ラベル: {label}")
        return self._index[label]

    def __repr__(self):
        return f"<MeasurementBasis(qubit_count={self.qubit_count}, labels={self.labels})>"


class DensityMatrix:
    """エルミート・半正定値・トレース1の密度行列"""

    def __init__(self, matrix, atol: float = ALGEBRA_TOL):
        m = np.array(matrix, dtype=np.complex128)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise QsimError(f"密度行列の形状が不正です: {m.shape}")
        if not np.allclose(m, m.conj().T, atol=atol, rtol=0):
            raise QsimError("密度行列がエルミートではありません")
        if abs(np.trace(m).real - 1.0) > atol:
            raise QsimError(f"密度行列のトレースが1ではありません: {np.trace(m).real}")
        if np.linalg.eigvalsh(m).min() < -atol:
            raise QsimError("密度行列が半正定値ではありません")
        m.setflags(write=False)
        self._matrix = m

    @classmethod
    def pure(cls, state: StateVector) -> "DensityMatrix":
        return cls(np.outer(state.amplitudes, state.amplitudes.conj()))

    @classmethod
    def maximally_mixed(cls, num_qubits: int) -> "DensityMatrix":
        dim = 2**num_qubits
        return cls(np.eye(dim) / dim)

    @property
    def matrix(self) -> np.ndarray:
        return self._matrix

    @property
    def dim(self) -> int:
        return self._matrix.shape[0]

    def __repr__(self):
        return f"<DensityMatrix(dim={self.dim})>"


def _check_targets(num_qubits: int, targets: Sequence[int]) -> List[int]:
    targets = [int(t) for t in targets]
    if not targets:
        raise QsimError("対象量子ビットが空です")
    if len(set(targets)) != len(targets):
        raise QsimError(f"対象量子ビットが重複しています: {targets}")
    for t in targets:
        if not 0 <= t < num_qubits:
            raise QsimError(f"量子ビット番号が範囲外です: {t} (num_qubits={num_qubits})")
    return targets


def _split(state: StateVector, targets: List[int]) -> np.ndarray:
    """対象量子ビットを行、残りを列とする行列に並べ替える"""
    n = state.num_qubits
    psi = state.amplitudes.reshape((2,) * n)
    psi = np.moveaxis(psi, targets, list(range(len(targets))))
    return psi.reshape(2 ** len(targets), -1)


def _merge(matrix: np.ndarray, num_qubits: int, targets: List[int]) -> np.ndarray:
    psi = matrix.reshape((2,) * num_qubits)
    psi = np.moveaxis(psi, list(range(len(targets))), targets)
    return psi.reshape(-1)


def make_basis_state(num_qubits: int, index: int) -> StateVector:
    """計算基底状態 |index⟩"""
    if not 1 <= num_qubits <= MAX_QUBITS:
        raise QsimError(f"量子ビット数が範囲外です: {num_qubits}")
    if not 0 <= index < 2**num_qubits:
        raise QsimError(f"基底インデックスが範囲外です: {index}")
    amps = np.zeros(2**num_qubits, dtype=np.complex128)
    amps[index] = 1.0
    return StateVector(amps)


def tensor(a: StateVector, b: StateVector) -> StateVector:
    """a ⊗ b（aの量子ビットが上位）"""
    if a.num_qubits + b.num_qubits > MAX_QUBITS:
        raise QsimError(
            f"量子ビット数が上限を超えます: {a.num_qubits} + {b.num_qubits} > {MAX_QUBITS}"
        )
    return StateVector(np.kron(a.amplitudes, b.amplitudes))


def apply_unitary(state: StateVector, u: Unitary, targets: Sequence[int]) -> StateVector:
    """対象量子ビット（指定順）にユニタリを作用させる"""
    targets = _check_targets(state.num_qubits, targets)
    if u.dim != 2 ** len(targets):
        raise QsimError(f"ユニタリ次元 {u.dim} が対象 {len(targets)} 量子ビットと一致しません")
    psi = u.matrix @ _split(state, targets)
    return StateVector(_merge(psi, state.num_qubits, targets))


def _projections(
    state: StateVector, targets: Sequence[int], basis: MeasurementBasis
) -> Tuple[List[int], np.ndarray, np.ndarray]:
    targets = _check_targets(state.num_qubits, targets)
    if basis.qubit_count != len(targets):
        raise QsimError(
            f"基底の量子ビット数 {basis.qubit_count} が対象 {len(targets)} と一致しません"
        )
    # 各行: ⟨b_j| を対象量子ビットに作用させた残りの（未正規化）振幅
    proj = basis.matrix.conj() @ _split(state, targets)
    probs = np.sum(np.abs(proj) ** 2, axis=1)
    return targets, proj, probs


def born_distribution(
    state: StateVector, targets: Sequence[int], basis: MeasurementBasis
) -> np.ndarray:
    """基底ラベル順の測定確率ベクトル"""
    _, _, probs = _projections(state, targets, basis)
    return probs


def _collapse(
    state: StateVector, targets: List[int], basis: MeasurementBasis, proj: np.ndarray, j: int, prob: float
) -> StateVector:
    psi = np.outer(basis.matrix[j], proj[j]) / np.sqrt(prob)
    return StateVector(_merge(psi, state.num_qubits, targets))


def project(
    state: StateVector, targets: Sequence[int], basis: MeasurementBasis, label: str
) -> Tuple[float, StateVector]:
    """指定した結果への射影（確率と正規化後の状態）"""
    targets, proj, probs = _projections(state, targets, basis)
    j = basis.index_of(label)
    prob = float(probs[j])
    if prob < PROBABILITY_FLOOR:
        raise QsimError(f"確率0の結果への射影です: {label}")
    return prob, _collapse(state, targets, basis, proj, j, prob)


def measure_subset(
    state: StateVector,
    targets: Sequence[int],
    basis: MeasurementBasis,
    rng: np.random.Generator,
) -> Tuple[str, float, StateVector]:
    """ボルン則でサンプリングし、結果ラベル・確率・収縮後の状態を返す"""
    targets, proj, probs = _projections(state, targets, basis)
    weights = np.where(probs < PROBABILITY_FLOOR, 0.0, probs)
    weights = weights / weights.sum()
    j = int(rng.choice(len(weights), p=weights))
    prob = float(probs[j])
    return basis.labels[j], prob, _collapse(state, targets, basis, proj, j, prob)


def discard_product_qubits(state: StateVector, qubits: Sequence[int]) -> StateVector:
    """残りの系と積状態にある量子ビットを取り除く"""
    qubits = _check_targets(state.num_qubits, qubits)
    if len(qubits) >= state.num_qubits:
        raise QsimError("全ての量子ビットは取り除けません")
    _, s, vh = np.linalg.svd(_split(state, qubits), full_matrices=False)
    if len(s) > 1 and s[1] > np.sqrt(ALGEBRA_TOL):
        raise QsimError(f"量子ビット {qubits} は残りの系ともつれています")
    return StateVector.normalized(vh[0])


def reduced_density(state: StateVector, keep: Sequence[int]) -> DensityMatrix:
    """keep 以外をトレースアウトした縮約密度行列（keep の順に並ぶ）"""
    keep = _check_targets(state.num_qubits, keep)
    psi = _split(state, keep)
    return DensityMatrix(psi @ psi.conj().T)


def trace_distance(a: DensityMatrix, b: DensityMatrix) -> float:
    """½‖a − b‖₁"""
    if a.dim != b.dim:
        raise QsimError(f"次元が一致しません: {a.dim} != {b.dim}")
    eigenvalues = np.linalg.eigvalsh(a.matrix - b.matrix)
    return float(min(1.0, max(0.0, 0.5 * np.sum(np.abs(eigenvalues)))))


def random_unitary(dim: int, rng: np.random.Generator) -> Unitary:
    """ハール分布のユニタリ（複素ガウス行列のQR分解＋位相補正）"""
    if dim < 2 or not _is_power_of_two(dim):
        raise QsimError(f"次元は2のべきである必要があります: {dim}")
    z = (rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    d = np.diag(r)
    return Unitary(q * (d / np.abs(d)))


def random_state(num_qubits: int, rng: np.random.Generator) -> StateVector:
    """ハール分布の純粋状態"""
    amps = rng.standard_normal(2**num_qubits) + 1j * rng.standard_normal(2**num_qubits)
    return StateVector.normalized(amps)
