"""
名前付き状態・測定基底・ユニタリ
GHZ-like 状態8種、ベル状態4種、Z基底、σ0/σ1、CNOT
"""

from enum import Enum
from functools import lru_cache
from typing import NamedTuple
import logging

import numpy as np

from app.core.qsim import (
    MeasurementBasis,
    QsimError,
    STATE_TOL,
    StateVector,
    Unitary,
    make_basis_state,
    tensor,
)

logger = logging.getLogger(__name__)


class GhzLikeLabel(NamedTuple):
    """|G_abc⟩ のラベル"""

    a: int
    b: int
    c: int

    @classmethod
    def parse(cls, text: str) -> "GhzLikeLabel":
        """'G001' または '001' を解釈"""
        bits = text[1:] if text.upper().startswith("G") else text
        if len(bits) != 3 or any(ch not in "01" for ch in bits):
            raise QsimError(f"GHZ-like ラベルが不正です: {text}")
        return cls(int(bits[0]), int(bits[1]), int(bits[2]))

    def __str__(self):
        return f"G{self.a}{self.b}{self.c}"


class BellLabel(str, Enum):
    """ベル状態（基底の並びは φ+, φ−, ψ+, ψ− で固定）"""

    PHI_PLUS = "phi+"
    PHI_MINUS = "phi-"
    PSI_PLUS = "psi+"
    PSI_MINUS = "psi-"


class PauliLabel(str, Enum):
    SIGMA0 = "sigma0"
    SIGMA1 = "sigma1"


# 計算基底インデックス → 符号（振幅は ±1/2）
GHZ_LIKE_SIGNS = {
    GhzLikeLabel(0, 0, 0): {0b000: 1, 0b011: 1, 0b101: 1, 0b110: 1},
    GhzLikeLabel(0, 0, 1): {0b001: 1, 0b010: 1, 0b100: 1, 0b111: 1},
    GhzLikeLabel(0, 1, 0): {0b000: 1, 0b011: -1, 0b101: -1, 0b110: 1},
    GhzLikeLabel(0, 1, 1): {0b001: 1, 0b010: -1, 0b100: -1, 0b111: 1},
    GhzLikeLabel(1, 0, 0): {0b000: 1, 0b011: -1, 0b101: 1, 0b110: -1},
    GhzLikeLabel(1, 0, 1): {0b001: 1, 0b010: -1, 0b100: 1, 0b111: -1},
    GhzLikeLabel(1, 1, 0): {0b000: 1, 0b011: 1, 0b101: -1, 0b110: -1},
    GhzLikeLabel(1, 1, 1): {0b001: 1, 0b010: 1, 0b100: -1, 0b111: -1},
}

# ベル状態の振幅（±1/√2）
BELL_SIGNS = {
    BellLabel.PHI_PLUS: {0b00: 1, 0b11: 1},
    BellLabel.PHI_MINUS: {0b00: 1, 0b11: -1},
    BellLabel.PSI_PLUS: {0b01: 1, 0b10: 1},
    BellLabel.PSI_MINUS: {0b01: 1, 0b10: -1},
}

G001 = GhzLikeLabel(0, 0, 1)


def ghz_like(label) -> StateVector:
    """|G_abc⟩"""
    if isinstance(label, str):
        label = GhzLikeLabel.parse(label)
    amps = np.zeros(8, dtype=np.complex128)
    for index, sign in GHZ_LIKE_SIGNS[GhzLikeLabel(*label)].items():
        amps[index] = sign * 0.5
    return StateVector(amps)


@lru_cache(maxsize=None)
def ghz_like_basis() -> MeasurementBasis:
    """GHZ-like 基底（G000 … G111 の順）"""
    labels = sorted(GHZ_LIKE_SIGNS)
    return MeasurementBasis([ghz_like(lb) for lb in labels], [str(lb) for lb in labels])


def bell(label) -> StateVector:
    label = BellLabel(label)
    amps = np.zeros(4, dtype=np.complex128)
    for index, sign in BELL_SIGNS[label].items():
        amps[index] = sign / np.sqrt(2)
    return StateVector(amps)


@lru_cache(maxsize=None)
def bell_basis() -> MeasurementBasis:
    labels = list(BellLabel)
    return MeasurementBasis([bell(lb) for lb in labels], [lb.value for lb in labels])


@lru_cache(maxsize=None)
def z_basis() -> MeasurementBasis:
    """{|0⟩, |1⟩}"""
    return MeasurementBasis([make_basis_state(1, 0), make_basis_state(1, 1)], ["0", "1"])


def pauli(label) -> Unitary:
    """σ0 = I, σ1 = |0⟩⟨1| + |1⟩⟨0|"""
    label = PauliLabel(label)
    if label is PauliLabel.SIGMA0:
        return Unitary(np.eye(2))
    return Unitary([[0, 1], [1, 0]])


def cnot() -> Unitary:
    """制御が上位量子ビット、標的が下位量子ビットの CNOT"""
    return Unitary(
        [
            [1, 0, 0, 0],
            [0, 1, 0, 0],
            [0, 0, 0, 1],
            [0, 0, 1, 0],
        ]
    )


def swap() -> Unitary:
    return Unitary(
        [
            [1, 0, 0, 0],
            [0, 0, 1, 0],
            [0, 1, 0, 0],
            [0, 0, 0, 1],
        ]
    )


def g001_decomposition_residual(
    first: BellLabel = BellLabel.PSI_PLUS, second: BellLabel = BellLabel.PHI_PLUS
) -> float:
    """‖|G001⟩ − (|0⟩|first⟩ + |1⟩|second⟩)/√2‖"""
    zero = make_basis_state(1, 0)
    one = make_basis_state(1, 1)
    rhs = (tensor(zero, bell(first)).amplitudes + tensor(one, bell(second)).amplitudes) / np.sqrt(2)
    return float(np.linalg.norm(ghz_like(G001).amplitudes - rhs))


def verify_g001_decomposition(
    first: BellLabel = BellLabel.PSI_PLUS, second: BellLabel = BellLabel.PHI_PLUS
) -> bool:
    """|G001⟩ = (|0⟩|ψ+⟩ + |1⟩|φ+⟩)/√2 の恒等式を数値確認"""
    return g001_decomposition_residual(first, second) < STATE_TOL
