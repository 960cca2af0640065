"""
プロトコル実行の記録型
"""

from enum import Enum
from typing import Annotated, List, Literal, Optional

from pydantic import AfterValidator, BaseModel, ConfigDict, Field, computed_field, model_validator


def _check_bits(bits: List[int]) -> List[int]:
    if any(b not in (0, 1) for b in bits):
        raise ValueError("ビット列には0と1のみ使用できます")
    return bits


Bits = Annotated[List[int], AfterValidator(_check_bits)]


def bits_to_hex(bits: List[int]) -> str:
    """ビット列を小文字16進に変換（末尾を0で4ビット境界まで埋める）"""
    if not bits:
        return ""
    padded = list(bits) + [0] * (-len(bits) % 4)
    value = int("".join(str(b) for b in padded), 2)
    return format(value, f"0{len(padded) // 4}x")


class ProtocolParams(BaseModel):
    """プロトコルの規模パラメータ (n, δ, ν) とシード"""

    model_config = ConfigDict(frozen=True)

    n: int = Field(ge=1)
    delta: int = Field(ge=1)
    nu: int = Field(ge=1)
    seed: int = Field(default=0, ge=0, lt=2**64)

    # 第1フェーズ: 4(n+δ+ν) = CTRL 2(n+δ+ν) + 検査SIFT 2δ + 鍵SIFT 2(n+ν)
    @property
    def phase1_positions(self) -> int:
        return 4 * (self.n + self.delta + self.nu)

    @property
    def phase1_ctrl(self) -> int:
        return 2 * (self.n + self.delta + self.nu)

    @property
    def phase1_checked_sift(self) -> int:
        return 2 * self.delta

    @property
    def phase1_key(self) -> int:
        return 2 * (self.n + self.nu)

    # 第2フェーズ: 2(n+ν) = CTRL (n+ν) + 検査SIFT ν + 鍵SIFT n
    @property
    def phase2_positions(self) -> int:
        return 2 * (self.n + self.nu)

    @property
    def phase2_ctrl(self) -> int:
        return self.n + self.nu

    @property
    def phase2_checked_sift(self) -> int:
        return self.nu

    @property
    def phase2_key(self) -> int:
        return self.n

    @property
    def info_length(self) -> int:
        return 3 * self.n + 2 * self.nu


class BobAction(str, Enum):
    CTRL = "CTRL"
    SIFT = "SIFT"


class RoundRecord(BaseModel):
    """1位置ぶんのトランスクリプト"""

    position: int = Field(ge=0)
    phase: Literal[1, 2]
    action: BobAction
    bob_bit: Optional[int] = None
    checked: bool = False
    check_passed: Optional[bool] = None
    alice_outcome_label: Optional[str] = None
    kept_for_key: bool = False

    @model_validator(mode="after")
    def _check_invariants(self) -> "RoundRecord":
        if (self.bob_bit is not None) != (self.action is BobAction.SIFT):
            raise ValueError("bob_bit は SIFT の場合のみ記録されます")
        if self.bob_bit is not None and self.bob_bit not in (0, 1):
            raise ValueError("bob_bit は0か1です")
        if (self.check_passed is not None) != self.checked:
            raise ValueError("check_passed は検査位置でのみ記録されます")
        if self.kept_for_key and (self.checked or self.action is not BobAction.SIFT):
            raise ValueError("鍵に使う位置は未検査の SIFT 位置に限られます")
        return self


class KeyMaterial(BaseModel):
    """M_A1, M_B1, M_A2, M_B2 と INFO ビット"""

    m_a1: Bits
    m_b1: Bits
    m_a2: Bits
    m_b2: Bits

    @model_validator(mode="after")
    def _check_lengths(self) -> "KeyMaterial":
        if len(self.m_a1) != len(self.m_b1) or len(self.m_a2) != len(self.m_b2):
            raise ValueError("アリスとボブの鍵素材の長さが一致しません")
        return self

    @computed_field
    @property
    def info_alice(self) -> List[int]:
        return self.m_a1 + self.m_a2

    @computed_field
    @property
    def info_bob(self) -> List[int]:
        return self.m_b1 + self.m_b2


class SessionResult(BaseModel):
    """セッション全体の結果"""

    params: ProtocolParams
    attack: str = "none"
    records: List[RoundRecord] = Field(default_factory=list)
    detected: bool = False
    detection_phase: Optional[Literal[1, 2]] = None
    key_material: Optional[KeyMaterial] = None
    final_key: Optional[Bits] = None
    final_key_bob: Optional[Bits] = None
    leaked_bits: Optional[int] = None

    @model_validator(mode="after")
    def _check_invariants(self) -> "SessionResult":
        if (self.key_material is None) != self.detected:
            raise ValueError("鍵素材は盗聴が検出されなかった場合のみ存在します")
        if self.detected:
            if self.detection_phase is None:
                raise ValueError("検出フェーズが未設定です")
            if not any(r.check_passed is False for r in self.records):
                raise ValueError("検出時は少なくとも1つの検査が失敗しています")
        return self

    @property
    def final_key_hex(self) -> Optional[str]:
        return None if self.final_key is None else bits_to_hex(self.final_key)

    @property
    def final_key_bob_hex(self) -> Optional[str]:
        return None if self.final_key_bob is None else bits_to_hex(self.final_key_bob)

    @property
    def keys_agree(self) -> bool:
        return self.final_key is not None and self.final_key == self.final_key_bob

    def records_for(self, phase: int) -> List[RoundRecord]:
        return [r for r in self.records if r.phase == phase]
