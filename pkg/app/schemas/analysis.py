"""
盗聴解析・効率計算・後処理の記録型
"""

from fractions import Fraction
from typing import Literal, Optional

from pydantic import BaseModel, Field, model_validator


class LeakageReport(BaseModel):
    """entangle-measure 攻撃の誤り率と探針の識別可能性"""

    phase: Literal[1, 2]
    ctrl_error: float = Field(ge=0.0, le=1.0)
    sift_error: float = Field(ge=0.0, le=1.0)
    probe_distinguishability: float = Field(ge=0.0, le=1.0)

    @property
    def max_error(self) -> float:
        return max(self.ctrl_error, self.sift_error)


class DetectionRow(BaseModel):
    """detect 出力の1行（フィールド順は CSV 列順）"""

    attack: str
    phase: Literal[1, 2]
    p_analytic: Optional[float] = None
    p_hat: float
    std_err: float
    trials: int = Field(ge=1)


class EfficiencyAccount(BaseModel):
    """量子ビット効率 η = λ_b / (γ_q + γ_c)"""

    n: int = Field(ge=1)
    delta: int = Field(ge=1)
    nu: int = Field(ge=1)
    lambda_b: int
    gamma_q: int
    gamma_c: int = 0
    eta: float

    @model_validator(mode="after")
    def _check_eta(self) -> "EfficiencyAccount":
        if self.gamma_q != 15 * self.n + 14 * self.delta + 15 * self.nu:
            raise ValueError("γ_q が 15n+14δ+15ν と一致しません")
        if abs(self.eta - float(self.eta_exact)) > 1e-12:
            raise ValueError("η が λ_b/(γ_q+γ_c) と一致しません")
        return self

    @property
    def eta_exact(self) -> Fraction:
        return Fraction(self.lambda_b, self.gamma_q + self.gamma_c)


class PostprocConfig(BaseModel):
    """誤り訂正・秘匿性増強の設定"""

    block_size: int = Field(default=8, ge=1)
    output_length: Optional[int] = Field(default=None, ge=0)
    hash_seed: int = Field(default=0, ge=0, lt=2**64)


class QubitTally(BaseModel):
    """トランスクリプトから数えた消費量子ビット数"""

    count: int = Field(ge=0)
    aborted: bool = False
