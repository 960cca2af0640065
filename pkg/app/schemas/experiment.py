"""
CLI 実行設定の記録型
"""

from typing import List, Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, model_validator

from app.schemas.protocol import ProtocolParams


class ExperimentConfig(BaseModel):
    """1回のコマンド実行の設定（乱数はすべて seed から決まる）"""

    model_config = ConfigDict(frozen=True)

    command: Literal["run", "detect", "efficiency", "analyze-em"]
    params: Optional[ProtocolParams] = None
    # efficiency は n を複数とる
    n_values: List[int] = Field(default_factory=list)
    delta: Optional[int] = Field(default=None, ge=1)
    nu: Optional[int] = Field(default=None, ge=1)

    attack: str = "none"
    phase_scope: Literal["1", "2", "both"] = "both"
    em_file: Optional[str] = None
    pin_fake_zero: bool = False

    trials: int = Field(default=1, ge=1)
    workers: Optional[int] = Field(default=None, ge=1)
    seed: int = Field(default=0, ge=0, lt=2**64)
    error_tol: float = Field(default=1e-9, ge=0.0)

    abort_threshold: Optional[float] = Field(default=None, ge=0.0, le=1.0)
    block_size: int = Field(default=8, ge=1)
    key_length: Optional[int] = Field(default=None, ge=0)
    store: bool = False
    transcript: Optional[str] = None

    output_format: Literal["json", "csv"] = "json"
    output_path: Optional[str] = None

    @model_validator(mode="after")
    def check_command_fields(self) -> "ExperimentConfig":
        if self.command in ("run", "detect"):
            if self.params is None:
                raise ValueError(f"{self.command} には n, delta, nu が必要です")
            if self.params.seed != self.seed:
                raise ValueError("params.seed と seed が一致しません")
        if self.command == "efficiency":
            if not self.n_values or any(n < 1 for n in self.n_values):
                raise ValueError(f"n は1以上の整数を1つ以上指定してください: {self.n_values}")
            if self.delta is None or self.nu is None:
                raise ValueError("efficiency には delta, nu が必要です")
        if self.command == "analyze-em" and not self.em_file:
            raise ValueError("analyze-em には em_file が必要です")
        return self
