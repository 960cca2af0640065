"""
記録型（pydanticモデル）
"""

from app.schemas.protocol import (
    BobAction,
    KeyMaterial,
    ProtocolParams,
    RoundRecord,
    SessionResult,
    bits_to_hex,
)
from app.schemas.analysis import (
    DetectionRow,
    EfficiencyAccount,
    LeakageReport,
    PostprocConfig,
    QubitTally,
)
from app.schemas.experiment import ExperimentConfig

__all__ = [
    "BobAction",
    "KeyMaterial",
    "ProtocolParams",
    "RoundRecord",
    "SessionResult",
    "bits_to_hex",
    "DetectionRow",
    "EfficiencyAccount",
    "LeakageReport",
    "PostprocConfig",
    "QubitTally",
    "ExperimentConfig",
]
