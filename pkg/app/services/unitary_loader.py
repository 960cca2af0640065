"""
entangle-measure 攻撃設定ファイルの読み込み
"""

from pathlib import Path
import json
import logging

from app.core.adversary import AttackConfigError, EntangleMeasureConfig
from app.core.qsim import QsimError

logger = logging.getLogger(__name__)

FILE_TOLERANCE = 1e-8  # 10進表記の丸めを許容する


class UnitaryFileError(ValueError):
    """攻撃設定ファイルが読めない、または内容が不正"""


def load_entangle_measure_config(path) -> EntangleMeasureConfig:
    """JSON ファイル（probe_dim, forward, return, initial_probe）から設定を読み込む"""
    path = Path(path)
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except OSError as e:
        raise UnitaryFileError(f"ファイルを読み込めません: {path}: {e}")
    except json.JSONDecodeError as e:
        raise UnitaryFileError(f"JSON の形式が不正です: {path}: {e}")

    if not isinstance(data, dict):
        raise UnitaryFileError(f"最上位は JSON オブジェクトである必要があります: {path}")

    try:
        config = EntangleMeasureConfig.from_dict(data, atol=FILE_TOLERANCE)
    except (AttackConfigError, QsimError, ValueError, TypeError, IndexError) as e:
        raise UnitaryFileError(f"攻撃設定が不正です: {path}: {e}")

    logger.info(f"Loaded entangle-measure config: {path} (probe_dim={config.probe_dim})")
    return config


def save_entangle_measure_config(config: EntangleMeasureConfig, path) -> None:
    Path(path).write_text(json.dumps(config.to_dict(), indent=2) + "\n", encoding="utf-8")
