"""
検出確率推定タスク
モンテカルロ推定の1チャンクをワーカーで実行する
"""

from app.tasks.celery_app import celery_app
from app.core.adversary import AttackStrategy, detection_failures
from app.schemas import ProtocolParams
import logging

logger = logging.getLogger(__name__)


@celery_app.task
def estimate_detection_chunk(payload: dict) -> int:
    """
    payload: params, strategy, phase, trials, seed
    戻り値: 検査に失敗した位置数
    """
    params = ProtocolParams(**payload["params"])
    strategy = AttackStrategy.from_payload(payload["strategy"])
    phase = int(payload["phase"])
    trials = int(payload["trials"])

    logger.info(f"Detection chunk started: attack={strategy.name} phase={phase} trials={trials}")
    try:
        failures = detection_failures(params, strategy, phase, trials, int(payload["seed"]))
    except Exception as e:
        logger.error(f"Detection chunk failed: {e}")
        raise

    logger.info(f"Detection chunk completed: {failures}/{trials} failures")
    return failures
