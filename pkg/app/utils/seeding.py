"""
乱数ストリームの分割
単一の64ビットシードからカウンタベース（Philox）の独立ストリームを派生させる
"""

from typing import List

import numpy as np


def substream(seed: int, *keys: int) -> np.random.Generator:
    """(seed, keys) で決まる独立ストリーム"""
    sequence = np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in keys))
    return np.random.Generator(np.random.Philox(sequence))


def child_seeds(rng: np.random.Generator, count: int) -> List[int]:
    """ワーカーへ渡す子シード（順序はワーカー数に依存しない）"""
    return [int(s) for s in rng.integers(0, 2**63, size=count)]
