"""
古典後処理エンジン
INFOビットの誤り訂正（ブロックパリティ＋二分探索）、Toeplitz ハッシュによる秘匿性増強、量子ビット効率の計算
"""

from typing import List, Optional, Sequence, Tuple
import logging

import numpy as np

from app.config import settings
from app.schemas import BobAction, EfficiencyAccount, PostprocConfig, QubitTally, SessionResult
from app.utils.seeding import substream

logger = logging.getLogger(__name__)


class ReconciliationError(ValueError):
    """訂正後も不一致が残った"""


class PrivacyAmplificationError(ValueError):
    """出力鍵長が取り出せる長さを超えている"""


class PostProcessor:
    """古典後処理エンジン"""

    @staticmethod
    def parity(bits: np.ndarray) -> int:
        return int(np.sum(bits) % 2)

    def _binary_search(self, alice_block: np.ndarray, bob_block: np.ndarray) -> Tuple[int, int]:
        """パリティ不一致ブロック内の誤り位置と開示パリティ数"""
        lo, hi = 0, len(alice_block)
        leaked = 0
        while hi - lo > 1:
            mid = (lo + hi) // 2
            leaked += 1
            if self.parity(alice_block[lo:mid]) != self.parity(bob_block[lo:mid]):
                hi = mid
            else:
                lo = mid
        return lo, leaked

    def reconcile(
        self,
        alice_bits: Sequence[int],
        bob_bits: Sequence[int],
        config: Optional[PostprocConfig] = None,
    ) -> Tuple[List[int], int]:
        """
        誤り訂正（2パス）
        1パス目: ブロックごとのパリティを比較
        2パス目: 不一致ブロックを二分探索して1ビット訂正
        """
        config = config or PostprocConfig(block_size=settings.RECONCILE_BLOCK_SIZE)
        if len(alice_bits) != len(bob_bits):
            raise ValueError(f"ビット列の長さが一致しません: {len(alice_bits)} != {len(bob_bits)}")

        alice = np.asarray(alice_bits, dtype=np.uint8)
        bob = np.array(bob_bits, dtype=np.uint8)
        block = config.block_size
        leaked = 0

        mismatched = []
        for start in range(0, len(alice), block):
            leaked += 1
            if self.parity(alice[start : start + block]) != self.parity(bob[start : start + block]):
                mismatched.append(start)

        for start in mismatched:
            end = min(start + block, len(alice))
            offset, cost = self._binary_search(alice[start:end], bob[start:end])
            leaked += cost
            bob[start + offset] ^= 1

        if not np.array_equal(alice, bob):
            residual = int(np.sum(alice != bob))
            logger.error(f"Reconciliation failed: {residual} residual mismatches")
            raise ReconciliationError(f"誤り訂正後も {residual} ビットの不一致が残りました")

        if mismatched:
            logger.info(f"Reconciled {len(mismatched)} blocks, leaked {leaked} parity bits")
        return bob.tolist(), leaked

    def toeplitz_matrix(self, rows: int, cols: int, hash_seed: int) -> np.ndarray:
        """シード付きランダム Toeplitz 行列 T[i, j] = s[i − j + cols − 1]"""
        diagonals = substream(hash_seed).integers(0, 2, size=rows + cols - 1, dtype=np.uint8)
        index = np.arange(rows)[:, None] - np.arange(cols)[None, :] + cols - 1
        return diagonals[index]

    def privacy_amplify(
        self, bits: Sequence[int], leaked: int, m: int, hash_seed: int
    ) -> List[int]:
        """GF(2) 上で m × len(bits) の Toeplitz 行列を掛けて m ビットに圧縮"""
        available = len(bits) - leaked
        if m < 0 or m > available:
            raise PrivacyAmplificationError(
                f"出力鍵長 {m} が取り出せる長さ {max(available, 0)} を超えています"
            )
        if m == 0:
            return []
        matrix = self.toeplitz_matrix(m, len(bits), hash_seed).astype(np.int64)
        key = (matrix @ np.asarray(bits, dtype=np.int64)) % 2
        logger.debug(f"Privacy amplification: {len(bits)} -> {m} bits")
        return key.tolist()

    def default_output_length(self, info_length: int, leaked: int) -> int:
        return max(0, info_length - leaked - settings.PA_SAFETY_MARGIN)

    def finalize(
        self,
        info_alice: Sequence[int],
        info_bob: Sequence[int],
        config: Optional[PostprocConfig] = None,
    ) -> Tuple[List[int], List[int], int]:
        """誤り訂正→秘匿性増強（アリス・ボブ両側の最終鍵と開示ビット数）"""
        config = config or PostprocConfig(block_size=settings.RECONCILE_BLOCK_SIZE)
        corrected_bob, leaked = self.reconcile(info_alice, info_bob, config)
        m = config.output_length
        if m is None:
            m = self.default_output_length(len(info_alice), leaked)
        key_alice = self.privacy_amplify(info_alice, leaked, m, config.hash_seed)
        key_bob = self.privacy_amplify(corrected_bob, leaked, m, config.hash_seed)
        if m == 0:
            logger.warning("Final key is empty: INFO bits do not cover leakage and safety margin")
        return key_alice, key_bob, leaked

    def qubit_efficiency(self, n: int, delta: int, nu: int) -> EfficiencyAccount:
        """
        量子ビット効率
        λ_b = 3n+2ν, γ_q = 4(n+δ+ν)×3 + 2(n+δ+ν) + (n+ν) = 15n+14δ+15ν, γ_c = 0
        """
        if min(n, delta, nu) < 1:
            raise ValueError(f"n, δ, ν は正の整数です: ({n}, {delta}, {nu})")
        lambda_b = 3 * n + 2 * nu
        gamma_q = 4 * (n + delta + nu) * 3 + 2 * (n + delta + nu) + (n + nu)
        gamma_c = 0
        return EfficiencyAccount(
            n=n,
            delta=delta,
            nu=nu,
            lambda_b=lambda_b,
            gamma_q=gamma_q,
            gamma_c=gamma_c,
            eta=lambda_b / (gamma_q + gamma_c),
        )

    def count_consumed_qubits(self, session: SessionResult) -> QubitTally:
        """
        トランスクリプトから消費量子ビット数を数える
        GHZ-like 状態1個につき3、ボブが SIFT で作り直した粒子1個につき1
        """
        count = 0
        for record in session.records:
            if record.phase == 1:
                count += 3
            if record.action is BobAction.SIFT:
                count += 1
        if session.detected:
            logger.warning(f"Session aborted in phase {session.detection_phase}, {count} qubits consumed")
        return QubitTally(count=count, aborted=session.detected)


post_processor = PostProcessor()
