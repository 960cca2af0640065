"""
古典後処理エンジンのテスト
"""

from fractions import Fraction

import numpy as np
import pytest

from app.core.postproc import PostProcessor, PrivacyAmplificationError, ReconciliationError
from app.core.protocol import ProtocolEngine
from app.schemas import PostprocConfig, ProtocolParams
from app.utils.seeding import substream


class TestReconcile:
    """誤り訂正"""

    def setup_method(self):
        self.proc = PostProcessor()
        self.config = PostprocConfig(block_size=8)
        self.bits = substream(11).integers(0, 2, size=208).tolist()

    def test_identical_strings(self):
        """一致する208ビット、ブロック8 → 開示26ビット"""
        corrected, leaked = self.proc.reconcile(self.bits, self.bits, self.config)
        assert corrected == self.bits
        assert leaked == 26

    def test_single_error(self):
        """1ビット誤り → 訂正、開示は 26 + log2(8)"""
        noisy = list(self.bits)
        noisy[37] ^= 1
        corrected, leaked = self.proc.reconcile(self.bits, noisy, self.config)
        assert corrected == self.bits
        assert leaked == 26 + 3

    def test_errors_in_separate_blocks(self):
        noisy = list(self.bits)
        noisy[0] ^= 1
        noisy[100] ^= 1
        corrected, leaked = self.proc.reconcile(self.bits, noisy, self.config)
        assert corrected == self.bits
        assert leaked == 26 + 6

    def test_two_errors_in_one_block(self):
        """同一ブロック内の偶数個の誤りは訂正できない"""
        noisy = list(self.bits)
        noisy[8] ^= 1
        noisy[9] ^= 1
        with pytest.raises(ReconciliationError):
            self.proc.reconcile(self.bits, noisy, self.config)

    def test_empty(self):
        assert self.proc.reconcile([], [], self.config) == ([], 0)

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            self.proc.reconcile([0, 1], [0], self.config)

    def test_idempotent(self):
        once, _ = self.proc.reconcile(self.bits, self.bits, self.config)
        twice, _ = self.proc.reconcile(self.bits, once, self.config)
        assert twice == self.bits


class TestPrivacyAmplification:
    """秘匿性増強"""

    def setup_method(self):
        self.proc = PostProcessor()
        self.bits = substream(12).integers(0, 2, size=64).tolist()

    def test_deterministic(self):
        assert self.proc.privacy_amplify(self.bits, 8, 16, 5) == self.proc.privacy_amplify(self.bits, 8, 16, 5)

    def test_zero_length(self):
        assert self.proc.privacy_amplify(self.bits, 8, 0, 5) == []

    def test_too_long(self):
        with pytest.raises(PrivacyAmplificationError):
            self.proc.privacy_amplify(self.bits, 8, 57, 5)

    def test_negative_length(self):
        with pytest.raises(PrivacyAmplificationError):
            self.proc.privacy_amplify(self.bits, 8, -1, 5)

    def test_single_bit_flip_follows_column(self):
        """1ビット反転で出力は Toeplitz 行列の対応列だけ変わる"""
        flipped = list(self.bits)
        flipped[10] ^= 1
        a = np.array(self.proc.privacy_amplify(self.bits, 0, 20, 9))
        b = np.array(self.proc.privacy_amplify(flipped, 0, 20, 9))
        column = self.proc.toeplitz_matrix(20, 64, 9)[:, 10]
        assert np.array_equal(a ^ b, column)

    def test_linearity(self):
        other = substream(13).integers(0, 2, size=64).tolist()
        xor = [x ^ y for x, y in zip(self.bits, other)]
        a = np.array(self.proc.privacy_amplify(self.bits, 0, 16, 3))
        b = np.array(self.proc.privacy_amplify(other, 0, 16, 3))
        c = np.array(self.proc.privacy_amplify(xor, 0, 16, 3))
        assert np.array_equal(a ^ b, c)

    def test_toeplitz_structure(self):
        t = self.proc.toeplitz_matrix(5, 7, 1)
        for i in range(1, 5):
            for j in range(1, 7):
                assert t[i, j] == t[i - 1, j - 1]

    def test_default_output_length(self):
        assert self.proc.default_output_length(208, 26) == 208 - 26 - 32
        assert self.proc.default_output_length(40, 26) == 0


class TestQubitEfficiency:
    """量子ビット効率"""

    def setup_method(self):
        self.proc = PostProcessor()

    def test_example(self):
        """(100, 10, 10) → 320/1790"""
        account = self.proc.qubit_efficiency(100, 10, 10)
        assert account.lambda_b == 320
        assert account.gamma_q == 1790
        assert account.gamma_c == 0
        assert account.eta_exact == Fraction(320, 1790)

    def test_smallest(self):
        account = self.proc.qubit_efficiency(1, 1, 1)
        assert account.lambda_b == 5
        assert account.gamma_q == 44
        assert account.eta_exact == Fraction(5, 44)

    def test_formula_random(self):
        rng = substream(14)
        for _ in range(100):
            n, d, v = (int(x) for x in rng.integers(1, 1000, size=3))
            account = self.proc.qubit_efficiency(n, d, v)
            assert account.eta_exact == Fraction(3 * n + 2 * v, 15 * n + 14 * d + 15 * v)

    def test_decreasing_in_delta(self):
        etas = [self.proc.qubit_efficiency(50, d, 20).eta for d in range(1, 30)]
        assert all(a > b for a, b in zip(etas, etas[1:]))

    def test_non_positive(self):
        with pytest.raises(ValueError):
            self.proc.qubit_efficiency(0, 1, 1)


class TestQubitTally:
    """トランスクリプトからの消費量子ビット数"""

    def setup_method(self):
        self.proc = PostProcessor()
        self.engine = ProtocolEngine()

    @pytest.mark.parametrize("n,delta,nu,expected", [(4, 2, 2, 118), (1, 1, 1, 44)])
    def test_honest_tally(self, n, delta, nu, expected):
        result = self.engine.run_session(ProtocolParams(n=n, delta=delta, nu=nu, seed=3))
        tally = self.proc.count_consumed_qubits(result)
        assert tally.count == expected
        assert not tally.aborted

    def test_tally_matches_formula(self):
        rng = substream(15)
        for _ in range(100):
            n, d, v = (int(x) for x in rng.integers(1, 5, size=3))
            result = self.engine.run_session(ProtocolParams(n=n, delta=d, nu=v, seed=int(rng.integers(0, 1000))))
            assert self.proc.count_consumed_qubits(result).count == 15 * n + 14 * d + 15 * v
