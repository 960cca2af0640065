"""
状態ベクトルカーネルのテスト
"""

import numpy as np
import pytest

from app.core.qsim import (
    DensityMatrix,
    MeasurementBasis,
    QsimError,
    StateVector,
    Unitary,
    apply_unitary,
    born_distribution,
    discard_product_qubits,
    make_basis_state,
    measure_subset,
    project,
    random_state,
    random_unitary,
    reduced_density,
    tensor,
    trace_distance,
)
from app.core.states import BellLabel, G001, PauliLabel, bell, bell_basis, cnot, ghz_like, ghz_like_basis, pauli, z_basis
from app.utils.seeding import substream


class TestStateConstruction:
    """状態の構成"""

    def test_basis_state(self):
        """|001⟩ は index 1 に振幅1"""
        state = make_basis_state(3, 0b001)
        assert state.num_qubits == 3
        assert state.amplitudes[1] == 1
        assert np.count_nonzero(state.amplitudes) == 1

    def test_basis_state_all_ones(self):
        state = make_basis_state(4, 0b1111)
        assert state.amplitudes[15] == 1

    def test_basis_state_out_of_range(self):
        with pytest.raises(QsimError):
            make_basis_state(2, 4)

    def test_unnormalized_rejected(self):
        with pytest.raises(QsimError):
            StateVector([1, 1])

    def test_too_many_qubits(self):
        with pytest.raises(QsimError):
            tensor(make_basis_state(4, 0), make_basis_state(3, 0))

    def test_tensor_order(self):
        """a の量子ビットが上位: |0⟩ ⊗ |1⟩ = |01⟩"""
        state = tensor(make_basis_state(1, 0), make_basis_state(1, 1))
        assert state.allclose(make_basis_state(2, 0b01))

    def test_tensor_psi_plus(self):
        """|ψ+⟩ ⊗ |0⟩ = (|010⟩ + |100⟩)/√2"""
        state = tensor(bell(BellLabel.PSI_PLUS), make_basis_state(1, 0))
        expected = np.zeros(8)
        expected[0b010] = expected[0b100] = 1 / np.sqrt(2)
        assert state.allclose(StateVector(expected))

    def test_amplitudes_read_only(self):
        state = make_basis_state(1, 0)
        with pytest.raises(ValueError):
            state.amplitudes[0] = 0


class TestUnitary:
    """ユニタリと作用"""

    def test_not_unitary(self):
        with pytest.raises(QsimError):
            Unitary([[1, 1], [0, 1]])

    def test_sigma1_maps_psi_plus_to_phi_plus(self):
        """ψ+ の第1量子ビットに σ1 で φ+"""
        state = apply_unitary(bell(BellLabel.PSI_PLUS), pauli(PauliLabel.SIGMA1), [0])
        assert state.allclose(bell(BellLabel.PHI_PLUS))

    def test_sigma0_is_identity(self):
        state = apply_unitary(ghz_like(G001), pauli(PauliLabel.SIGMA0), [1])
        assert state.allclose(ghz_like(G001))

    def test_cnot_on_g001_with_probe(self):
        """CNOT(1→E)(|G001⟩|0⟩) = ½(|0010⟩+|0100⟩+|1001⟩+|1111⟩)"""
        state = tensor(ghz_like(G001), make_basis_state(1, 0))
        state = apply_unitary(state, cnot(), [0, 3])
        expected = np.zeros(16)
        for index in (0b0010, 0b0100, 0b1001, 0b1111):
            expected[index] = 0.5
        assert state.allclose(StateVector(expected))

    def test_target_order(self):
        """対象の順序を入れ替えると制御と標的が入れ替わる"""
        state = apply_unitary(make_basis_state(2, 0b01), cnot(), [1, 0])
        assert state.allclose(make_basis_state(2, 0b11))

    def test_duplicate_targets(self):
        with pytest.raises(QsimError):
            apply_unitary(make_basis_state(2, 0), cnot(), [0, 0])

    def test_dimension_mismatch(self):
        with pytest.raises(QsimError):
            apply_unitary(make_basis_state(2, 0), cnot(), [0])

    def test_random_unitary_is_unitary(self):
        rng = substream(1)
        for dim in (2, 4, 8):
            u = random_unitary(dim, rng)
            assert np.allclose(u.matrix.conj().T @ u.matrix, np.eye(dim), atol=1e-10)

    def test_norm_preserved(self):
        rng = substream(2)
        state = random_state(4, rng)
        u = random_unitary(4, rng)
        out = apply_unitary(state, u, [3, 1])
        assert abs(np.linalg.norm(out.amplitudes) - 1.0) < 1e-10


class TestMeasurement:
    """射影測定"""

    def setup_method(self):
        self.rng = substream(3)

    def test_g001_first_qubit_z(self):
        """|G001⟩ の第1量子ビットのZ測定: 0 なら |0⟩|ψ+⟩、1 なら |1⟩|φ+⟩"""
        probs = born_distribution(ghz_like(G001), [0], z_basis())
        assert np.allclose(probs, [0.5, 0.5])
        _, zero = project(ghz_like(G001), [0], z_basis(), "0")
        _, one = project(ghz_like(G001), [0], z_basis(), "1")
        assert zero.allclose(tensor(make_basis_state(1, 0), bell(BellLabel.PSI_PLUS)))
        assert one.allclose(tensor(make_basis_state(1, 1), bell(BellLabel.PHI_PLUS)))

    def test_eigenstate_measurement(self):
        label, prob, _ = measure_subset(ghz_like(G001), [0, 1, 2], ghz_like_basis(), self.rng)
        assert label == "G001"
        assert prob == pytest.approx(1.0)

    def test_ghz_like_mixture(self):
        """(|001⟩+|010⟩)/√2 は G001 と G111 に 1/2 ずつ"""
        amps = np.zeros(8)
        amps[0b001] = amps[0b010] = 1 / np.sqrt(2)
        probs = dict(zip(ghz_like_basis().labels, born_distribution(StateVector(amps), [0, 1, 2], ghz_like_basis())))
        assert probs["G001"] == pytest.approx(0.5)
        assert probs["G111"] == pytest.approx(0.5)
        assert sum(probs.values()) == pytest.approx(1.0)

    def test_bell_distribution(self):
        assert born_distribution(bell(BellLabel.PHI_PLUS), [0, 1], bell_basis())[0] == pytest.approx(1.0)
        probs = born_distribution(make_basis_state(2, 0), [0, 1], bell_basis())
        assert np.allclose(probs, [0.5, 0.5, 0, 0])

    def test_zero_probability_projection(self):
        with pytest.raises(QsimError):
            project(make_basis_state(1, 0), [0], z_basis(), "1")

    def test_basis_size_mismatch(self):
        with pytest.raises(QsimError):
            born_distribution(ghz_like(G001), [0], bell_basis())

    def test_sampling_frequency(self):
        counts = {"0": 0, "1": 0}
        for _ in range(4000):
            label, _, _ = measure_subset(ghz_like(G001), [0], z_basis(), self.rng)
            counts[label] += 1
        assert counts["0"] / 4000 == pytest.approx(0.5, abs=0.04)

    def test_non_orthonormal_basis(self):
        with pytest.raises(QsimError):
            MeasurementBasis([make_basis_state(1, 0), make_basis_state(1, 0)], ["a", "b"])

    def test_discard_product_qubit(self):
        state = tensor(make_basis_state(1, 1), bell(BellLabel.PSI_PLUS))
        assert discard_product_qubits(state, [0]).allclose(bell(BellLabel.PSI_PLUS))

    def test_discard_entangled_qubit(self):
        with pytest.raises(QsimError):
            discard_product_qubits(bell(BellLabel.PHI_PLUS), [0])


class TestDensity:
    """縮約密度行列とトレース距離"""

    def test_reduce_product(self):
        state = tensor(make_basis_state(1, 0), bell(BellLabel.PHI_PLUS))
        rho = reduced_density(state, [0])
        assert np.allclose(rho.matrix, [[1, 0], [0, 0]])

    def test_reduce_bell(self):
        rho = reduced_density(bell(BellLabel.PHI_PLUS), [0])
        assert np.allclose(rho.matrix, np.eye(2) / 2)

    def test_keep_order(self):
        """keep の順に並ぶ"""
        state = make_basis_state(2, 0b01)
        rho = reduced_density(state, [1, 0])
        assert np.allclose(rho.matrix, DensityMatrix.pure(make_basis_state(2, 0b10)).matrix)

    def test_trace_distance(self):
        zero = DensityMatrix.pure(make_basis_state(1, 0))
        one = DensityMatrix.pure(make_basis_state(1, 1))
        assert trace_distance(zero, one) == pytest.approx(1.0)
        assert trace_distance(zero, zero) == pytest.approx(0.0, abs=1e-12)
        assert trace_distance(zero, DensityMatrix.maximally_mixed(1)) == pytest.approx(0.5)

    def test_invalid_density(self):
        with pytest.raises(QsimError):
            DensityMatrix([[1, 0], [0, 1]])


class TestInvariants:
    """カーネルの性質"""

    def setup_method(self):
        self.rng = substream(4)

    def test_haar_moment(self):
        """dim 2 で |u00|² の平均は 1/2"""
        values = [abs(random_unitary(2, self.rng).matrix[0, 0]) ** 2 for _ in range(10000)]
        assert np.mean(values) == pytest.approx(0.5, abs=0.02)

    def test_random_unitary_deterministic(self):
        a = random_unitary(4, substream(5))
        b = random_unitary(4, substream(5))
        assert np.array_equal(a.matrix, b.matrix)

    def test_unitary_then_dagger(self):
        for _ in range(100):
            state = random_state(3, self.rng)
            u = random_unitary(4, self.rng)
            out = apply_unitary(apply_unitary(state, u, [2, 0]), u.dagger(), [2, 0])
            assert out.allclose(state, atol=1e-10)

    def test_remeasure_same_outcome(self):
        for _ in range(100):
            state = random_state(3, self.rng)
            label, _, collapsed = measure_subset(state, [0, 2], bell_basis(), self.rng)
            again, prob, _ = measure_subset(collapsed, [0, 2], bell_basis(), self.rng)
            assert again == label
            assert prob == pytest.approx(1.0)

    def test_normalization_after_measurement(self):
        for _ in range(200):
            state = random_state(4, self.rng)
            _, _, collapsed = measure_subset(state, [1, 3], bell_basis(), self.rng)
            assert abs(np.linalg.norm(collapsed.amplitudes) - 1.0) < 1e-10

    def test_reduce_product_factor(self):
        a = random_state(1, self.rng)
        b = random_state(2, self.rng)
        rho = reduced_density(tensor(a, b), [1, 2])
        assert np.allclose(rho.matrix, DensityMatrix.pure(b).matrix, atol=1e-12)
