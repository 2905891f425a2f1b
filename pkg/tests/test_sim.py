"""Simulator semantics, sampling statistics, and noise-channel behavior."""

import math

import numpy as np
import pytest

from h2vqe.ansatz import AnsatzSpec, Circuit, Gate, build_circuit
from h2vqe.pauli import group_terms, h2_2qubit, h2_4qubit
from h2vqe.sim import (
    CountsVector,
    NoiseModel,
    apply_circuit,
    bit_reversal_permutation,
    counts_from_dict,
    counts_to_dict,
    merge_counts,
    post_rotations,
    probabilities,
    run_noisy,
    sample_counts,
    statevector,
    zero_state,
)

BELL = Circuit(2, (Gate("h", (0,)), Gate("cx", (0, 1))))

# chi-squared criticals for p = 0.001 (df -> value)
CHI2_CRIT = {1: 10.828, 2: 13.816, 3: 16.266}


def binomial_within_5_sigma(observed, n, p):
    sigma = math.sqrt(n * p * (1 - p))
    return abs(observed - n * p) <= 5 * sigma


class TestGates:
    def test_ry_pi_flips(self):
        state = apply_circuit(zero_state(1), Circuit(1, (Gate("ry", (0,), np.pi),)))
        assert abs(state[1]) == pytest.approx(1.0, abs=1e-12)

    def test_bell_probabilities(self):
        probs = np.abs(apply_circuit(zero_state(2), BELL)) ** 2
        assert np.allclose(probs, [0.5, 0, 0, 0.5], atol=1e-12)

    def test_empty_circuit_identity(self):
        state = np.array([0.6, 0.8j], dtype=complex)
        assert np.array_equal(apply_circuit(state, Circuit(1, ())), state)

    def test_rz_phases(self):
        plus = apply_circuit(zero_state(1), Circuit(1, (Gate("h", (0,)),)))
        rotated = apply_circuit(plus, Circuit(1, (Gate("rz", (0,), np.pi),)))
        # Rz(pi)|+> = |-> up to global phase
        back = apply_circuit(rotated, Circuit(1, (Gate("h", (0,)),)))
        assert abs(back[1]) == pytest.approx(1.0, abs=1e-12)

    def test_cx_direction(self):
        # control 1, target 0: |10> (index 2) -> |11> (index 3)
        state = zero_state(2)
        state[0], state[2] = 0.0, 1.0
        out = apply_circuit(state, Circuit(2, (Gate("cx", (1, 0)),)))
        assert abs(out[3]) == pytest.approx(1.0)

    def test_out_of_range_qubit(self):
        from h2vqe.sim import apply_gate

        with pytest.raises(ValueError):
            apply_gate(zero_state(2), Gate("ry", (2,), 0.1), 2)

    def test_norm_preserved_across_full_ansatz(self):
        rng = np.random.default_rng(23)
        spec = AnsatzSpec("ryrz", "full", 2, 4)
        from h2vqe.ansatz import parameter_count

        for _ in range(10):
            params = rng.uniform(-np.pi, np.pi, parameter_count(spec))
            state = statevector(build_circuit(spec, params))
            assert abs(np.linalg.norm(state) - 1.0) <= 1e-10


class TestPostRotations:
    def test_all_z_empty(self):
        groups, _ = group_terms(h2_4qubit())
        assert post_rotations(groups[0]).gates == ()

    def test_4q_group1_h_on_0_and_2(self):
        groups, _ = group_terms(h2_4qubit())
        circ = post_rotations(groups[1])
        assert [(g.name, g.qubits[0]) for g in circ.gates] == [("h", 0), ("h", 2)]

    def test_2q_group1_h_on_both(self):
        groups, _ = group_terms(h2_2qubit())
        circ = post_rotations(groups[1])
        assert [(g.name, g.qubits[0]) for g in circ.gates] == [("h", 0), ("h", 1)]

    def test_y_basis_rejected(self):
        from h2vqe.pauli import MeasurementGroup

        group = MeasurementGroup(0, ("Y", "Z"), ())
        with pytest.raises(ValueError, match="basis"):
            post_rotations(group)


class TestSampling:
    def test_deterministic_state(self):
        state = zero_state(2)
        state[0], state[3] = 0.0, 1.0
        cv = sample_counts(state, 4096, seed=1)
        assert cv.counts == (0, 0, 0, 4096)

    def test_readout_binomial(self):
        noise = NoiseModel(readout_enabled=True, readout=(0.1, 0.0))
        cv = sample_counts(zero_state(1), 10000, seed=2, noise=noise)
        assert binomial_within_5_sigma(cv.counts[1], 10000, 0.1)

    def test_bell_zero_amplitude_outcomes(self):
        state = apply_circuit(zero_state(2), BELL)
        cv = sample_counts(state, 8192, seed=3)
        assert cv.counts[1] == 0 and cv.counts[2] == 0

    def test_sampling_determinism(self):
        state = statevector(build_circuit(AnsatzSpec(), np.linspace(0, 1, 12)))
        noise = NoiseModel(readout_enabled=True)
        a = sample_counts(state, 4096, seed=[7, 1], noise=noise)
        b = sample_counts(state, 4096, seed=[7, 1], noise=noise)
        assert a == b

    def test_empirical_convergence_total_variation(self):
        rng = np.random.default_rng(11)
        from h2vqe.ansatz import parameter_count

        spec = AnsatzSpec("ry", "linear", 2, 4)
        for trial in range(3):
            params = rng.uniform(-np.pi, np.pi, parameter_count(spec))
            state = statevector(build_circuit(spec, params))
            probs = np.abs(state) ** 2
            cv = sample_counts(state, 65536, seed=[13, trial])
            tv = 0.5 * np.abs(cv.probabilities() - probs / probs.sum()).sum()
            assert tv < 0.02

    def test_shots_validation(self):
        with pytest.raises(ValueError):
            sample_counts(zero_state(1), 0, seed=1)


class TestRunNoisy:
    def test_disabled_noise_matches_ideal_distribution(self):
        # chi-squared on the Bell circuit at 8192 shots, p > 0.001
        cv = run_noisy(BELL, 8192, seed=5, noise=NoiseModel.ideal())
        expected = 8192 * probabilities(BELL)
        live = expected > 0
        stat = float(
            (((np.asarray(cv.counts) - expected) ** 2)[live] / expected[live]).sum()
        )
        assert cv.counts[1] == 0 and cv.counts[2] == 0
        assert stat < CHI2_CRIT[int(live.sum()) - 1]

    def test_readout_only_equals_sample_counts(self):
        circ = build_circuit(AnsatzSpec(), np.linspace(0.2, 1.4, 12))
        noise = NoiseModel(readout_enabled=True)
        via_run = run_noisy(circ, 4096, seed=9, noise=noise)
        via_sample = sample_counts(statevector(circ), 4096, seed=9, noise=noise)
        assert via_run == via_sample

    def test_zero_prob_gate_channel_equals_sample_counts(self):
        circ = build_circuit(AnsatzSpec(), np.linspace(0.2, 1.4, 12))
        noise = NoiseModel(
            gate_enabled=True, p1=0.0, p2=0.0, readout_enabled=True
        )
        via_run = run_noisy(circ, 2048, seed=21, noise=noise)
        via_sample = sample_counts(statevector(circ), 2048, seed=21, noise=noise)
        assert via_run == via_sample

    def test_identity_circuit_readout_flips(self):
        # 4 idle qubits, flip prob 0.02 each: P(all zeros) = 0.98^4
        circ = build_circuit(AnsatzSpec(), np.zeros(12))
        noise = NoiseModel(readout_enabled=True, readout=(0.02, 0.02))
        cv = run_noisy(circ, 8192, seed=31, noise=noise)
        assert binomial_within_5_sigma(cv.counts[0], 8192, 0.98**4)

    def test_gate_noise_determinism(self):
        circ = build_circuit(AnsatzSpec(), np.linspace(-1, 1, 12))
        noise = NoiseModel(gate_enabled=True, readout_enabled=True)
        a = run_noisy(circ, 4096, seed=[3, 14], noise=noise)
        b = run_noisy(circ, 4096, seed=[3, 14], noise=noise)
        assert a == b

    def test_certain_gate_error_scrambles(self):
        # Ry(0) then a guaranteed random Pauli: X and Y land in |1>, Z stays
        circ = Circuit(1, (Gate("ry", (0,), 0.0),))
        noise = NoiseModel(gate_enabled=True, p1=1.0)
        cv = run_noisy(circ, 9000, seed=41, noise=noise)
        assert binomial_within_5_sigma(cv.counts[1], 9000, 2.0 / 3.0)

    def test_gate_noise_shifts_bell(self):
        noise = NoiseModel(gate_enabled=True, p1=0.05, p2=0.05)
        cv = run_noisy(BELL, 8192, seed=43, noise=noise)
        # forbidden outcomes appear once depolarizing is on
        assert cv.counts[1] + cv.counts[2] > 0


class TestCountsVector:
    def test_validation(self):
        with pytest.raises(ValueError):
            CountsVector((1, 2, 3), 6)  # not a power of two
        with pytest.raises(ValueError):
            CountsVector((1, 2), 4)  # wrong sum
        with pytest.raises(ValueError):
            CountsVector((-1, 5), 4)

    def test_probabilities(self):
        cv = CountsVector((1, 3), 4)
        assert np.allclose(cv.probabilities(), [0.25, 0.75])
        assert cv.n_qubits == 1

    def test_merge(self):
        a = CountsVector((1, 3), 4)
        b = CountsVector((2, 2), 4)
        m = merge_counts(a, b)
        assert m.counts == (3, 5) and m.shots == 8
        assert merge_counts(b, a) == m


class TestCountsSerialization:
    def test_round_trip_q0_leftmost(self):
        cv = CountsVector((5, 1, 2, 8), 16)
        doc = counts_to_dict(cv, ("X", "Z"), bit_order="q0_leftmost", group_id=1)
        back, basis, meta = counts_from_dict(doc)
        assert back == cv
        assert basis == "XZ"
        assert meta == {"group_id": 1}

    def test_round_trip_q0_rightmost(self):
        cv = CountsVector((5, 1, 2, 8), 16)
        doc = counts_to_dict(cv, ("X", "Z"), bit_order="q0_rightmost")
        assert doc["counts"] == [5, 1, 2, 8]
        assert doc["group_basis"] == "ZX"
        back, basis, _ = counts_from_dict(doc)
        assert back == cv and basis == "XZ"

    def test_leftmost_permutes(self):
        # internal index 1 (q0 set) prints as "1000" -> serialized index 8
        cv = CountsVector((0, 7, 0, 0, 0, 0, 0, 0, 1, 0, 0, 0, 0, 0, 0, 0), 8)
        doc = counts_to_dict(cv, ("Z",) * 4, bit_order="q0_leftmost")
        assert doc["counts"][8] == 7 and doc["counts"][1] == 1

    def test_group1_basis_string(self):
        groups, _ = group_terms(h2_4qubit())
        cv = CountsVector((1,) * 16, 16)
        doc = counts_to_dict(cv, groups[1].basis, bit_order="q0_leftmost")
        assert doc["group_basis"] == "XZXZ"

    def test_bit_reversal_involution(self):
        perm = bit_reversal_permutation(4)
        assert np.array_equal(perm[perm], np.arange(16))

    def test_bad_tags(self):
        cv = CountsVector((1, 1), 2)
        with pytest.raises(ValueError):
            counts_to_dict(cv, ("Z",), bit_order="mystery")
        with pytest.raises(ValueError):
            counts_from_dict({"n_qubits": 1, "shots": 2, "group_basis": "Z",
                              "bit_order": "mystery", "counts": [1, 1]})


class TestNoiseModel:
    def test_probability_validation(self):
        with pytest.raises(ValueError):
            NoiseModel(p1=1.5)
        with pytest.raises(ValueError):
            NoiseModel(readout=(0.2, -0.1))

    def test_per_qubit_readout(self):
        nm = NoiseModel(readout=((0.1, 0.0), (0.0, 0.2)))
        p01, p10 = nm.readout_probs(2)
        assert np.allclose(p01, [0.1, 0.0]) and np.allclose(p10, [0.0, 0.2])
        with pytest.raises(ValueError):
            nm.readout_probs(3)

    def test_dict_round_trip(self):
        nm = NoiseModel(gate_enabled=True, readout_enabled=True, p2=0.02)
        assert NoiseModel.from_dict(nm.to_dict()) == nm
        bare = NoiseModel.from_dict({"gate_errors": True, "readout_errors": True})
        assert bare.p1 == 0.001 and bare.p2 == 0.005 and bare.readout == (0.02, 0.02)

    def test_describe(self):
        assert NoiseModel.ideal().describe() == "ideal"
        assert "gate" in NoiseModel(gate_enabled=True).describe()
