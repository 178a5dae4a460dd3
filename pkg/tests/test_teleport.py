import numpy as np
import pytest

from qkeylab.errors import DomainError
from qkeylab import qstate
from qkeylab.qstate import StateVector, fidelity, measure_qubit, new_basis_state
from qkeylab.teleport import (
    BellOutcome,
    bell_measure,
    make_epr,
    teleport_branches,
    teleport_index,
    teleport_state,
)

INV_SQRT2 = 1 / np.sqrt(2)


def random_qubit(rng):
    raw = rng.normal(size=2) + 1j * rng.normal(size=2)
    return StateVector(1, raw / np.linalg.norm(raw))


class TestMakeEpr:
    def test_pair_amplitudes(self):
        paired = make_epr(new_basis_state(2, 0), 0, 1)
        np.testing.assert_allclose(paired.amplitudes, [INV_SQRT2, 0, 0, INV_SQRT2])

    def test_measurements_always_agree(self):
        rng = np.random.default_rng(2)
        paired = make_epr(new_basis_state(2, 0), 0, 1)
        for _ in range(100):
            first, rest = measure_qubit(paired, 0, rng)
            second, _ = measure_qubit(rest, 1, rng)
            assert first.outcome == second.outcome

    def test_same_qubit_rejected(self):
        with pytest.raises(DomainError):
            make_epr(new_basis_state(2, 0), 1, 1)

    def test_occupied_qubits_rejected(self):
        with pytest.raises(DomainError):
            make_epr(new_basis_state(2, 1), 0, 1)

    def test_other_qubits_untouched(self):
        sv = qstate.apply_gate(new_basis_state(3, 0), qstate.x(0))
        paired = make_epr(sv, 1, 2)
        # qubit 0 stays |1>: weight only on odd indices
        idx = np.arange(8)
        assert np.abs(paired.amplitudes[idx & 1 == 0]).max() < 1e-12


class TestBellMeasure:
    def test_outcome_bits_are_binary(self):
        rng = np.random.default_rng(9)
        state = make_epr(new_basis_state(3, 0), 1, 2)
        outcome, _ = bell_measure(state, 0, 1, rng)
        assert outcome.bit_z in (0, 1) and outcome.bit_x in (0, 1)

    def test_deterministic_under_seed(self):
        def sequence(seed):
            rng = np.random.default_rng(seed)
            out = []
            for _ in range(20):
                record, _ = teleport_state(random_qubit(rng), rng)
                out.append((record.outcome.bit_z, record.outcome.bit_x))
            return out

        assert sequence(42) == sequence(42)
        assert sequence(42) != sequence(43)

    def test_outcome_frequencies_uniform(self):
        rng = np.random.default_rng(100)
        counts = {}
        trials = 10_000
        for _ in range(trials):
            record, _ = teleport_state(random_qubit(rng), rng)
            key = (record.outcome.bit_z, record.outcome.bit_x)
            counts[key] = counts.get(key, 0) + 1
        assert sorted(counts) == [(0, 0), (0, 1), (1, 0), (1, 1)]
        for count in counts.values():
            assert abs(count / trials - 0.25) <= 0.02

    def test_invalid_outcome_bits_rejected(self):
        with pytest.raises(DomainError):
            BellOutcome(2, 0)


class TestTeleportState:
    def test_basis_zero(self):
        rng = np.random.default_rng(1)
        record, received = teleport_state(new_basis_state(1, 0), rng)
        assert record.fidelity >= 1 - 1e-9
        assert fidelity(received, new_basis_state(1, 0)) >= 1 - 1e-9

    def test_specific_superposition_all_branches(self):
        # 0.6|0> + 0.8i|1>: every measurement branch must reproduce it exactly.
        state = StateVector(1, np.array([0.6, 0.8j]))
        for branch in teleport_branches(state):
            assert branch.probability == pytest.approx(0.25, abs=1e-12)
            assert fidelity(branch.receiver_after, state) >= 1 - 1e-9

    def test_correction_map_fixed_per_outcome(self):
        rng = np.random.default_rng(3)
        for _ in range(50):
            record, _ = teleport_state(random_qubit(rng), rng)
            expected = tuple(
                name for name, bit in (("X", record.outcome.bit_x), ("Z", record.outcome.bit_z)) if bit
            )
            assert record.corrections_applied == expected

    def test_random_states_full_fidelity(self):
        rng = np.random.default_rng(8)
        worst = 1.0
        for _ in range(200):
            record, _ = teleport_state(random_qubit(rng), rng)
            worst = min(worst, record.fidelity)
        assert worst >= 1 - 1e-9

    def test_receiver_average_is_maximally_mixed(self):
        # No-signalling: before corrections, the outcome-averaged receiver
        # density matrix is I/2 regardless of the payload.
        rng = np.random.default_rng(21)
        for _ in range(10):
            state = random_qubit(rng)
            rho = np.zeros((2, 2), dtype=complex)
            for branch in teleport_branches(state):
                amps = branch.receiver_before.amplitudes
                rho += branch.probability * np.outer(amps, amps.conj())
            np.testing.assert_allclose(rho, np.eye(2) / 2, atol=1e-9)

    def test_multi_qubit_input_rejected(self):
        rng = np.random.default_rng(0)
        with pytest.raises(DomainError):
            teleport_state(new_basis_state(2, 0), rng)


class TestTeleportIndex:
    def test_zero(self):
        rng = np.random.default_rng(4)
        assert teleport_index(0, 4, rng) == 0

    def test_five(self):
        rng = np.random.default_rng(4)
        assert teleport_index(5, 4, rng) == 5

    def test_out_of_range(self):
        rng = np.random.default_rng(4)
        with pytest.raises(DomainError):
            teleport_index(16, 4, rng)
        with pytest.raises(DomainError):
            teleport_index(-1, 4, rng)

    def test_identity_exhaustive_small_widths(self):
        rng = np.random.default_rng(17)
        for width in (1, 2, 3, 5):
            for n in range(1 << width):
                assert teleport_index(n, width, rng) == n

    def test_sink_collects_per_qubit_records(self):
        rng = np.random.default_rng(6)
        sink = []
        teleport_index(9, 6, rng, sink=sink)
        assert len(sink) == 6
        assert all(record.fidelity >= 1 - 1e-9 for record in sink)
