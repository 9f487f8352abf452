import math

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from gaplab.circuits import (
    AcceptOperator,
    GateOp,
    PromiseParams,
    VerifierCircuit,
    accept_operator,
    accept_probability,
    apply_circuit,
    basis_input,
    circuit_unitary,
    classical_witness_extend,
    damped_accept_probabilities,
    distinct_prob_transform,
    flag_qubit_transform,
    flag_transform_value,
    gate,
    gate_embedding,
    min_reject_exponent,
    read_circuit,
    schedule_covers,
    toffoli,
    uqcma_query_schedule,
    write_circuit,
)
from gaplab.random_instances import (
    random_circuit,
    random_clifford_t_circuit,
    random_state,
)


def test_gate_rejects_nonunitary():
    with pytest.raises(ValueError, match="not unitary"):
        GateOp("bad", np.array([[1, 0], [0, 2]], dtype=complex), (0,))


def test_gate_rejects_repeated_targets():
    with pytest.raises(ValueError, match="repeated targets"):
        gate("CNOT", 1, 1)


def test_circuit_rejects_out_of_range_targets():
    with pytest.raises(ValueError, match="outside register"):
        VerifierCircuit(m=1, w=0, gates=(gate("X", 3),), decision_qubit=0)


def test_circuit_rejects_above_qubit_cap():
    with pytest.raises(ValueError, match="cap"):
        VerifierCircuit(m=15, w=0, gates=(), decision_qubit=0)


def test_toffoli_decomposition_is_exact():
    circ = VerifierCircuit(m=3, w=0, gates=tuple(toffoli(0, 1, 2)), decision_qubit=2)
    ccx = np.eye(8, dtype=complex)
    ccx[6, 6] = ccx[7, 7] = 0
    ccx[6, 7] = ccx[7, 6] = 1
    assert np.max(np.abs(circuit_unitary(circ) - ccx)) < 1e-12


def test_apply_empty_circuit_is_identity():
    circ = VerifierCircuit(m=2, w=1, gates=(), decision_qubit=0)
    state = random_state(np.random.default_rng(0), circ.dim)
    assert np.allclose(apply_circuit(circ, state), state)


def test_apply_x_flips_most_significant_qubit():
    circ = VerifierCircuit(m=3, w=0, gates=(gate("X", 0),), decision_qubit=0)
    out = apply_circuit(circ, basis_input(circ, 0))
    expected = np.zeros(8)
    expected[4] = 1.0  # |100>
    assert np.allclose(out, expected)


def test_apply_circuit_matches_dense_product_oracle():
    rng = np.random.default_rng(42)
    circ = random_circuit(rng, m=2, w=1, n_gates=5)
    u = np.eye(circ.dim, dtype=complex)
    for g in circ.gates:
        u = gate_embedding(g, circ.n_qubits) @ u
    state = random_state(rng, circ.dim)
    assert np.max(np.abs(apply_circuit(circ, state) - u @ state)) <= 1e-10


def test_apply_circuit_rejects_dimension_mismatch():
    circ = VerifierCircuit(m=1, w=1, gates=(), decision_qubit=0)
    with pytest.raises(ValueError, match="dimension"):
        apply_circuit(circ, np.ones(8) / math.sqrt(8))


@settings(max_examples=25, deadline=None)
@given(st.integers(min_value=0, max_value=10**6))
def test_apply_circuit_preserves_norm(seed):
    rng = np.random.default_rng(seed)
    circ = random_circuit(rng, m=2, w=1, n_gates=4)
    out = apply_circuit(circ, random_state(rng, circ.dim))
    assert abs(np.linalg.norm(out) - 1.0) <= 1e-10


class TestAcceptOperator:
    def test_x_on_decision_accepts_always(self):
        circ = VerifierCircuit(m=1, w=1, gates=(gate("X", 0),), decision_qubit=0)
        q = accept_operator(circ)
        assert np.allclose(q.q_matrix, np.eye(2))

    def test_identity_circuit_rejects_always(self):
        circ = VerifierCircuit(m=1, w=1, gates=(), decision_qubit=0)
        assert np.allclose(accept_operator(circ).q_matrix, 0.0)

    def test_cnot_from_witness_gives_diagonal_01(self):
        circ = VerifierCircuit(m=1, w=1, gates=(gate("CNOT", 1, 0),), decision_qubit=0)
        q = accept_operator(circ)
        assert np.max(np.abs(q.q_matrix - np.diag([0.0, 1.0]))) <= 1e-12

    def test_sandwich_matches_simulation(self):
        rng = np.random.default_rng(7)
        circ = random_circuit(rng, m=2, w=2, n_gates=5)
        q = accept_operator(circ)
        for _ in range(5):
            v = random_state(rng, 4)
            val = q.expectation(v)
            assert -1e-10 <= val <= 1 + 1e-10
            assert abs(val - accept_probability(circ, v)) <= 1e-10

    def test_eigen_oracle_equivalence(self):
        rng = np.random.default_rng(8)
        circ = random_circuit(rng, m=1, w=2, n_gates=6)
        q = accept_operator(circ)
        for i in range(q.dim):
            vec = q.eigenvectors[:, i]
            assert abs(q.eigenvalues[i] - accept_probability(circ, vec)) <= 1e-9

    def test_spectrum_in_unit_interval(self):
        rng = np.random.default_rng(9)
        for seed in range(5):
            circ = random_circuit(rng, m=2, w=1, n_gates=4)
            vals = accept_operator(circ).eigenvalues
            assert vals[0] <= 1 + 1e-10 and vals[-1] >= -1e-10
            assert np.all(np.diff(vals) <= 1e-15)  # nonincreasing

    def test_cap_violation_reports_size(self):
        with pytest.raises(ValueError, match="15"):
            VerifierCircuit(m=5, w=10, gates=(), decision_qubit=0)


class TestClassicalWitnessExtend:
    def test_diagonal_preserved_entrywise(self):
        circ = VerifierCircuit(m=1, w=1, gates=(gate("CNOT", 1, 0),), decision_qubit=0)
        q0 = accept_operator(circ)
        ext = classical_witness_extend(circ)
        qe = accept_operator(ext)
        assert np.max(np.abs(np.diag(qe.q_matrix) - np.diag(q0.q_matrix))) <= 1e-12

    def test_hadamard_verifier_diagonalized(self):
        circ = VerifierCircuit(
            m=1,
            w=1,
            gates=(gate("H", 1), gate("CNOT", 1, 0), gate("H", 1)),
            decision_qubit=0,
        )
        ext = classical_witness_extend(circ)
        qe = accept_operator(ext)
        off = qe.q_matrix - np.diag(np.diag(qe.q_matrix))
        assert np.max(np.abs(off)) <= 1e-10
        for x in range(2):
            basis = np.zeros(2)
            basis[x] = 1.0
            assert abs(qe.q_matrix[x, x].real - accept_probability(circ, basis)) <= 1e-10

    def test_basis_probabilities_unchanged_random(self):
        rng = np.random.default_rng(11)
        for _ in range(3):
            circ = random_circuit(rng, m=1, w=2, n_gates=4)
            ext = classical_witness_extend(circ)
            qe = accept_operator(ext)
            probs = [
                accept_probability(circ, np.eye(4)[x]) for x in range(4)
            ]
            assert np.max(np.abs(np.real(np.diag(qe.q_matrix)) - probs)) <= 1e-10
            assert qe.eigenvalues[0] <= max(probs) + 1e-10


class TestFlagQubitTransform:
    def _base(self):
        # accepts iff witness = 0: spectrum {1, 0}
        return VerifierCircuit(
            m=1, w=1, gates=(gate("CNOT", 1, 0), gate("X", 0)), decision_qubit=0
        )

    def test_example_spectrum(self):
        ext = classical_witness_extend(self._base())
        params = PromiseParams(c=1.0, s=0.0, w=1)
        new = flag_qubit_transform(ext, params, 4)
        vals = np.sort(accept_operator(new).eigenvalues)
        assert np.max(np.abs(vals - np.sort([1.0, 0.25, 0.0, 0.0]))) <= 1e-10

    def test_reject_always_gains_flag_gap(self):
        # Q = 0: the flag eigenvalue s + (c-s)/poly becomes the unique top
        # eigenvalue, so the realized gap equals it exactly.
        circ = VerifierCircuit(m=1, w=1, gates=(), decision_qubit=0)
        ext = classical_witness_extend(circ)
        c, s, poly = 0.8, 0.2, 5
        new = flag_qubit_transform(ext, PromiseParams(c=c, s=s, w=1), poly)
        vals = accept_operator(new).eigenvalues
        assert abs((vals[0] - vals[1]) - (s + (c - s) / poly)) <= 1e-10
        assert vals[0] - vals[1] >= (c - s) / poly - 1e-10

    def test_unique_witness_keeps_yes_side_gap(self):
        # lambda_1 = 1 >= c with lambda_2 forced up to the flag eigenvalue:
        # the YES-side gap is at least (c-s)(1 - 1/poly)
        ext = classical_witness_extend(self._base())
        c, s, poly = 0.8, 0.2, 5
        new = flag_qubit_transform(ext, PromiseParams(c=c, s=s, w=1), poly)
        vals = accept_operator(new).eigenvalues
        assert vals[0] - vals[1] >= (c - s) * (1 - 1 / poly) - 1e-10

    def test_large_poly_factor_formula(self):
        params = PromiseParams(c=0.75, s=0.25, w=1)
        val = flag_transform_value(params, 10**6)
        assert abs(val - (0.25 + 0.5e-6)) <= 1e-12

    def test_small_poly_factor_rejected(self):
        ext = classical_witness_extend(self._base())
        with pytest.raises(ValueError, match="poly_factor"):
            flag_qubit_transform(ext, PromiseParams(c=1.0, s=0.0, w=1), 1)

    def test_spectrum_union_random_circuits(self):
        rng = np.random.default_rng(13)
        for _ in range(3):
            circ = random_clifford_t_circuit(rng, m=1, w=2, n_gates=4)
            ext = classical_witness_extend(circ)
            q0 = accept_operator(ext)
            params = PromiseParams(c=0.9, s=0.1, w=2)
            new = flag_qubit_transform(ext, params, 3)
            got = np.sort(accept_operator(new).eigenvalues)
            want = np.sort(
                np.concatenate(
                    [
                        q0.eigenvalues,
                        [flag_transform_value(params, 3)],
                        np.zeros(2**ext.w - 1),
                    ]
                )
            )
            assert np.max(np.abs(got - want)) <= 1e-10

    def test_requires_classical_witness_circuit(self):
        rng = np.random.default_rng(14)
        circ = random_circuit(rng, m=1, w=1, n_gates=3)
        with pytest.raises(ValueError, match="classical-witness"):
            flag_qubit_transform(circ, PromiseParams(c=0.9, s=0.1, w=1), 3)


class TestDistinctProbTransform:
    def _all_ones(self, w):
        return VerifierCircuit(m=1, w=w, gates=(gate("X", 0),), decision_qubit=0)

    def test_unit_probability_example(self):
        ext = classical_witness_extend(self._all_ones(2))
        params = PromiseParams(c=1.0, s=0.0, w=2)
        new = distinct_prob_transform(ext, 8, params)
        probs = np.real(np.diag(accept_operator(new).q_matrix))
        expected = np.array([1.0, 1 - 1 / 256, 1 - 2 / 256, 1 - 3 / 256])
        assert np.max(np.abs(probs - expected)) <= 1e-12
        assert np.max(np.abs(np.diff(np.sort(probs)) - 1 / 256)) <= 1e-12
        formula = damped_accept_probabilities(ext, 8)
        assert np.max(np.abs(probs - formula)) <= 1e-12

    def test_zero_witness_unchanged(self):
        ext = classical_witness_extend(self._all_ones(2))
        params = PromiseParams(c=1.0, s=0.0, w=2)
        new = distinct_prob_transform(ext, 8, params)
        zero = np.zeros(4)
        zero[0] = 1.0
        assert abs(accept_probability(new, zero) - 1.0) <= 1e-12

    def test_pairwise_distinct_random_dyadic(self):
        rng = np.random.default_rng(17)
        found = 0
        while found < 20:
            w = int(rng.integers(2, 5))
            circ = random_clifford_t_circuit(rng, m=1, w=w, n_gates=5)
            ext = classical_witness_extend(circ)
            base = np.real(np.diag(accept_operator(ext).q_matrix))
            if np.any(base < 1e-9):  # zero rows stay zero and cannot separate
                continue
            params = PromiseParams(c=1.0, s=0.0, w=w)
            exponent = min_reject_exponent(ext, params)
            probs = damped_accept_probabilities(ext, exponent)
            diffs = np.abs(probs[:, None] - probs[None, :])
            off = diffs[~np.eye(len(probs), dtype=bool)]
            assert np.min(off) > 0.0
            found += 1

    def test_simulation_matches_formula_on_nontrivial_circuit(self):
        rng = np.random.default_rng(19)
        circ = random_clifford_t_circuit(rng, m=1, w=2, n_gates=3)
        ext = classical_witness_extend(circ)
        params = PromiseParams(c=1.0, s=0.5, w=2)
        exponent = min_reject_exponent(ext, params)
        new = distinct_prob_transform(ext, exponent, params)
        probs = np.real(np.diag(accept_operator(new).q_matrix))
        formula = damped_accept_probabilities(ext, exponent)
        assert np.max(np.abs(probs - formula)) <= 1e-12

    def test_low_exponent_rejected_with_minimum(self):
        ext = classical_witness_extend(self._all_ones(2))
        params = PromiseParams(c=1.0, s=0.0, w=2)
        required = min_reject_exponent(ext, params)
        with pytest.raises(ValueError, match=str(required)):
            distinct_prob_transform(ext, required - 1, params)


class TestQuerySchedule:
    def test_example_ladder(self):
        schedule = uqcma_query_schedule(0.5, 0.5)
        # j = -1 leads; the j = 0 rung is (0.75, 0.5); top rung is j = 8
        assert schedule[1] == (0.75, 0.5)
        assert len(schedule) == 10
        assert schedule[0] == (0.5, 0.25)

    def test_wide_gap_ladder(self):
        schedule = uqcma_query_schedule(0.9, 1.0)
        assert len(schedule) == 22  # j from -1 to floor(2/0.1) = 20
        c0, s0 = schedule[1]
        assert abs(c0 - 1.4) <= 1e-12 and abs(s0 - 0.9) <= 1e-12

    def test_consecutive_difference_is_half_gap(self):
        schedule = uqcma_query_schedule(0.6, 0.2)
        for (c1, s1), (c2, s2) in zip(schedule, schedule[1:]):
            assert abs(c2 - c1 - 0.1) <= 1e-12
            assert abs(s2 - s1 - 0.1) <= 1e-12
            assert abs(c1 - s1 - 0.1) <= 1e-12

    def test_zero_gap_rejected(self):
        with pytest.raises(ValueError, match="unbounded"):
            uqcma_query_schedule(0.5, 0.0)

    @settings(max_examples=100, deadline=None)
    @given(
        st.floats(min_value=0.05, max_value=0.9),
        st.floats(min_value=0.02, max_value=1.0),
        st.floats(min_value=0.0, max_value=1.0),
        st.floats(min_value=0.0, max_value=1.0),
    )
    def test_coverage_property(self, c, g1, u1, u2):
        schedule = uqcma_query_schedule(c, g1)
        lam1 = c + u1 * (1.0 - c)
        assume(lam1 - g1 >= 0.0)  # otherwise no lam2 >= 0 satisfies the promise
        lam2 = u2 * (lam1 - g1)
        assert schedule_covers(schedule, lam1, lam2)


def test_circuit_file_round_trip(tmp_path):
    rng = np.random.default_rng(23)
    circ = random_circuit(rng, m=2, w=1, n_gates=4)
    path = tmp_path / "round.circuit"
    write_circuit(path, circ)
    back = read_circuit(path)
    assert back.m == circ.m and back.w == circ.w
    assert back.decision_qubit == circ.decision_qubit
    state = random_state(rng, circ.dim)
    assert np.max(np.abs(apply_circuit(back, state) - apply_circuit(circ, state))) <= 1e-12


def test_circuit_file_builtin_labels(tmp_path):
    circ = VerifierCircuit(
        m=1, w=1, gates=(gate("H", 0), gate("CNOT", 1, 0)), decision_qubit=0
    )
    path = tmp_path / "builtin.circuit"
    write_circuit(path, circ)
    text = path.read_text()
    assert "matrix=" not in text
    back = read_circuit(path)
    assert [g.label for g in back.gates] == ["H", "CNOT"]


@pytest.mark.parametrize(
    "line, fragment",
    [
        ("m=1 w=1 decision=0\nGATE X\n", "line 2"),
        ("m=1 w=1 decision=0\nGATE X targets=a\n", "line 2"),
        ("m=1 w=oops decision=0\n", "line 1"),
        ("m=1 decision=0\n", "missing"),
        ("m=1 w=1 decision=0\nGATE NOSUCH targets=0\n", "line 2"),
    ],
)
def test_circuit_file_malformed_lines(tmp_path, line, fragment):
    path = tmp_path / "bad.circuit"
    path.write_text(line)
    with pytest.raises(ValueError, match=fragment):
        read_circuit(path)


def test_promise_params_validation():
    with pytest.raises(ValueError, match="c > s"):
        PromiseParams(c=0.5, s=0.5)
    with pytest.raises(ValueError, match="g1"):
        PromiseParams(c=0.9, s=0.1, g1=1.5)
    with pytest.raises(ValueError):
        AcceptOperator.from_matrix(np.array([[2.0]], dtype=complex))
