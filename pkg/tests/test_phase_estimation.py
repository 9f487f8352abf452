import csv
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gaplab.circuits import GateOp, VerifierCircuit, gate
from gaplab.linalg import SparseHermitian
from gaplab.phase_estimation import (
    PhaseEstPlan,
    choose_time,
    convex_energy_bound,
    evolution_unitary,
    gs_description_verify,
    gs_energy_slack,
    min_accept_gap,
    one_bit_pe_accept,
    pe_gap_bound,
    write_accept_table,
    yes_case_accept_floor,
)
from gaplab.random_instances import haar_unitary, random_state


def product_instance(rng, ground_energy):
    """2-qubit Hamiltonian diagonal in a random product basis plus the exact
    ground-state preparation circuit."""
    u1, u2 = haar_unitary(rng, 2), haar_unitary(rng, 2)
    basis = np.kron(u1, u2)
    diag = np.array([ground_energy, 1.0, 1.5, 2.0])
    h = SparseHermitian(basis @ np.diag(diag) @ basis.conj().T)
    prep = VerifierCircuit(
        m=2, w=0, gates=(GateOp("p0", u1, (0,)), GateOp("p1", u2, (1,))), decision_qubit=0
    )
    return h, prep, diag


class TestChooseTime:
    def test_diagonal_example(self):
        h = SparseHermitian(np.diag([1.0, -1.0]).astype(complex))
        plan = choose_time(h)
        assert plan.t == pytest.approx(math.pi / 2)
        assert plan.norm_bound == pytest.approx(1.0)

    def test_zero_matrix_rejected(self):
        with pytest.raises(ValueError, match="zero matrix"):
            choose_time(SparseHermitian(np.zeros((2, 2)), tol=1e-12))

    def test_bound_dominates_exact_norm(self):
        rng = np.random.default_rng(0)
        mat = np.zeros((16, 16), dtype=complex)
        for i in range(16):
            mat[i, i] = rng.uniform(-1, 1)
            j = (i + 1) % 16
            val = rng.uniform(-1, 1)
            mat[i, j] += val
            mat[j, i] += val
        h = SparseHermitian((mat + mat.conj().T) / 2)
        assert h.row_sparsity <= 3
        assert h.gershgorin_bound() >= h.norm() - 1e-10

    def test_plan_validation(self):
        with pytest.raises(ValueError, match="exceeds"):
            PhaseEstPlan(t=2.0, norm_bound=1.0)


class TestOneBitAccept:
    def test_zero_energy_eigenstate_accepts(self):
        h = SparseHermitian(np.diag([2.0, 0.0]).astype(complex))
        state = np.array([0.0, 1.0], dtype=complex)
        assert one_bit_pe_accept(h, math.pi / 2, state) == pytest.approx(1.0)

    def test_pi_phase_eigenstate_rejects(self):
        h = SparseHermitian(np.diag([2.0, 0.0]).astype(complex))
        state = np.array([1.0, 0.0], dtype=complex)
        assert one_bit_pe_accept(h, math.pi / 2, state) == pytest.approx(0.0, abs=1e-12)

    def test_circuit_matches_closed_form(self):
        rng = np.random.default_rng(1)
        basis = haar_unitary(rng, 4)
        h = SparseHermitian((basis * rng.random(4)) @ basis.conj().T)
        t = choose_time(h).t
        for _ in range(5):
            state = random_state(rng, 4)
            pc = one_bit_pe_accept(h, t, state, mode="circuit")
            pf = one_bit_pe_accept(h, t, state, mode="closed-form")
            assert abs(pc - pf) <= 1e-10

    def test_perturbed_evolution_shifts_probability_by_norm(self):
        rng = np.random.default_rng(2)
        basis = haar_unitary(rng, 4)
        h = SparseHermitian((basis * rng.random(4)) @ basis.conj().T)
        t = choose_time(h).t
        eps = 1e-3
        noise = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
        noise = (noise + noise.conj().T) / 2
        noise *= eps / np.linalg.norm(noise, 2)
        perturbed = evolution_unitary(h, t) @ (
            np.eye(4) + 1j * noise - noise @ noise / 2
        )
        state = random_state(rng, 4)
        ideal = one_bit_pe_accept(h, t, state, mode="circuit")
        shifted = one_bit_pe_accept(h, t, state, mode="circuit", unitary=perturbed)
        assert abs(shifted - ideal) <= eps + 1e-6

    def test_monotone_decreasing_in_energy(self):
        h = SparseHermitian(np.diag(np.linspace(0.0, 1.4, 8)).astype(complex))
        t = 1.0
        probs = []
        for j in range(8):
            state = np.zeros(8, dtype=complex)
            state[j] = 1.0
            probs.append(one_bit_pe_accept(h, t, state))
        assert all(a > b for a, b in zip(probs, probs[1:]))


class TestGapBound:
    def test_degenerate_pair_is_zero(self):
        assert pe_gap_bound(0.4, 0.4, 1.0) == 0.0

    def test_worked_example(self):
        bound = pe_gap_bound(0.0, 1.0, 1.0)
        assert bound == pytest.approx(1.0 / 3.0)
        assert 1.0 - math.cos(1.0) >= bound

    def test_grid_scan(self):
        for e0 in np.linspace(0.0, 1.0, 12):
            for e1 in np.linspace(e0, 1.3, 12):
                for t in np.linspace(0.05, 1.2, 12):
                    if e1 * t >= math.pi / 2:
                        continue
                    assert math.cos(e0 * t) - math.cos(e1 * t) >= pe_gap_bound(
                        e0, e1, t
                    ) - 1e-12

    def test_precondition_rejected(self):
        with pytest.raises(ValueError, match="pi/2"):
            pe_gap_bound(0.0, 2.0, 1.0)


class TestConvexBound:
    def test_all_mass_on_ground(self):
        probs = np.array([1.0, 0.0, 0.0])
        energies = np.array([0.2, 0.5, 1.0])
        t = 1.0
        value = float(np.sum(probs * np.cos(energies * t / 2) ** 2))
        assert convex_energy_bound(probs, energies, 0.2, t) == pytest.approx(value)

    def test_two_point_distribution_tight(self):
        probs = np.array([0.7, 0.3])
        energies = np.array([0.2, 1.1])
        t = 0.9
        value = float(np.sum(probs * np.cos(energies * t / 2) ** 2))
        mean = float(np.dot(probs, energies))
        assert convex_energy_bound(probs, energies, mean, t) == pytest.approx(value)

    def test_degenerate_spectrum_limit(self):
        probs = np.array([0.5, 0.5])
        energies = np.array([0.7, 0.7])
        assert convex_energy_bound(probs, energies, 0.7, 1.0) == pytest.approx(
            math.cos(0.35) ** 2
        )

    @settings(max_examples=100, deadline=None)
    @given(st.lists(st.floats(min_value=0.01, max_value=1.0), min_size=2, max_size=8))
    def test_random_distributions(self, weights):
        probs = np.array(weights) / sum(weights)
        rng = np.random.default_rng(int(sum(weights) * 10**6) % 2**32)
        energies = np.sort(rng.uniform(0.0, 1.4, size=len(probs)))
        t = 1.0
        value = float(np.sum(probs * np.cos(energies * t / 2) ** 2))
        mean = float(np.dot(probs, energies))
        assert value >= convex_energy_bound(probs, energies, mean, t) - 1e-12


class TestMinAcceptGap:
    def test_equal_arguments(self):
        assert min_accept_gap(2.0, 2.0) == pytest.approx(5.0 * 2.0 / 36.0)

    def test_vanishing_gap(self):
        assert min_accept_gap(1e-12, 1.0) <= 1e-23

    def test_rejects_gap_above_norm_bound(self):
        with pytest.raises(ValueError, match="f_n"):
            min_accept_gap(2.0, 1.0)

    def test_two_qubit_instance_measured_gap(self):
        rng = np.random.default_rng(3)
        h, _, diag = product_instance(rng, 0.1)
        f_n = 2.0
        t = 1.0 / f_n
        probs = (1.0 + np.cos(diag * t)) / 2.0
        measured = probs[0] - probs[1]
        assert measured >= min_accept_gap(diag[1] - diag[0], f_n)


class TestGsDescriptionVerify:
    def test_yes_instance_with_exact_ground_witness(self):
        rng = np.random.default_rng(4)
        h, prep, _ = product_instance(rng, 0.1)
        out = gs_description_verify(h, prep, a_val=0.15, b_val=0.5, f_n=2.0)
        assert out.verdict == "YES"
        floor = yes_case_accept_floor(0.15, 0.5, 2.0, 0.5)
        assert out.statistic >= floor

    def test_no_instance_bounded_by_ceiling_for_all_basis_witnesses(self):
        rng = np.random.default_rng(5)
        h, _, _ = product_instance(rng, 0.55)  # E1 = 0.55 >= b
        f_n, b_val = 2.0, 0.5
        t = 1.0 / f_n
        ceiling = (1.0 + math.cos(b_val * t)) / 2.0
        for x in range(4):
            gates = []
            if x & 2:
                gates.append(gate("X", 0))
            if x & 1:
                gates.append(gate("X", 1))
            prep = VerifierCircuit(m=2, w=0, gates=tuple(gates), decision_qubit=0)
            out = gs_description_verify(h, prep, a_val=0.15, b_val=b_val, f_n=f_n)
            assert out.statistic <= ceiling + 1e-12
            assert out.verdict == "NO"

    def test_trivial_accept_branch(self):
        h = SparseHermitian(np.diag([0.1, 0.2, 0.3, 0.4]).astype(complex))
        out = gs_description_verify(h, None, a_val=0.2, b_val=0.5, f_n=1.0)
        assert out.verdict == "YES"

    def test_gapped_variant_requires_empty_witness(self):
        h = SparseHermitian(np.diag([0.1, 0.2, 0.3, 0.4]).astype(complex))
        empty = VerifierCircuit(m=2, w=0, gates=(), decision_qubit=0)
        assert gs_description_verify(h, empty, 0.2, 0.5, 1.0, gapped=True).verdict == "YES"
        nonempty = VerifierCircuit(m=2, w=0, gates=(gate("X", 0),), decision_qubit=0)
        out = gs_description_verify(h, nonempty, 0.2, 0.5, 1.0, gapped=True)
        # falls through to phase estimation instead of the trivial accept
        assert out.thresholds != (0.2, 0.5)

    def test_norm_bound_validated(self):
        h = SparseHermitian(np.diag([0.0, 3.0]).astype(complex))
        with pytest.raises(ValueError, match="below measured"):
            gs_description_verify(h, None, 0.1, 0.5, f_n=1.0)

    def test_low_energy_states_clear_floor(self):
        # every state within the energy slack of the ground state accepts
        # above the promised floor
        rng = np.random.default_rng(6)
        a_val, b_val, f_n = 0.15, 0.5, 2.0
        slack = gs_energy_slack(a_val, b_val, f_n)
        floor = yes_case_accept_floor(a_val, b_val, f_n, 1.0 / f_n)
        for _ in range(3):
            h, _, _ = product_instance(rng, 0.1)
            vals, vecs = h.eigensystem()
            for _ in range(20):
                mix = random_state(rng, 4)
                mix = 0.05 * mix
                psi = vecs[:, 0] + mix
                psi /= np.linalg.norm(psi)
                energy = float(np.real(psi.conj() @ h.matrix @ psi))
                if energy > vals[0] + slack:
                    continue
                prob = one_bit_pe_accept(h, 1.0 / f_n, psi)
                assert prob >= floor - 1e-12


def test_accept_table_csv(tmp_path):
    h = SparseHermitian(np.diag([0.0, 1.0]).astype(complex))
    path = tmp_path / "table.csv"
    write_accept_table(path, h, t=1.0)
    with open(path) as f:
        rows = list(csv.reader(f))
    assert rows[0] == ["witness_index", "accept_prob"]
    assert len(rows) == 3
    assert float(rows[1][1]) == pytest.approx(1.0)
    assert float(rows[2][1]) == pytest.approx((1 + math.cos(1.0)) / 2)
