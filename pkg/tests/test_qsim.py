import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from wpcvqc import qsim
from wpcvqc.qsim import (DensityMatrix, QuantumAlgorithm, StateVector,
                         acceptance_operator, apply_unitary,
                         good_bad_decomposition, measure_projective,
                         trace_distance)

from conftest import random_state

H = np.array([[1, 1], [1, -1]]) / math.sqrt(2)
X = np.array([[0, 1], [1, 0]], dtype=float)


def ket(*amps):
    v = np.array(amps, dtype=complex)
    return StateVector(v / np.linalg.norm(v), [("w", len(amps))])


class TestApplyUnitary:
    def test_identity_keeps_state(self, rng):
        psi = random_state(4, rng)
        out = apply_unitary(psi, np.eye(4), ["w"])
        assert np.allclose(out.amplitudes, psi.amplitudes)

    def test_x_flips_zero(self):
        out = apply_unitary(ket(1, 0), X, ["w"])
        assert np.allclose(out.amplitudes, [0, 1])

    def test_hadamard_involution(self):
        out = apply_unitary(apply_unitary(ket(1, 0), H, ["w"]), H, ["w"])
        assert abs(out.amplitudes[0] - 1) < 1e-12

    def test_rejects_non_unitary(self):
        with pytest.raises(ValueError):
            apply_unitary(ket(1, 0), np.array([[1, 0], [0, 2.0]]), ["w"])

    def test_dimension_mismatch(self):
        with pytest.raises(qsim.DimensionError):
            apply_unitary(ket(1, 0), np.eye(4), ["w"])

    def test_targets_within_layout(self, rng):
        psi = qsim.product_state([("a", np.array([1, 0])),
                                  ("b", np.array([0, 1]))])
        out = apply_unitary(psi, X, ["b"])
        assert out.register_dim("b") == 2
        _, post = qsim.measure_registers(out, ["a", "b"], rng)
        # b flipped back to 0, a untouched
        assert np.allclose(np.abs(post.amplitudes[0]), 1)


class TestMeasureProjective:
    def test_zero_state_deterministic(self, rng):
        p0 = np.diag([1.0, 0.0])
        p1 = np.diag([0.0, 1.0])
        outcome, post = measure_projective(ket(1, 0), [p0, p1], rng)
        assert outcome == 0
        assert np.allclose(post.amplitudes, [1, 0])

    def test_plus_state_frequency(self, rng):
        p0 = np.diag([1.0, 0.0])
        p1 = np.diag([0.0, 1.0])
        plus = ket(1, 1)
        hits = sum(measure_projective(plus, [p0, p1], r)[0] == 0
                   for r in qsim.spawn_rngs(rng.integers(2 ** 63), 10_000))
        assert abs(hits / 10_000 - 0.5) < 0.02

    def test_trivial_resolution(self, rng):
        outcome, post = measure_projective(ket(1, 1), [np.eye(2)], rng)
        assert outcome == 0
        assert abs(abs(post.overlap(ket(1, 1))) - 1) < 1e-12

    def test_rejects_non_resolution(self, rng):
        with pytest.raises(qsim.MeasurementError):
            measure_projective(ket(1, 0), [np.diag([1.0, 0.0])], rng)

    def test_outcome_probabilities_sum(self, rng):
        psi = random_state(6, rng)
        evecs = np.linalg.qr(rng.normal(size=(6, 6))
                             + 1j * rng.normal(size=(6, 6)))[0]
        projs = [np.outer(evecs[:, i], evecs[:, i].conj()) for i in range(6)]
        branches = [qsim.apply_operator_unnormalized(psi, p, ["w"]) for p in projs]
        probs = [float(np.vdot(b, b).real) for b in branches]
        assert abs(sum(probs) - 1.0) < 1e-9
        _, post = measure_projective(psi, projs, rng)
        assert abs(np.linalg.norm(post.amplitudes) - 1.0) < 1e-9


def _alg_measure_one_qubit():
    # measures a single qubit computationally, accepts |1>
    return QuantumAlgorithm(np.eye(4), np.kron(np.diag([0.0, 1.0]), np.eye(2)), [2])


class TestAcceptanceOperator:
    def test_full_space_accept_is_identity(self):
        alg = QuantumAlgorithm(np.eye(4), np.eye(4), [2])
        assert np.allclose(acceptance_operator(alg), np.eye(2))

    def test_projector_on_one(self):
        op = acceptance_operator(_alg_measure_one_qubit())
        assert np.allclose(op, np.diag([0.0, 1.0]), atol=1e-12)

    def test_monte_carlo_agreement(self, rng):
        from wpcvqc.qma import haar_unitary
        u = haar_unitary(8, rng)
        alg = QuantumAlgorithm(u, np.kron(np.eye(4), np.diag([0.0, 1.0])), [2])
        op = acceptance_operator(alg)
        psi = random_state(4, rng)
        exact = qsim.acceptance_probability(op, psi)
        shots = 100_000
        hits = sum(qsim.run_algorithm(alg, psi, r)[0]
                   for r in qsim.spawn_rngs(rng.integers(2 ** 63), shots))
        se = math.sqrt(exact * (1 - exact) / shots)
        assert abs(hits / shots - exact) <= 3 * se + 1e-12

    def test_spectrum_in_unit_interval(self, rng):
        from wpcvqc.qma import haar_unitary
        for seed in range(100):
            r = qsim.make_rng(seed)
            u = haar_unitary(4, r)
            alg = QuantumAlgorithm(u, np.kron(np.eye(2), np.diag([0.0, 1.0])), [2])
            evals = np.linalg.eigvalsh(acceptance_operator(alg))
            assert evals.min() >= -1e-9 and evals.max() <= 1 + 1e-9


def random_density(dim, rng):
    z = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    m = z @ z.conj().T
    return DensityMatrix(m / np.trace(m).real, [("w", dim)])


class TestTraceDistance:
    def test_identical(self, rng):
        rho = random_density(4, rng)
        assert trace_distance(rho, rho) < 1e-12

    def test_orthogonal_pure(self):
        a = ket(1, 0).to_density()
        b = ket(0, 1).to_density()
        assert abs(trace_distance(a, b) - 1.0) < 1e-12

    def test_zero_vs_plus_closed_form(self):
        zero = ket(1, 0)
        plus = ket(1, 1)
        overlap = abs(zero.overlap(plus)) ** 2
        expected = math.sqrt(1 - overlap)
        got = trace_distance(zero.to_density(), plus.to_density())
        assert abs(got - expected) < 1e-9
        assert abs(got - math.sqrt(0.5)) < 1e-9

    def test_layout_mismatch(self, rng):
        with pytest.raises(qsim.DimensionError):
            trace_distance(random_density(2, rng), random_density(3, rng))

    @settings(max_examples=25, deadline=None)
    @given(st.integers(0, 10_000), st.integers(2, 6))
    def test_triangle_and_symmetry(self, seed, dim):
        r = qsim.make_rng(seed)
        a, b, c = (random_density(dim, r) for _ in range(3))
        dab, dbc, dac = (trace_distance(x, y)
                         for x, y in [(a, b), (b, c), (a, c)])
        assert dac <= dab + dbc + 1e-9
        assert abs(dab - trace_distance(b, a)) < 1e-9


class TestGoodBadDecomposition:
    def test_pure_accepted_state(self):
        rho = ket(0, 1).to_density()
        accept = lambda s: abs(s.amplitudes[1]) ** 2
        q_good, _, q_bad, _ = good_bad_decomposition(rho, accept, 0.01)
        assert q_bad == 0.0 and abs(q_good - 1.0) < 1e-12

    def test_two_component_mixture_exact(self):
        rho = DensityMatrix(np.diag([0.99, 0.01]), [("w", 2)])
        accept = lambda s: abs(s.amplitudes[0]) ** 2
        q_good, rho_good, q_bad, rho_bad = good_bad_decomposition(rho, accept, 0.01)
        assert abs(q_bad - 0.01) < 1e-12
        assert q_bad <= math.sqrt(0.01) + 1e-9
        recon = q_good * rho_good.matrix + q_bad * rho_bad.matrix
        assert np.max(np.abs(recon - rho.matrix)) < 1e-9

    def test_maximally_mixed(self):
        rho = DensityMatrix(np.eye(2) / 2, [("w", 2)])
        accept = lambda s: abs(s.amplitudes[0]) ** 2
        _, _, q_bad, _ = good_bad_decomposition(rho, accept, 0.5)
        assert q_bad <= math.sqrt(0.5) + 1e-9

    def test_precondition_enforced(self):
        rho = DensityMatrix(np.diag([0.5, 0.5]), [("w", 2)])
        accept = lambda s: abs(s.amplitudes[0]) ** 2
        with pytest.raises(ValueError):
            good_bad_decomposition(rho, accept, 0.01)

    @settings(max_examples=15, deadline=None)
    @given(st.integers(0, 10_000))
    def test_reconstruction_and_support(self, seed):
        r = qsim.make_rng(seed)
        rho = random_density(4, r)
        op = np.diag([1.0, 0.9, 0.8, 0.7])
        accept = lambda s: qsim.acceptance_probability(op, s)
        overall = float(np.trace(op @ rho.matrix).real)
        gamma = min(1.0, max(1e-6, 1.0 - overall + 1e-9))
        q_good, rho_good, q_bad, rho_bad = good_bad_decomposition(rho, accept, gamma)
        recon = q_good * (rho_good.matrix if rho_good is not None else 0)
        if rho_bad is not None:
            recon = recon + q_bad * rho_bad.matrix
        assert np.max(np.abs(recon - rho.matrix)) < 1e-9
        if rho_good is not None:
            for w, s in rho_good.eigen_ensemble():
                assert accept(s) >= 1 - math.sqrt(gamma) - 1e-9


class TestLayoutPlumbing:
    def test_partial_trace_pure_product(self, rng):
        psi = qsim.product_state([("a", np.array([1, 1])),
                                  ("b", np.array([1, 0, 0]))])
        red = qsim.partial_trace(psi, ["a"])
        assert np.allclose(red.matrix, np.full((2, 2), 0.5))

    def test_partial_trace_density_matches_pure(self, rng):
        psi = random_state(6, rng, [("a", 2), ("b", 3)])
        via_pure = qsim.partial_trace(psi, ["b"])
        via_density = qsim.partial_trace(psi.to_density(), ["b"])
        assert np.max(np.abs(via_pure.matrix - via_density.matrix)) < 1e-10

    def test_measure_value_function(self, rng):
        psi = qsim.product_state([("a", np.array([1, 1])),
                                  ("b", np.array([1, 1]))])
        val, post = qsim.measure_value_function(
            psi, ["a", "b"], lambda v: (v[0] + v[1]) % 2, rng)
        assert val in (0, 1)
        amp = post.tensor()
        for ia in range(2):
            for ib in range(2):
                mass = abs(amp[ia, ib]) ** 2
                if (ia + ib) % 2 != val:
                    assert mass < 1e-18

    def test_project_register(self):
        psi = qsim.product_state([("a", np.array([1, 1])),
                                  ("b", np.array([1, 0]))])
        out = qsim.project_register(psi, "b", 0)
        assert out.labels() == ["a"]
        with pytest.raises(ValueError):
            qsim.project_register(psi, "a", 0)
