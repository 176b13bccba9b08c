import math

import numpy as np
import pytest

from wpcvqc import qma, qsim
from wpcvqc.qma import (diagonal_verifier, eigen_spectrum, haar_verifier,
                        make_witness, mw_accept_probability, mw_amplify,
                        verifier_from_json, verifier_to_json)

from conftest import random_state, stderr


class TestEigenSpectrum:
    def test_diag_two_level(self):
        v = diagonal_verifier([1.0, 0.0])
        spec = eigen_spectrum(v)
        assert np.allclose(spec.eigenvalues(), [1.0, 0.0])
        assert abs(abs(spec.pairs[0][1].amplitudes[0]) - 1) < 1e-9
        assert abs(abs(spec.pairs[1][1].amplitudes[1]) - 1) < 1e-9

    def test_plus_projector_verifier(self):
        # verifier whose acceptance operator is |+><+|
        plus = np.array([1, 1]) / math.sqrt(2)
        u = np.zeros((4, 4), dtype=complex)
        # rotate |+> -> |0>, then flag ancilla on the |0> component
        h = np.array([[1, 1], [1, -1]]) / math.sqrt(2)
        cnot_from_zero = np.array([[0, 1, 0, 0], [1, 0, 0, 0],
                                   [0, 0, 1, 0], [0, 0, 0, 1]], dtype=float)
        u = cnot_from_zero @ np.kron(h, np.eye(2))
        alg = qsim.QuantumAlgorithm(u, np.kron(np.eye(2), np.diag([0.0, 1.0])), [2])
        v = qma.QmaVerifier("plus", alg)
        spec = eigen_spectrum(v)
        assert abs(spec.pairs[0][0] - 1.0) < 1e-9
        assert abs(abs(np.vdot(spec.pairs[0][1].amplitudes, plus)) - 1) < 1e-9

    def test_reconstruction_oracle(self, rng):
        v = haar_verifier(3, rng)
        spec = eigen_spectrum(v)
        recon = sum(p * np.outer(s.amplitudes, s.amplitudes.conj())
                    for p, s in spec.pairs)
        assert np.linalg.norm(recon - v.operator()) < 1e-8

    def test_orthonormal_and_eigen(self, rng):
        v = haar_verifier(2, rng)
        spec = eigen_spectrum(v)
        vecs = np.column_stack([s.amplitudes for _, s in spec.pairs])
        assert np.max(np.abs(vecs.conj().T @ vecs - np.eye(4))) < 1e-8
        op = v.operator()
        for p, s in spec.pairs:
            assert np.linalg.norm(op @ s.amplitudes - p * s.amplitudes) < 1e-8


class TestMakeWitness:
    def test_target_one(self):
        spec = eigen_spectrum(diagonal_verifier([1.0, 0.0]))
        w = make_witness(spec, 1.0)
        assert abs(abs(w.amplitudes[0]) - 1) < 1e-9

    def test_half_superposition(self):
        v = diagonal_verifier([1.0, 0.0])
        spec = eigen_spectrum(v)
        w = make_witness(spec, 0.5, superposition=True)
        assert abs(v.accept_prob(w) - 0.5) < 1e-9

    def test_three_quarters_superposition(self):
        v = diagonal_verifier([1.0, 0.0])
        spec = eigen_spectrum(v)
        w = make_witness(spec, 0.75, superposition=True)
        assert abs(abs(w.amplitudes[0]) - math.sqrt(0.75)) < 1e-9
        assert abs(abs(w.amplitudes[1]) - math.sqrt(0.25)) < 1e-9
        assert abs(v.accept_prob(w) - 0.75) < 1e-9

    def test_no_match_errors(self):
        spec = eigen_spectrum(diagonal_verifier([1.0, 0.0]))
        with pytest.raises(ValueError):
            make_witness(spec, 0.5)

    def test_targets_hit_within_tolerance(self, rng):
        v = haar_verifier(2, rng)
        spec = eigen_spectrum(v)
        for target in [0.3, 0.5, 0.8]:
            w = make_witness(spec, target, superposition=True)
            assert abs(v.accept_prob(w) - target) < 1e-6


class TestMwAmplify:
    def test_eigenvalue_one_always_accepts(self, rng):
        v = diagonal_verifier([1.0, 0.0])
        w = make_witness(eigen_spectrum(v), 1.0)
        for r in qsim.spawn_rngs(rng.integers(2 ** 63), 50):
            verdict, post = mw_amplify(v, 12, w, r)
            assert verdict
            assert qsim.trace_distance_states(post, w) < 1e-6

    def test_eigenvalue_zero_always_rejects(self, rng):
        v = diagonal_verifier([1.0, 0.0])
        w = make_witness(eigen_spectrum(v), 0.0)
        assert not any(mw_amplify(v, 12, w, r)[0]
                       for r in qsim.spawn_rngs(rng.integers(2 ** 63), 50))

    def test_high_eigenvalue_accept_rate(self, rng):
        v = diagonal_verifier([0.9, 0.1])
        w = make_witness(eigen_spectrum(v), 0.9)
        trials = 10_000
        hits = sum(mw_amplify(v, 10, w, r)[0]
                   for r in qsim.spawn_rngs(rng.integers(2 ** 63), trials))
        rate = hits / trials
        law = mw_accept_probability(0.9, 10, v.threshold_a, v.threshold_b)
        assert rate >= 1 - 2 ** -10 - 3 * stderr(law, trials)
        assert abs(rate - law) <= 3 * stderr(law, trials) + 1e-9

    def test_binomial_law_across_eigenvalues(self, rng):
        v = diagonal_verifier([0.8, 0.55, 0.2])
        spec = eigen_spectrum(v)
        trials = 10_000
        for p in [0.8, 0.55, 0.2]:
            w = make_witness(spec, p)
            hits = sum(mw_amplify(v, 4, w, r)[0]
                       for r in qsim.spawn_rngs(rng.integers(2 ** 63), trials))
            law = mw_accept_probability(p, 4, v.threshold_a, v.threshold_b)
            assert abs(hits / trials - law) <= 3 * stderr(law, trials) + 1e-9

    def test_accepting_runs_preserve_eigenstates(self, rng):
        v = diagonal_verifier([0.9, 0.4, 0.1])
        w = make_witness(eigen_spectrum(v), 0.9)
        op = v.operator()
        for r in qsim.spawn_rngs(rng.integers(2 ** 63), 200):
            verdict, post = mw_amplify(v, 6, w, r)
            if verdict:
                resid = op @ post.amplitudes - 0.9 * post.amplitudes
                assert np.linalg.norm(resid) < 1e-6
                assert qsim.trace_distance_states(post, w) < 1e-6


class TestSerialization:
    def test_round_trip(self, rng):
        v = haar_verifier(1, rng)
        text = verifier_to_json(v)
        back = verifier_from_json(text)
        assert np.allclose(back.operator(), v.operator())
        assert back.threshold_a == v.threshold_a

    def test_thresholds_validated(self):
        with pytest.raises(ValueError):
            qma.QmaVerifier("bad",
                            diagonal_verifier([1.0, 0.0]).algorithm,
                            threshold_a=0.5, threshold_b=0.5)
