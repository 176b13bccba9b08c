import math

import numpy as np
import pytest

from wpcvqc import cvqc, qsim
from wpcvqc.cvqc import (HonestProver, always_abort_hook,
                         estimate_test_check_rates, make_echo_hook,
                         make_toy_base_cvqc, run_base_cvqc)
from wpcvqc.qma import diagonal_verifier, eigen_spectrum, make_witness

from conftest import stderr


def witness_state(v, p, superposition=False):
    w = make_witness(eigen_spectrum(v), p, superposition=superposition)
    return qsim.StateVector(w.amplitudes, [("wit", w.dim)])


class TestToyBaseRounds:
    @pytest.mark.parametrize("rounds", [1, 3])
    def test_perfect_witness_check_accepts(self, rng, rounds):
        v = diagonal_verifier([1.0, 0.0])
        verifier, prover = make_toy_base_cvqc(v, rounds=rounds)
        w = witness_state(v, 1.0)
        for r in qsim.spawn_rngs(rng.integers(2 ** 63), 40):
            res = run_base_cvqc(verifier, prover, "toy", w, r, phase="check")
            assert res.verdict

    @pytest.mark.parametrize("rounds", [1, 3])
    def test_test_phase_perfect_completeness(self, rng, rounds):
        v = diagonal_verifier([1.0, 0.3])
        verifier, prover = make_toy_base_cvqc(v, rounds=rounds)
        w = witness_state(v, 0.3)
        for r in qsim.spawn_rngs(rng.integers(2 ** 63), 60):
            res = run_base_cvqc(verifier, prover, "toy", w, r, phase="test")
            assert res.verdict

    @pytest.mark.parametrize("rounds", [1, 3])
    def test_check_rate_matches_acceptance(self, rng, rounds):
        v = diagonal_verifier([1.0, 0.0])
        verifier, prover = make_toy_base_cvqc(v, rounds=rounds)
        w = witness_state(v, 0.7, superposition=True)
        trials = 4000
        wins = sum(run_base_cvqc(verifier, prover, "toy", w, r,
                                 phase="check").verdict
                   for r in qsim.spawn_rngs(rng.integers(2 ** 63), trials))
        assert abs(wins / trials - 0.7) <= 3 * stderr(0.7, trials)

    def test_malformed_nonce_rejected(self, rng):
        v = diagonal_verifier([1.0, 0.0])
        verifier, _ = make_toy_base_cvqc(v, rounds=1)

        def bad_hook(i, q, r):
            return (1, (q[0] + 1) % 4)

        for r in qsim.spawn_rngs(rng.integers(2 ** 63), 20):
            res = run_base_cvqc(verifier, bad_hook, "toy", None, r,
                                phase="test")
            assert not res.verdict


class TestRates:
    def test_honest_perfect(self, rng):
        v = diagonal_verifier([1.0, 0.0])
        verifier, prover = make_toy_base_cvqc(v)
        w = witness_state(v, 1.0)
        (pt, _), (pc, _) = estimate_test_check_rates(
            prover, verifier, "toy", w, 300, rng)
        assert pt == 1.0 and pc == 1.0

    def test_honest_partial(self, rng):
        v = diagonal_verifier([1.0, 0.0])
        verifier, prover = make_toy_base_cvqc(v)
        w = witness_state(v, 0.6, superposition=True)
        trials = 3000
        (pt, _), (pc, se_c) = estimate_test_check_rates(
            prover, verifier, "toy", w, trials, rng)
        assert pt == 1.0
        assert abs(pc - 0.6) <= 3 * stderr(0.6, trials)

    def test_always_abort(self, rng):
        v = diagonal_verifier([1.0, 0.0])
        verifier, _ = make_toy_base_cvqc(v)
        (pt, _), (pc, _) = estimate_test_check_rates(
            always_abort_hook, verifier, "toy", None, 50, rng)
        assert pt == 0.0 and pc == 0.0


class TestDriverContracts:
    def test_query_independence(self, rng):
        v = diagonal_verifier([1.0, 0.0])
        verifier, prover = make_toy_base_cvqc(v, rounds=3)
        w = witness_state(v, 1.0)
        hooks = [prover, make_echo_hook(0), always_abort_hook]
        for seed in range(50):
            queries = []
            for hook in hooks:
                r = qsim.make_rng(seed)
                res = run_base_cvqc(verifier, hook, "toy",
                                    w if hook is prover else None, r,
                                    phase="check")
                queries.append([t["query"] for t in res.transcript])
            q0 = queries[0]
            assert all(q[:len(q0)] == q0[:len(q)] for q in queries)

    def test_transcript_schema(self, rng):
        v = diagonal_verifier([1.0, 0.0])
        verifier, prover = make_toy_base_cvqc(v, rounds=3)
        w = witness_state(v, 1.0)
        res = run_base_cvqc(verifier, prover, "toy", w, rng, phase="check")
        lines = cvqc.transcript_lines(res.transcript).splitlines()
        assert len(lines) == 3
        import json
        doc = json.loads(lines[0])
        assert set(doc) == {"round", "query", "answer_or_commitment", "phase"}

    def test_coherent_answer_matches_product_of_unitaries(self, rng):
        # driver state (before measuring) equals applying the P_i unitaries
        # directly to |psi_empty>
        v = diagonal_verifier([1.0, 0.25])
        verifier, prover = make_toy_base_cvqc(v, rounds=3)
        w = witness_state(v, 0.8, superposition=True)
        st, queries = verifier.check.sample_queries("toy", 8, rng)
        state = prover.initial_state(w)
        for i, q in enumerate(queries):
            mat, targets = prover.round_unitary(i, q)
            if targets:
                state = qsim.apply_unitary(state, mat, targets)
        # direct product computation
        direct = prover.initial_state(w)
        mats = [prover.round_unitary(i, q) for i, q in enumerate(queries)]
        for mat, targets in mats:
            if targets:
                direct = qsim.apply_unitary(direct, mat, targets)
        assert np.allclose(state.amplitudes, direct.amplitudes, atol=1e-9)
        # answer-register statistics match the witness quality
        rho, = (qsim.partial_trace(state, ["a2"]),)
        share = queries[2][1]
        expected_one = 0.8 if share == 0 else 0.2
        assert abs(rho.matrix[1, 1].real - expected_one) < 1e-9
