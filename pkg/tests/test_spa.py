import itertools
import json
import math

import numpy as np
import pytest

from wpcvqc import qsim, spa, tcf
from wpcvqc.spa import (K3, K4, PATH3, Graph, best_classical_commitment,
                        coloring_basis_distance, honest_commit_hook,
                        make_witness_state, parse_graph, perm_apply,
                        spa_extract, spa_parallel_repeat, spa_run,
                        spa_sequential_repeat, spa_soundness_probe,
                        uniform_coloring_amplitudes, unique_permutation,
                        w_labels)


def recovery_keypair(rng, inst="ideal", params=None):
    if inst == "ideal":
        return tcf.setup(tcf.TcfMode.RECOVERY, "ideal", rng,
                         domain_bits=2, r_bits=2)
    return tcf.setup(tcf.TcfMode.RECOVERY, "lattice", rng, domain_bits=2,
                     params=params)


class TestGraph:
    def test_validation(self):
        with pytest.raises(ValueError):
            Graph(2, ((0, 0),))
        with pytest.raises(ValueError):
            Graph(2, ((0, 5),))
        with pytest.raises(ValueError):
            Graph(2, ())

    def test_colorings(self):
        assert len(K3.valid_colorings()) == 6
        assert len(PATH3.valid_colorings()) == 12
        assert len(K4.valid_colorings()) == 0

    def test_edge_list_round_trip(self):
        text = K3.to_edge_list()
        g = parse_graph(text)
        assert g.edges == K3.edges


class TestUniquePermutation:
    def test_exhaustive_bijection(self):
        # for every valid witness pair and distinct opened colors there is
        # exactly one consistent permutation
        for w_i, w_j in itertools.permutations(range(3), 2):
            for c_i, c_j in itertools.permutations(range(3), 2):
                matches = [k for k, p in enumerate(spa.PERMS)
                           if p[w_i] == c_i and p[w_j] == c_j]
                assert len(matches) == 1
                assert unique_permutation(w_i, w_j, c_i, c_j) == matches[0]

    def test_degenerate_cases(self):
        assert unique_permutation(0, 0, 1, 2) is None
        assert unique_permutation(0, 1, 2, 2) is None


class TestHonestRuns:
    def test_single_coloring_exact(self, rng):
        kp = recovery_keypair(rng)
        res = spa_run(K3, {(0, 1, 2): 1.0}, kp, rng)
        assert res.verdict == "Accept"
        assert res.leftover_distance < 1e-9

    def test_k3_uniform_all_edges(self, rng):
        amps = uniform_coloring_amplitudes(K3)
        for edge in K3.edges:
            kp = recovery_keypair(rng)
            res = spa_run(K3, amps, kp, rng, forced_edge=edge)
            assert res.verdict == "Accept"
            assert res.leftover_distance < 1e-6

    def test_path_graph_superposition(self, rng):
        amps = uniform_coloring_amplitudes(PATH3)
        for edge in PATH3.edges:
            kp = recovery_keypair(rng)
            res = spa_run(PATH3, amps, kp, rng, forced_edge=edge)
            assert res.verdict == "Accept"
            assert res.leftover_distance < 1e-6

    def test_biased_superposition(self, rng):
        cols = K3.valid_colorings()
        amps = {c: math.sqrt(w) for c, w in zip(cols, [0.4, 0.3, 0.1, 0.1, 0.05, 0.05])}
        kp = recovery_keypair(rng)
        res = spa_run(K3, amps, kp, rng)
        assert res.verdict == "Accept"
        assert res.leftover_distance < 1e-6

    def test_transcript_json(self, rng):
        kp = recovery_keypair(rng)
        res = spa_run(K3, {(0, 1, 2): 1.0}, kp, rng)
        doc = json.loads(res.transcript.to_json())
        assert doc["verdict"] == "Accept"
        assert len(doc["commitments"]) == 3
        assert tuple(doc["challenge_edge"]) in K3.edges

    def test_invalid_support_rejected(self):
        with pytest.raises(ValueError):
            make_witness_state(K3, {(0, 0, 1): 1.0})

    def test_lattice_micro_exact_params(self, rng):
        amps = uniform_coloring_amplitudes(K3)
        kp = recovery_keypair(rng, "lattice", tcf.QUANTUM_MICRO_EXACT)
        res = spa_run(K3, amps, kp, rng)
        assert res.verdict == "Accept"
        bound = tcf.recovery_trace_bound(tcf.QUANTUM_MICRO_EXACT) * 2 * (3 - 2)
        assert res.leftover_distance <= bound + 1e-6

    def test_lattice_micro_noisy_params(self, rng):
        amps = uniform_coloring_amplitudes(K3)
        kp = recovery_keypair(rng, "lattice", tcf.QUANTUM_MICRO)
        res = spa_run(K3, amps, kp, rng)
        assert res.verdict == "Accept"
        # one unchallenged vertex, two committed bits
        bound = tcf.recovery_trace_bound(tcf.QUANTUM_MICRO, n_bits=2)
        assert res.leftover_distance <= bound + 1e-6


class TestSoundness:
    def test_k4_best_strategy(self, rng):
        kp = tcf.setup(tcf.TcfMode.INJECTIVE, "ideal", rng, domain_bits=2,
                       r_bits=2)
        ys, assignment, bad = best_classical_commitment(K4, kp, rng)
        assert bad >= 1  # K4 is not 3-colorable
        rate = spa_soundness_probe(K4, kp, ys)
        assert rate <= 1 - 1 / 6 + 1e-12

    def test_monochromatic_edge(self, rng):
        g = Graph(2, ((0, 1),))
        kp = tcf.setup(tcf.TcfMode.INJECTIVE, "ideal", rng, domain_bits=2,
                       r_bits=2)
        ys = []
        for _ in range(2):
            bits = [tcf.evaluate_bit(kp.pp, b, int(rng.integers(0, 4)))
                    for b in (0, 0)]  # color 0 on both vertices
            ys.append(tuple(bits))
        assert spa_soundness_probe(g, kp, ys) == 0.0

    def test_out_of_range_color(self, rng):
        kp = tcf.setup(tcf.TcfMode.INJECTIVE, "ideal", rng, domain_bits=2,
                       r_bits=2)
        # proper-ish assignment but vertex 0 commits the invalid color 3
        assignment = [3, 0, 1, 2]
        ys = []
        for c in assignment:
            bits = [tcf.evaluate_bit(kp.pp, (c >> (1 - j)) & 1,
                                     int(rng.integers(0, 4))) for j in (0, 1)]
            ys.append(tuple(bits))
        rate = spa_soundness_probe(K4, kp, ys)
        degree = 3
        assert rate <= 1 - degree / 6 + 1e-12

    def test_repetition_acceptance_decay(self, rng):
        lam = math.ceil(len(K4.edges) * math.log(len(K4.edges)))
        kp = tcf.setup(tcf.TcfMode.INJECTIVE, "ideal", rng, domain_bits=2,
                       r_bits=2)
        ys, _, _ = best_classical_commitment(K4, kp, rng)
        per_round = spa_soundness_probe(K4, kp, ys)
        trials = 3000
        wins = 0
        for r in qsim.spawn_rngs(rng.integers(2 ** 63), trials):
            wins += all(r.random() < per_round for _ in range(lam))
        target = per_round ** lam
        sigma = math.sqrt(max(target * (1 - target), 1 / trials) / trials)
        assert wins / trials <= (1 - 1 / 6) ** lam + 3 * sigma


class TestExtraction:
    def test_honest_prover_k3(self, rng):
        coloring = spa_extract(honest_commit_hook(K3, {(0, 1, 2): 1.0}),
                               K3, rng)
        assert coloring is not None
        assert K3.is_valid_coloring(coloring)
        # some permutation of the committed witness
        assert sorted(coloring) == [0, 1, 2]

    def test_honest_prover_path(self, rng):
        amps = uniform_coloring_amplitudes(PATH3)
        for r in qsim.spawn_rngs(rng.integers(2 ** 63), 10):
            coloring = spa_extract(honest_commit_hook(PATH3, amps), PATH3, r)
            assert coloring is not None and PATH3.is_valid_coloring(coloring)

    def test_k4_always_fails(self, rng):
        kp = tcf.setup(tcf.TcfMode.INJECTIVE, "ideal", rng, domain_bits=2,
                       r_bits=2)

        def hook(pp, r):
            ys, _, _ = best_classical_commitment(K4, kp, r)
            return ys

        assert spa_extract(hook, K4, rng, keypair=kp) is None


class TestRepetition:
    def test_sequential_identity_with_one(self, rng):
        amps = uniform_coloring_amplitudes(K3)
        verdict, dist, transcripts = spa_sequential_repeat(K3, amps, 1, rng)
        assert verdict == "Accept" and len(transcripts) == 1
        assert dist < 1e-6

    def test_sequential_five(self, rng):
        amps = uniform_coloring_amplitudes(K3)
        verdict, dist, transcripts = spa_sequential_repeat(K3, amps, 5, rng)
        assert verdict == "Accept" and len(transcripts) == 5
        assert dist <= 5 * 1e-6

    def test_parallel_three(self, rng):
        amps = uniform_coloring_amplitudes(K3)
        verdict, dist = spa_parallel_repeat(K3, amps, 3, rng)
        assert verdict == "Accept"
        assert dist <= 3e-6

    def test_parallel_sessions_commute(self, rng):
        amps = uniform_coloring_amplitudes(K3)
        seed = int(rng.integers(2 ** 63))
        r1 = qsim.make_rng(seed)
        r2 = qsim.make_rng(seed)
        v1, d1 = spa_parallel_repeat(K3, amps, 2, r1,
                                     forced_edges=[(0, 1), (1, 2)])
        v2, d2 = spa_parallel_repeat(K3, amps, 2, r2,
                                     forced_edges=[(0, 1), (1, 2)])
        assert (v1, round(d1, 12)) == (v2, round(d2, 12))
