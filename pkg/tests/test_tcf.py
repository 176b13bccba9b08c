import itertools
import math

import numpy as np
import pytest

from wpcvqc import qsim, tcf
from wpcvqc.tcf import (CLASSICAL_MICRO, EXHAUSTIVE_MICRO, QUANTUM_MICRO,
                        QUANTUM_MICRO_EXACT, WIDE_MICRO, DecodeFailure,
                        LweParams, NotInImage, TcfMode, evaluate,
                        evaluate_bit, ext, eval_measure_recover_channel_test,
                        invert_mp, invert_mp_batch, recovery_trace_bound,
                        rand_superposition, setup, trapgen_mp)


class TestGadgetTrapdoor:
    def test_trapdoor_identity(self, rng):
        td = trapgen_mp(WIDE_MICRO, rng)
        q = WIDE_MICRO.q
        t = np.block([[np.eye(2, dtype=np.int64),
                       (-(td.t_inv[:2, 2:])) % q],
                      [np.zeros((18, 2), dtype=np.int64),
                       np.eye(18, dtype=np.int64)]]) % q
        assert np.array_equal((t @ td.t_inv) % q, np.eye(20, dtype=np.int64))

    def test_noiseless_inversion(self, rng):
        td = trapgen_mp(WIDE_MICRO, rng)
        s = rng.integers(0, 257, size=2, dtype=np.int64)
        y = (td.a_matrix @ s) % 257
        s2, e2 = invert_mp(td, y)
        assert np.array_equal(s2, s)
        assert not e2.any()

    def test_random_low_norm_inversion(self, rng):
        td = trapgen_mp(WIDE_MICRO, rng)
        for _ in range(100):
            s = rng.integers(0, 257, size=2, dtype=np.int64)
            e = rng.integers(-1, 2, size=20, dtype=np.int64)
            y = ((td.a_matrix @ s) + e) % 257
            s2, e2 = invert_mp(td, y)
            assert np.array_equal(s2, s)
            assert np.array_equal(e2, e)

    def test_half_radius_inversion(self, rng):
        td = trapgen_mp(CLASSICAL_MICRO, rng)
        half = td.decode_radius // 2
        for _ in range(100):
            s = rng.integers(0, 257, size=1, dtype=np.int64)
            e = rng.integers(-half, half + 1, size=9, dtype=np.int64)
            y = ((td.a_matrix @ s) + e) % 257
            s2, e2 = invert_mp(td, y)
            assert np.array_equal(s2, s) and np.array_equal(e2, e)

    def test_uniform_y_mostly_fails(self, rng):
        td = trapgen_mp(CLASSICAL_MICRO, rng)
        ys = rng.integers(0, 257, size=(4000, 9), dtype=np.int64)
        _, _, ok = invert_mp_batch(td, ys)
        # ball-volume oracle: q * (2*radius+1)^m / q^m decodable fraction
        radius = td.decode_radius
        bound = 257 * ((2 * radius + 1) / 257) ** 9
        sigma = math.sqrt(bound * (1 - bound) / 4000)
        assert ok.mean() <= bound + 3 * sigma + 1e-6

    def test_params_validation(self):
        with pytest.raises(ValueError):
            LweParams(n=1, m=9, q=257, B=1, B_prime=100)  # B' ceiling
        with pytest.raises(ValueError):
            LweParams(n=1, m=9, q=257, B=9, B_prime=8)    # B > B'
        # below the gadget threshold there is no gadget trapdoor
        assert not QUANTUM_MICRO.has_gadget
        with pytest.raises(ValueError):
            trapgen_mp(QUANTUM_MICRO, qsim.make_rng(0))


class TestSetupModes:
    def test_recovery_coset(self, rng):
        kp = setup(TcfMode.RECOVERY, "lattice", rng, params=CLASSICAL_MICRO)
        td, u = kp.td
        _, e = invert_mp(td, u)
        assert np.abs(e).max() <= CLASSICAL_MICRO.B

    def test_injective_off_coset(self, rng):
        for r in qsim.spawn_rngs(rng.integers(2 ** 63), 20):
            kp = setup(TcfMode.INJECTIVE, "lattice", r, params=CLASSICAL_MICRO)
            td, u = kp.td
            try:
                _, e = invert_mp(td, u)
                assert np.abs(e).max() > 2 * CLASSICAL_MICRO.B_prime
            except DecodeFailure:
                pass

    def test_ideal_modes(self, rng):
        rec = setup(TcfMode.RECOVERY, "ideal", rng, domain_bits=2, r_bits=3)
        inj = setup(TcfMode.INJECTIVE, "ideal", rng, domain_bits=2, r_bits=3)
        # recovery: every y has one preimage per input value
        for y in range(8):
            pres = {b: [r for r in range(8)
                        if evaluate_bit(rec.pp, b, r) == y] for b in (0, 1)}
            assert all(len(v) == 1 for v in pres.values())
        # injective: the identity pairing never collides
        seen = set()
        for b in (0, 1):
            for r in range(8):
                seen.add(evaluate_bit(inj.pp, b, r))
        assert len(seen) == 16


class TestEvaluateExt:
    def test_lattice_formula(self, rng):
        kp = setup(TcfMode.RECOVERY, "lattice", rng, params=CLASSICAL_MICRO)
        pp = kp.pp
        x = rng.integers(0, 257, size=1, dtype=np.int64)
        e = rng.integers(-8, 9, size=9, dtype=np.int64)
        y0 = np.array(evaluate_bit(pp, 0, (x, e)))
        assert np.array_equal(y0, ((pp.a_matrix @ x) + e) % 257)
        y1 = np.array(evaluate_bit(pp, 1, (x, e)))
        assert np.array_equal(y1, ((pp.a_matrix @ x) + pp.u + e) % 257)

    def test_alternative_preimage_decomposition(self, rng):
        # y committed under branch 1 rewrites as A(x+s) + (e_u + e')
        kp = setup(TcfMode.RECOVERY, "lattice", rng, params=CLASSICAL_MICRO)
        pp = kp.pp
        td, u = kp.td
        s_u, e_u = invert_mp(td, u)
        x = rng.integers(0, 257, size=1, dtype=np.int64)
        e = rng.integers(-4, 5, size=9, dtype=np.int64)
        y1 = np.array(evaluate_bit(pp, 1, (x, e)))
        alt = ((pp.a_matrix @ ((x + s_u) % 257)) + (e + e_u)) % 257
        assert np.array_equal(y1, alt % 257)

    def test_ideal_recovery_image_multiset(self, rng):
        kp = setup(TcfMode.RECOVERY, "ideal", rng, domain_bits=1, r_bits=4)
        images = {b: sorted(evaluate_bit(kp.pp, b, r) for r in range(16))
                  for b in (0, 1)}
        assert images[0] == images[1] == list(range(16))

    def test_ext_round_trip_ideal(self, rng):
        kp = setup(TcfMode.INJECTIVE, "ideal", rng, domain_bits=3, r_bits=2)
        for x in range(8):
            rs = [int(rng.integers(0, 4)) for _ in range(3)]
            assert ext(kp, list(evaluate(kp, x, rs))) == x

    def test_ext_round_trip_lattice(self, rng):
        kp = setup(TcfMode.INJECTIVE, "lattice", rng, domain_bits=2,
                   params=CLASSICAL_MICRO)
        p = CLASSICAL_MICRO
        for x in range(4):
            rs = [(rng.integers(0, p.q, size=1, dtype=np.int64),
                   tcf.sample_truncated_gaussian(p.B_prime, p.sigma, p.m, rng))
                  for _ in range(2)]
            assert ext(kp, list(evaluate(kp, x, rs))) == x

    def test_ideal_not_in_image(self, rng):
        kp = setup(TcfMode.INJECTIVE, "ideal", rng, domain_bits=1, r_bits=2)
        with pytest.raises(NotInImage):
            ext(kp, [99])


class TestRandSuperposition:
    def test_ideal_uniform(self, rng):
        kp = setup(TcfMode.RECOVERY, "ideal", rng, domain_bits=1, r_bits=2)
        amps = rand_superposition(kp.pp)
        assert np.allclose(amps, 0.5)

    def test_lattice_micro_normalized(self, rng):
        kp = setup(TcfMode.RECOVERY, "lattice", rng, params=QUANTUM_MICRO)
        amps = rand_superposition(kp.pp)
        assert len(amps) == 13 * 5
        assert abs(np.linalg.norm(amps) - 1.0) < 1e-9
        w = tcf.truncated_gaussian_weights(2, QUANTUM_MICRO.sigma)
        assert np.allclose(amps[:5] ** 2, w / 13.0)

    def test_sampling_matches_mass(self, rng):
        kp = setup(TcfMode.RECOVERY, "lattice", rng, params=QUANTUM_MICRO)
        amps = rand_superposition(kp.pp)
        probs = np.abs(amps) ** 2
        counts = np.bincount(
            rng.choice(len(amps), p=probs, size=10_000), minlength=len(amps))
        for idx in np.argsort(probs)[-5:]:
            p = probs[idx]
            se = math.sqrt(p * (1 - p) / 10_000)
            assert abs(counts[idx] / 10_000 - p) <= 3 * se + 1e-9


def _uncompute_check(kp, state_amp, rng):
    """Run eval-measure-recover on a data bit and return the leftover
    (data-register density, measured y)."""
    psi = qsim.StateVector(state_amp, [("x", 2)])
    y, post = tcf.eval_measure_slot(kp, psi, "x", "r", rng)
    rec = tcf.recover_slot(kp, post, "x", "r", y)
    return qsim.partial_trace(rec, ["x"]), y


class TestRecovery:
    def test_ideal_exact(self, rng):
        kp = setup(TcfMode.RECOVERY, "ideal", rng, domain_bits=1, r_bits=3)
        amp = np.array([1, 1]) / math.sqrt(2)
        red, _ = _uncompute_check(kp, amp, rng)
        target = np.outer(amp, amp.conj())
        assert qsim.trace_distance(
            red, qsim.DensityMatrix(target, [("x", 2)])) < 1e-9

    def test_classical_branch_exact(self, rng):
        for inst, kwargs in [("ideal", {"r_bits": 3}),
                             ("lattice", {"params": QUANTUM_MICRO})]:
            kp = setup(TcfMode.RECOVERY, inst, rng, **kwargs)
            red, _ = _uncompute_check(kp, np.array([1.0, 0.0]), rng)
            assert abs(red.matrix[0, 0] - 1.0) < 1e-9

    def test_lattice_micro_within_bound(self, rng):
        amp = np.array([1, 1]) / math.sqrt(2)
        for params in (QUANTUM_MICRO_EXACT, QUANTUM_MICRO):
            bound = recovery_trace_bound(params)
            worst = 0.0
            for r in qsim.spawn_rngs(rng.integers(2 ** 63), 30):
                kp = setup(TcfMode.RECOVERY, "lattice", r, params=params)
                red, _ = _uncompute_check(kp, amp, r)
                target = qsim.DensityMatrix(np.outer(amp, amp.conj()), [("x", 2)])
                worst = max(worst, qsim.trace_distance(red, target))
            assert worst <= bound + 1e-6

    def test_channel_surrogate_ideal_zero(self, rng):
        kp = setup(TcfMode.RECOVERY, "ideal", rng, domain_bits=1, r_bits=3)
        assert eval_measure_recover_channel_test(kp) < 1e-9

    def test_channel_surrogate_lattice_bounds(self, rng):
        for params in (QUANTUM_MICRO_EXACT, QUANTUM_MICRO):
            kp = setup(TcfMode.RECOVERY, "lattice", rng, params=params)
            bound = recovery_trace_bound(params)
            assert eval_measure_recover_channel_test(kp) <= bound + 1e-6

    def test_channel_surrogate_diagonal_controlled(self, rng):
        # unitary on the reference controlled by the data basis
        def controlled_phase(rho):
            d = rho.shape[0]
            phases = np.array([1.0, 1.0, 1j, -1.0])[:d]  # per (ref, data)
            u = np.diag(phases)
            return u @ rho @ u.conj().T

        kp = setup(TcfMode.RECOVERY, "ideal", rng, domain_bits=1, r_bits=3)
        assert eval_measure_recover_channel_test(kp, controlled_phase) < 1e-9

    def test_channel_surrogate_with_predicate(self, rng):
        # dephasing in the data basis: the compiler's verdict-measurement case
        def predicate_channel(rho):
            out = rho.copy()
            d = rho.shape[0]
            for i in range(d):
                for j in range(d):
                    if (i % 2) != (j % 2):  # data register is the low axis
                        out[i, j] = 0.0
            return out

        kp = setup(TcfMode.RECOVERY, "ideal", rng, domain_bits=1, r_bits=3)
        assert eval_measure_recover_channel_test(kp, predicate_channel) < 1e-9
        kp = setup(TcfMode.RECOVERY, "lattice", rng, params=QUANTUM_MICRO)
        bound = recovery_trace_bound(QUANTUM_MICRO)
        assert eval_measure_recover_channel_test(kp, predicate_channel) <= bound + 1e-6

    def test_diagonal_action(self, rng):
        # eval and recover leave computational-basis projectors invariant
        kp = setup(TcfMode.RECOVERY, "ideal", rng, domain_bits=1, r_bits=2)
        amp = np.array([math.sqrt(0.3), math.sqrt(0.7)])
        psi = qsim.StateVector(amp, [("x", 2)])
        y, post = tcf.eval_measure_slot(kp, psi, "x", "r", rng)
        rec = tcf.recover_slot(kp, post, "x", "r", y)
        for state in (post, rec):
            red = qsim.partial_trace(state, ["x"])
            assert abs(red.matrix[0, 0].real - 0.3) < 1e-9

    def test_two_bit_concatenation_additive(self, rng):
        params = QUANTUM_MICRO
        per_bit = recovery_trace_bound(params)
        kp = setup(TcfMode.RECOVERY, "lattice", rng, params=params,
                   domain_bits=2)
        amps = np.zeros(4, dtype=complex)
        amps[0] = amps[3] = 1 / math.sqrt(2)
        psi = qsim.StateVector(amps, [("b0", 2), ("b1", 2)])
        state = psi
        ys = []
        for i, lab in enumerate(["b0", "b1"]):
            y, state = tcf.eval_measure_slot(kp, state, lab, f"r{i}", rng)
            ys.append(y)
        for i, lab in enumerate(["b0", "b1"]):
            state = tcf.recover_slot(kp, state, lab, f"r{i}", ys[i])
        red = qsim.partial_trace(state, ["b0", "b1"])
        target = qsim.DensityMatrix(np.outer(amps, amps.conj()),
                                    [("b0", 2), ("b1", 2)])
        assert qsim.trace_distance(red, target) <= 2 * per_bit + 1e-6


class TestSerialization:
    def test_ideal_round_trip(self, rng):
        kp = setup(TcfMode.RECOVERY, "ideal", rng, domain_bits=2, r_bits=3)
        back = tcf.deserialize_keypair(tcf.serialize_keypair(kp))
        assert np.array_equal(back.pp.table, kp.pp.table)
        assert back.domain_bits == 2 and back.mode is TcfMode.RECOVERY

    def test_lattice_round_trip_replays(self, rng):
        kp = setup(TcfMode.INJECTIVE, "lattice", rng, params=CLASSICAL_MICRO)
        back = tcf.deserialize_keypair(tcf.serialize_keypair(kp))
        p = CLASSICAL_MICRO
        for _ in range(20):
            x = int(rng.integers(0, 2))
            r = (rng.integers(0, p.q, size=1, dtype=np.int64),
                 tcf.sample_truncated_gaussian(p.B_prime, p.sigma, p.m, rng))
            y1 = evaluate_bit(kp.pp, x, r)
            y2 = evaluate_bit(back.pp, x, r)
            assert y1 == y2
            assert ext(back, [y1]) == x
