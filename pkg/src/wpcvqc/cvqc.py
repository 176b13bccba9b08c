"""Non-adaptive base protocol with the test/check verifier split.

The synthetic toy base wraps a quantum verifier into a one-round (or
three-round) interaction: queries are session nonces sampled up front, the
honest prover coherently writes the verifier's verdict bit (plus nonce
echoes) into its answer registers, the test phase checks only the nonce
binding (perfect completeness), and the check phase additionally demands the
verdict bit. Its computational soundness against arbitrary quantum provers is
assumed, not enforced: the suite exercises compiler mechanics, which are
base-agnostic.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from . import qsim
from .qma import QmaVerifier
from .qsim import StateVector

DEFAULT_ZETA = 0.99


@dataclass(frozen=True)
class NonAdaptiveVerifier:
    """Query sampler plus verdict function; queries never depend on answers."""

    round_count: int
    sample_queries: object  # (x, lam, rng) -> (st, [q_1..q_ell])
    verdict: object         # (st, [a_1..a_ell]) -> bool


@dataclass(frozen=True)
class TestCheckVerifier:
    test: NonAdaptiveVerifier
    check: NonAdaptiveVerifier
    zeta: float = DEFAULT_ZETA
    d: int = 1
    s: float = 0.5
    delta: float = 0.5
    selection_bias: float = 0.5
    declared_c: float = 1.0

    @property
    def round_count(self) -> int:
        return self.test.round_count


@dataclass
class RoundSpec:
    """Shape of one round's answer: quantum bits plus a classical trailer."""

    quantum_bits: int
    trailer_bits: int

    @property
    def total_bits(self) -> int:
        return self.quantum_bits + self.trailer_bits


@dataclass
class HonestProver:
    """Per-round unitaries acting on (answer slot i, internal registers)."""

    internal_layout: list            # prover registers beyond the witness
    round_specs: list                # RoundSpec per round
    round_unitary: object            # (i, q_i) -> (matrix, target labels)
    trailer_value: object            # (i, q_i) -> classical trailer int
    x: str = "toy"

    def initial_state(self, witness: StateVector) -> StateVector:
        """|psi_empty> = |w> (x) |0...> over witness + internal registers."""
        state = witness
        for label, dim in self.internal_layout:
            state = qsim.append_register(state, label, _zero(dim))
        for i, spec in enumerate(self.round_specs):
            if spec.quantum_bits:
                state = qsim.append_register(state, f"a{i}",
                                             _zero(2 ** spec.quantum_bits))
        return state

    def answer_labels(self) -> list[str]:
        return [f"a{i}" for i, spec in enumerate(self.round_specs)
                if spec.quantum_bits]


def _zero(dim: int) -> np.ndarray:
    v = np.zeros(dim, dtype=complex)
    v[0] = 1.0
    return v


# ---------------------------------------------------------------------------
# The synthetic toy base
# ---------------------------------------------------------------------------


def _verdict_projector(v: QmaVerifier) -> np.ndarray:
    u = v.algorithm.dilation_unitary
    return u.conj().T @ v.algorithm.accept_projector @ u


def make_toy_base_cvqc(qma_verifier: QmaVerifier, rounds: int = 1,
                       nonce_bits: int = 2):
    """Synthetic base protocol around a quantum verifier.

    rounds=1: the single answer carries (verdict bit, nonce echo).
    rounds=3: the verdict is XOR-shared across answer fragments (f2 echoes a
    query share, f3 = verdict xor share), exercising multi-round commitment
    plumbing with one coherent bit.
    """
    if rounds not in (1, 3):
        raise ValueError("toy base ships with 1 or 3 rounds")
    d_anc = qma_verifier.algorithm.ancilla_dim
    proj = _verdict_projector(qma_verifier)
    nonce_space = 2 ** nonce_bits

    if rounds == 1:
        def sample(x, lam, rng):
            nonce = int(rng.integers(nonce_space))
            return {"nonces": [nonce]}, [(nonce,)]

        def verdict_test(st, answers):
            bits, trailer = answers[0]
            return trailer == st["nonces"][0]

        def verdict_check(st, answers):
            bits, trailer = answers[0]
            return trailer == st["nonces"][0] and bits == 1

        specs = [RoundSpec(1, nonce_bits)]

        def unitary(i, q):
            # X on the answer bit controlled on the dilated accept subspace
            x_gate = np.array([[0, 1], [1, 0]], dtype=complex)
            d = proj.shape[0]
            mat = np.kron(x_gate, proj) + np.kron(np.eye(2), np.eye(d) - proj)
            return mat, ["a0", "wit", "anc"]

        def trailer(i, q):
            return q[0]

        internal = [("anc", d_anc)]
    else:
        def sample(x, lam, rng):
            nonces = [int(rng.integers(nonce_space)) for _ in range(3)]
            share = int(rng.integers(2))
            st = {"nonces": nonces, "share": share}
            return st, [(nonces[0],), (nonces[1], share), (nonces[2], share)]

        def _echoes(st, answers):
            (b1, t1), (b2, t2), (b3, t3) = answers
            share = st["share"]
            return (t1 == st["nonces"][0]
                    and t2 == st["nonces"][1] * 2 + share
                    and t3 == st["nonces"][2])

        def verdict_test(st, answers):
            return _echoes(st, answers)

        def verdict_check(st, answers):
            if not _echoes(st, answers):
                return False
            f2 = st["share"]
            f3 = answers[2][0]
            return (f2 ^ f3) == 1

        specs = [RoundSpec(0, nonce_bits), RoundSpec(0, nonce_bits + 1),
                 RoundSpec(1, nonce_bits)]

        def unitary(i, q):
            if i == 0:
                # write the verdict coherently into the work bit
                x_gate = np.array([[0, 1], [1, 0]], dtype=complex)
                d = proj.shape[0]
                mat = np.kron(x_gate, proj) + np.kron(np.eye(2),
                                                      np.eye(d) - proj)
                return mat, ["vb", "wit", "anc"]
            if i == 1:
                return np.eye(1), []
            share = q[1]
            # a3 <- vb xor share
            cnot = np.zeros((4, 4), dtype=complex)
            for a in range(2):
                for b in range(2):
                    cnot[((a ^ b ^ share) * 2 + b), a * 2 + b] = 1.0
            return cnot, ["a2", "vb"]

        def trailer(i, q):
            if i == 1:
                return q[0] * 2 + q[1]
            return q[0]

        internal = [("anc", d_anc), ("vb", 2)]

    prover = HonestProver(internal, specs, unitary, trailer,
                          x=qma_verifier.instance_label)
    verifier = TestCheckVerifier(
        test=NonAdaptiveVerifier(rounds, sample, verdict_test),
        check=NonAdaptiveVerifier(rounds, sample, verdict_check))
    return verifier, prover


# ---------------------------------------------------------------------------
# Session driver for the base protocol (answers measured classically)
# ---------------------------------------------------------------------------


@dataclass
class BaseRunResult:
    verdict: bool
    phase: str
    transcript: list
    leftover: StateVector | None


def transcript_lines(transcript) -> str:
    return "\n".join(json.dumps(t, sort_keys=True) for t in transcript)


def run_base_cvqc(verifier: TestCheckVerifier, prover, x: str, witness,
                  rng: np.random.Generator, lam: int = 8,
                  phase: str | None = None) -> BaseRunResult:
    """Drive one run of the base protocol.

    The verifier samples the phase (test/check) uniformly unless forced; the
    query sampler runs before any prover message. An honest prover applies
    its round unitary and measures the answer; a hook prover is a callable
    (i, q_i, rng) -> answer tuple or None (None rejects as a protocol
    violation).
    """
    phase = phase or ("test" if rng.random() < verifier.selection_bias
                      else "check")
    nav = verifier.test if phase == "test" else verifier.check
    st, queries = nav.sample_queries(x, lam, rng)
    transcript = []
    answers = []
    state = None
    if isinstance(prover, HonestProver):
        state = prover.initial_state(witness)
    for i, q in enumerate(queries):
        if isinstance(prover, HonestProver):
            mat, targets = prover.round_unitary(i, q)
            if targets:
                state = qsim.apply_unitary(state, mat, targets)
            spec = prover.round_specs[i]
            bits = 0
            if spec.quantum_bits:
                (bits,), state = qsim.measure_registers(state, [f"a{i}"], rng)
            answer = (int(bits), prover.trailer_value(i, q))
        else:
            answer = prover(i, q, rng)
            if answer is None:
                transcript.append({"round": i, "query": list(q),
                                   "answer_or_commitment": None,
                                   "phase": phase})
                return BaseRunResult(False, phase, transcript, None)
        answers.append(answer)
        transcript.append({"round": i, "query": list(q),
                           "answer_or_commitment": list(answer),
                           "phase": phase})
    verdict = bool(nav.verdict(st, answers))
    return BaseRunResult(verdict, phase, transcript, state)


def estimate_test_check_rates(prover, verifier: TestCheckVerifier, x: str,
                              witness, trials: int,
                              rng: np.random.Generator):
    """Monte-Carlo conditional acceptance rates (test, check) with standard
    errors."""
    if trials < 1:
        raise ValueError("trials >= 1")
    rates = {}
    for phase in ("test", "check"):
        wins = 0
        for r in qsim.spawn_rngs(rng.integers(2 ** 63), trials):
            wins += run_base_cvqc(verifier, prover, x, witness, r,
                                  phase=phase).verdict
        p = wins / trials
        rates[phase] = (p, np.sqrt(max(p * (1 - p), 1.0 / trials) / trials))
    return rates["test"], rates["check"]


def always_abort_hook(i, q, rng):
    return None


def make_echo_hook(answer_bits: int = 0):
    """Scripted prover echoing nonces with a fixed verdict fragment."""

    def hook(i, q, rng):
        trailer = q[0] if len(q) == 1 else q[0] * 2 + q[1]
        return (answer_bits, trailer)

    return hook
