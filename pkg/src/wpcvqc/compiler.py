"""Non-destructive compilation of the base protocol, witness recovery in both
completeness regimes, transcript extraction, and sequential amplification.

One compiled round: the prover answers every query coherently, commits each
in-superposition answer bit through a recovery-mode trapdoor function (images
collapse, answers do not), takes the verdict as a binary projection on the
answer registers, argues validity through the state-preserving machinery, and
after the trapdoor reveal either uncomputes everything (near-perfect base
completeness) or repairs the verdict damage back onto the witness (general
completeness).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import estimate, qsim, tcf
from .cvqc import HonestProver, TestCheckVerifier
from .estimate import Estimate, ProjectiveMeasurement, RepairResult
from .qma import QmaVerifier
from .qsim import StateVector


@dataclass
class NdSession:
    """Bookkeeping for one compiled run."""

    mode: str
    phase: str
    st: object = None
    queries: list = field(default_factory=list)
    commitments: list = field(default_factory=list)
    trailers: list = field(default_factory=list)
    p_star: float | None = None
    verdict_bit: int | None = None
    spa_verdict: str | None = None
    spa_opening: tuple | None = None
    p_final: Estimate | None = None
    repair: RepairResult | None = None
    repair_failed: bool = False
    recovery_failed: bool = False
    workspace_reset_dirty: bool = False

    @property
    def accepted(self) -> bool:
        return self.verdict_bit == 1 and self.spa_verdict == "Accept"


@dataclass
class NdRunResult:
    verdict: str
    leftover: StateVector
    session: NdSession


@dataclass
class SeqRepConfig:
    """Sequential repetition: N rounds, threshold on the check-round wins."""

    N: int
    c: float
    s: float
    epsilon: float
    lam: int
    d: int = 1
    test_samples: int = 100  # conditional estimate sample count per round

    def threshold(self, n_check: int) -> int:
        return int(math.ceil((self.c + self.s) / 2.0 * n_check))


@dataclass
class RepairabilityLedger:
    p_chain: list = field(default_factory=list)
    repair_flags: list = field(default_factory=list)
    final_p: float | None = None
    epsilon: float | None = None


# ---------------------------------------------------------------------------
# Round plumbing
# ---------------------------------------------------------------------------


def _answer_candidates(prover: HonestProver, trailers):
    """All joint assignments of the quantum answer bits, as full answers."""
    q_rounds = [i for i, s in enumerate(prover.round_specs) if s.quantum_bits]
    combos = [[]]
    for _ in q_rounds:
        combos = [c + [b] for c in combos for b in (0, 1)]
    out = []
    for combo in combos:
        answers = []
        it = iter(combo)
        for i, spec in enumerate(prover.round_specs):
            bits = next(it) if spec.quantum_bits else 0
            answers.append((bits, trailers[i]))
        out.append((tuple(combo), answers))
    return out, [f"a{i}" for i in q_rounds]


def _verdict_projectors(nav_verdict, st, prover: HonestProver, trailers):
    """Diagonal accept/reject projectors over the quantum answer registers."""
    combos, labels = _answer_candidates(prover, trailers)
    dim = 2 ** len(labels)
    acc = np.zeros((dim, dim))
    for combo, answers in combos:
        idx = 0
        for b in combo:
            idx = idx * 2 + b
        if nav_verdict(st, answers):
            acc[idx, idx] = 1.0
    return acc, np.eye(dim) - acc, labels


def _reset_workspace(state, prover: HonestProver, rng):
    """Re-initialize the prover's scratch registers between repetitions.

    Measure-and-flip: each non-witness register collapses to a basis value
    and is mapped back to zero. After a repaired round the scratch sits in
    (near-)product with the witness classes, so the reset is (near-)free; any
    residual collapse lands inside the next round's repair budget.
    """
    dirty = False
    scratch = [lab for lab, _ in prover.internal_layout] + \
        prover.answer_labels()
    for lab in scratch:
        (val,), state = qsim.measure_registers(state, [lab], rng)
        if val != 0:
            dirty = True
            dim = state.register_dim(lab)
            state = qsim.apply_basis_map(
                state, [lab], lambda v, val=val, dim=dim:
                ((v[0] - val) % dim,))
    return state, dirty


def _apply_prover_rounds(state, prover: HonestProver, queries, adjoint=False):
    seq = list(enumerate(queries))
    if adjoint:
        seq = seq[::-1]
    for i, q in seq:
        mat, targets = prover.round_unitary(i, q)
        if targets:
            state = qsim.apply_unitary(state,
                                       mat.conj().T if adjoint else mat,
                                       targets)
    return state


def _transcript_unitary_measurement(prover, queries, acc, labels):
    """Pi = U_q^dag (verdict projector) U_q as a ProjectiveMeasurement-like
    object with a measure(state, rng) method."""

    class _Pi:
        num_outcomes = 2

        def measure(self, state, rng):
            state = _apply_prover_rounds(state, prover, queries)
            outcome, state = qsim.measure_projective(
                state, [acc, np.eye(acc.shape[0]) - acc], rng, labels)
            state = _apply_prover_rounds(state, prover, queries, adjoint=True)
            return outcome, state

    return _Pi()


def _commit_answers(state, prover: HonestProver, keypair, queries, rng):
    """Per round: apply P_i, commit the answer (quantum bit coherently,
    trailer bits classically), and measure the images."""
    ys = []
    trailers = []
    for i, q in enumerate(queries):
        mat, targets = prover.round_unitary(i, q)
        if targets:
            state = qsim.apply_unitary(state, mat, targets)
        spec = prover.round_specs[i]
        parts = []
        if spec.quantum_bits:
            y_q, state = tcf.eval_measure_slot(keypair, state, f"a{i}",
                                               f"r{i}", rng)
            parts.append(("q", y_q))
        trailer = prover.trailer_value(i, q)
        trailers.append(trailer)
        for j in range(spec.trailer_bits):
            bit = (trailer >> (spec.trailer_bits - 1 - j)) & 1
            y_t, r_t = tcf.commit_classical_bit(keypair, bit, rng)
            parts.append(("t", tcf.y_encode(keypair.pp, y_t), bit, r_t))
        ys.append(tuple(parts))
    return state, ys, trailers


def _recover_answer_slots(state, prover: HonestProver, keypair, ys):
    """Undo the quantum-slot commitments; ideal randomness registers retire."""
    ideal = keypair.instantiation == "ideal"
    for i, spec in enumerate(prover.round_specs):
        if not spec.quantum_bits:
            continue
        y_q = next(p[1] for p in ys[i] if p[0] == "q")
        state = tcf.recover_slot(keypair, state, f"a{i}", f"r{i}", y_q)
        if ideal:
            state = qsim.project_register(state, f"r{i}", 0)
    return state


# ---------------------------------------------------------------------------
# Direct-relation state-preserving argument step
# ---------------------------------------------------------------------------


def _spa_step(state, prover: HonestProver, keypair_outer, ys, trailers, st,
              nav_verdict, rng, session: NdSession):
    """Commit the answer registers under fresh recovery keys, answer a random
    trailer-slot opening challenge, take the coherent relation check, then
    recover the argument's own commitments.

    Computational soundness of this stand-in is assumed (same boundary as the
    toy base); the honest path is exactly state-preserving here because the
    relation holds identically on the post-verdict support.
    """
    spa_keypair = tcf.setup(tcf.TcfMode.RECOVERY, "ideal", rng,
                            domain_bits=1, r_bits=2)
    q_rounds = [i for i, s in enumerate(prover.round_specs) if s.quantum_bits]
    spa_ys = []
    for i in q_rounds:
        y, state = tcf.eval_measure_slot(spa_keypair, state, f"a{i}",
                                         f"sr{i}", rng)
        spa_ys.append(y)

    # challenge: open one classically committed trailer bit
    trailer_slots = [(i, p) for i, parts in enumerate(ys)
                     for p in parts if p[0] == "t"]
    opened = None
    if trailer_slots:
        k_star = int(rng.integers(len(trailer_slots)))
        i, (_, y_t, bit, r_t) = trailer_slots[k_star]
        ok_open = tcf.y_encode(keypair_outer.pp,
                               tcf.evaluate_bit(keypair_outer.pp, bit, r_t)
                               ) == y_t
        opened = (i, bit, ok_open)
        if not ok_open:
            session.spa_verdict = "Reject"
            return state, False

    # coherent relation check: deterministic on the post-verdict support
    combos, labels = _answer_candidates(prover, trailers)
    accept_lookup = {}
    for combo, answers in combos:
        idx = 0
        for b in combo:
            idx = idx * 2 + b
        accept_lookup[idx] = bool(nav_verdict(st, answers))

    def relation(vals):
        idx = 0
        for v in vals:
            idx = idx * 2 + v
        return 1 if accept_lookup[idx] else 0

    beta, state = qsim.measure_value_function(state, labels, relation, rng)

    for pos, i in enumerate(q_rounds):
        state = tcf.recover_slot(spa_keypair, state, f"a{i}", f"sr{i}",
                                 spa_ys[pos])
        state = qsim.project_register(state, f"sr{i}", 0)

    session.spa_opening = opened
    session.spa_verdict = "Accept" if beta == 1 else "Reject"
    return state, beta == 1


# ---------------------------------------------------------------------------
# Witness recovery, both regimes
# ---------------------------------------------------------------------------


def witness_recovery_high_c(state, prover: HonestProver, keypair, ys,
                            queries) -> StateVector:
    """Per-slot trapdoor recovery then the adjoint prover unitaries."""
    state = _recover_answer_slots(state, prover, keypair, ys)
    return _apply_prover_rounds(state, prover, queries, adjoint=True)


def witness_recovery_general(state, prover: HonestProver, keypair, ys,
                             queries, acc_projector, labels, qma_verifier,
                             p_star, epsilon, lam, rng,
                             witness_labels=("wit",)):
    """Slot recovery, then the estimator/damage alternation aimed back at the
    recorded quality estimate, then a fresh final estimate."""
    delta = 2.0 ** (-lam)
    state = _recover_answer_slots(state, prover, keypair, ys)
    state = _apply_prover_rounds(state, prover, queries, adjoint=True)
    pi = _transcript_unitary_measurement(prover, queries, acc_projector,
                                         labels)
    m = estimate.valest_measurement(qma_verifier, epsilon, delta,
                                    witness_labels=list(witness_labels))
    t_max = estimate.default_repair_budget(delta)
    res = estimate.repair(m, pi, state, 0, p_star, t_max, rng, epsilon)
    p_final, out = estimate.val_est(qma_verifier, res.state, epsilon, delta,
                                    rng, witness_labels=list(witness_labels))
    return out, p_final, res


# ---------------------------------------------------------------------------
# One compiled run
# ---------------------------------------------------------------------------


def nd_compile_run(base: TestCheckVerifier, prover: HonestProver,
                   qma_verifier: QmaVerifier, witness: StateVector,
                   epsilon: float, lam: int, mode: str,
                   rng: np.random.Generator, x: str = "toy",
                   instantiation: str = "ideal", phase: str | None = None,
                   p_star: float | None = None,
                   threaded: bool = False) -> NdRunResult:
    """Run the compiled protocol once.

    mode "high_completeness" skips the initial estimate and uncomputes the
    transcript exactly; mode "general" estimates the witness quality up
    front, repairs the verdict damage afterwards, and re-estimates.
    `threaded` feeds a full prover state from a previous round back in
    (sequential repetition); otherwise `witness` needs only the "wit"
    register (plus any entangled reference registers).
    """
    if mode not in ("high_completeness", "general"):
        raise ValueError(f"unknown mode {mode!r}")
    phase = phase or ("test" if rng.random() < base.selection_bias else "check")
    session = NdSession(mode=mode, phase=phase)
    delta = 2.0 ** (-lam)

    if threaded:
        state, session.workspace_reset_dirty = _reset_workspace(
            witness, prover, rng)
    else:
        state = prover.initial_state(witness)

    if mode == "general":
        if p_star is None:
            est0, state = estimate.val_est(qma_verifier, state, epsilon,
                                           delta, rng, witness_labels=["wit"])
            p_star = est0.value
        session.p_star = p_star

    keypair = tcf.setup(tcf.TcfMode.RECOVERY, instantiation, rng,
                        domain_bits=1, r_bits=2)
    nav = base.test if phase == "test" else base.check
    st, queries = nav.sample_queries(x, lam, rng)
    session.st, session.queries = st, [list(q) for q in queries]

    state, ys, trailers = _commit_answers(state, prover, keypair, queries, rng)
    session.commitments = [[p[1] for p in parts] for parts in ys]
    session.trailers = trailers

    acc, rej, labels = _verdict_projectors(nav.verdict, st, prover, trailers)
    outcome, state = qsim.measure_projective(state, [acc, rej], rng, labels)
    b = 1 if outcome == 0 else 0
    session.verdict_bit = b

    if b == 1:
        state, spa_ok = _spa_step(state, prover, keypair, ys, trailers, st,
                                  nav.verdict, rng, session)
    else:
        session.spa_verdict = "Skipped"

    # the verifier releases the trapdoor either way so recovery can run
    if mode == "high_completeness":
        leftover = witness_recovery_high_c(state, prover, keypair, ys, queries)
        verdict = "Accept" if session.accepted else "Reject"
        return NdRunResult(verdict, leftover, session)

    leftover, p_final, repair_res = witness_recovery_general(
        state, prover, keypair, ys, queries, acc, labels, qma_verifier,
        p_star, epsilon, lam, rng)
    session.p_final = p_final
    session.repair = repair_res
    session.repair_failed = not repair_res.succeeded
    verdict = "Accept" if session.accepted else "Reject"
    return NdRunResult(verdict, leftover, session)


def leftover_distance(leftover: StateVector, reference: StateVector,
                      labels: list[str]) -> float:
    """Trace distance between the reduced leftover and reference states."""
    return qsim.trace_distance(qsim.partial_trace(leftover, labels),
                               qsim.partial_trace(reference, labels))


# ---------------------------------------------------------------------------
# Extraction through injective-mode commitments
# ---------------------------------------------------------------------------


@dataclass
class ExtractResult:
    answers: list | None
    base_verdict: bool | None
    internal_verdict: int | None
    consistent: bool
    collapsed_state: StateVector | None


def transcript_extract(base: TestCheckVerifier, prover: HonestProver,
                       witness: StateVector, rng: np.random.Generator,
                       x: str = "toy", lam: int = 8,
                       phase: str = "check") -> ExtractResult:
    """Extractor-mode run: injective keys collapse each committed answer, the
    trapdoor inverts the commitments, and the rebuilt transcript is fed to
    the verdict function. In-image commitments always reproduce the
    in-protocol verdict (unique preimages)."""
    keypair = tcf.setup(tcf.TcfMode.INJECTIVE, "ideal", rng,
                        domain_bits=1, r_bits=2)
    nav = base.test if phase == "test" else base.check
    st, queries = nav.sample_queries(x, lam, rng)
    state = prover.initial_state(witness)
    state, ys, trailers = _commit_answers(state, prover, keypair, queries, rng)

    answers = []
    try:
        for i, spec in enumerate(prover.round_specs):
            bits = 0
            for part in ys[i]:
                if part[0] == "q":
                    bits = tcf.ext_bit(keypair, part[1])
            trailer = 0
            t_parts = [p for p in ys[i] if p[0] == "t"]
            for p in t_parts:
                trailer = trailer * 2 + tcf.ext_bit(keypair, p[1])
            answers.append((bits, trailer))
    except tcf.NotInImage:
        return ExtractResult(None, None, None, False, None)

    base_verdict = bool(nav.verdict(st, answers))
    acc, rej, labels = _verdict_projectors(nav.verdict, st, prover, trailers)
    outcome, state = qsim.measure_projective(state, [acc, rej], rng, labels)
    internal = 1 if outcome == 0 else 0
    return ExtractResult(answers, base_verdict, internal,
                         base_verdict == (internal == 1), state)


# ---------------------------------------------------------------------------
# Sequential amplification
# ---------------------------------------------------------------------------


@dataclass
class SeqRepRound:
    phase: str
    verdict: str
    b: int | None
    p_estimate: float | None
    repair_failed: bool
    test_pass_estimate: float | None
    check_pass_estimate: float | None


@dataclass
class SeqRepResult:
    verdict: str
    rounds: list
    ledger: RepairabilityLedger
    final_state: StateVector | None
    aborted_at: int | None


def _conditional_phase_estimate(base: TestCheckVerifier,
                                prover: HonestProver, state: StateVector,
                                phase: str, samples: int,
                                rng: np.random.Generator, x: str,
                                lam: int) -> float:
    """Estimate Pr[phase verdict accepts | current state] on state copies."""
    wins = 0
    nav = base.test if phase == "test" else base.check
    for r in qsim.spawn_rngs(rng.integers(2 ** 63), samples):
        st, queries = nav.sample_queries(x, lam, r)
        sim = state
        for i, q in enumerate(queries):
            mat, targets = prover.round_unitary(i, q)
            if targets:
                sim = qsim.apply_unitary(sim, mat, targets)
        trailers = [prover.trailer_value(i, q)
                    for i, q in enumerate(queries)]
        acc, rej, labels = _verdict_projectors(nav.verdict, st, prover,
                                               trailers)
        outcome, _ = qsim.measure_projective(sim, [acc, rej], r, labels)
        wins += outcome == 0
    return wins / samples


def seqrep_run(config: SeqRepConfig, base: TestCheckVerifier,
               prover: HonestProver, qma_verifier: QmaVerifier,
               witness: StateVector, rng: np.random.Generator,
               x: str = "toy", instantiation: str = "ideal",
               diagnostics: bool = True) -> SeqRepResult:
    """N sequential compiled runs threading the residual prover state.

    Aborts on any test-round rejection; accepts when the check-round wins
    reach ceil((c+s)/2 * |B|). Each round reuses the previous round's final
    estimate as its incoming quality (the fresh step-one estimate runs only
    in round 1).
    """
    ledger = RepairabilityLedger(epsilon=config.epsilon)
    rounds = []
    state = prover.initial_state(witness)
    p_star = None
    for i in range(config.N):
        phase = "test" if rng.random() < base.selection_bias else "check"
        # the prover re-initializes its scratch before the repetition; the
        # conditional estimates then reflect the state the round actually
        # consumes (the reset inside the compiled run becomes a no-op)
        state, _ = _reset_workspace(state, prover, rng)
        test_est = check_est = None
        if diagnostics:
            test_est = _conditional_phase_estimate(
                base, prover, state, "test", config.test_samples, rng, x,
                config.lam)
            check_est = _conditional_phase_estimate(
                base, prover, state, "check", config.test_samples, rng, x,
                config.lam)
        res = nd_compile_run(base, prover, qma_verifier, state,
                             config.epsilon, config.lam, "general", rng,
                             x=x, instantiation=instantiation, phase=phase,
                             p_star=p_star, threaded=True)
        state = res.leftover
        p_star = res.session.p_final.value
        ledger.p_chain.append(p_star)
        ledger.repair_flags.append(res.session.repair_failed)
        rounds.append(SeqRepRound(phase, res.verdict,
                                  None if phase == "test"
                                  else (1 if res.verdict == "Accept" else 0),
                                  p_star, res.session.repair_failed,
                                  test_est, check_est))
        if phase == "test" and res.verdict != "Accept":
            ledger.final_p = p_star
            return SeqRepResult("Reject", rounds, ledger, state, i)
    ledger.final_p = p_star
    check_rounds = [r for r in rounds if r.phase == "check"]
    wins = sum(r.b for r in check_rounds)
    verdict = ("Accept"
               if wins >= config.threshold(len(check_rounds)) else "Reject")
    return SeqRepResult(verdict, rounds, ledger, state, None)


def recount_threshold_verdict(rounds, config: SeqRepConfig) -> str:
    """Independent recount of the threshold rule from round records."""
    if any(r.phase == "test" and r.verdict != "Accept" for r in rounds):
        return "Reject"
    check = [r for r in rounds if r.phase == "check"]
    return ("Accept"
            if sum(r.b for r in check) >= config.threshold(len(check))
            else "Reject")


def seqrep_extract(config: SeqRepConfig, base: TestCheckVerifier,
                   prover: HonestProver, qma_verifier: QmaVerifier,
                   witness: StateVector, rng: np.random.Generator,
                   x: str = "toy", round_choice: int | None = None,
                   abort_after: int | None = None):
    """Random-round extraction: run normally up to a uniformly chosen round,
    then switch that round to injective-mode extraction and read the witness
    register off the collapsed prover state.

    abort_after scripts a prover that walks away after that many rounds;
    extraction attempts at later rounds fail with consistent bookkeeping.
    """
    j = (int(rng.integers(config.N)) if round_choice is None
         else round_choice)
    if abort_after is not None and j >= abort_after:
        return {"round": j, "aborted": True, "success": False,
                "quality": None, "state": None}
    state = prover.initial_state(witness)
    p_star = None
    for i in range(j):
        phase = "test" if rng.random() < base.selection_bias else "check"
        res = nd_compile_run(base, prover, qma_verifier, state,
                             config.epsilon, config.lam, "general", rng,
                             x=x, phase=phase, p_star=p_star, threaded=True)
        state = res.leftover
        p_star = res.session.p_final.value
        if phase == "test" and res.verdict != "Accept":
            return {"round": j, "aborted": True, "success": False,
                    "quality": None, "state": None}
    # the extraction round consumes the witness (injective commitments
    # collapse it); strip any reference registers from the readout
    wit_only = [lab for lab in state.labels() if lab == "wit"]
    extraction = _extract_round(base, prover, state, rng, x, config.lam)
    if extraction is None:
        return {"round": j, "aborted": False, "success": False,
                "quality": None, "state": None}
    collapsed, accepted = extraction
    rho = qsim.partial_trace(collapsed, wit_only)
    quality = float(np.real(np.trace(qma_verifier.operator() @ rho.matrix)))
    return {"round": j, "aborted": False, "success": bool(accepted),
            "quality": quality, "state": rho}


def _extract_round(base, prover, state, rng, x, lam):
    keypair = tcf.setup(tcf.TcfMode.INJECTIVE, "ideal", rng,
                        domain_bits=1, r_bits=2)
    nav = base.check
    st, queries = nav.sample_queries(x, lam, rng)
    state, ys, trailers = _commit_answers(state, prover, keypair, queries, rng)
    try:
        answers = []
        for i, spec in enumerate(prover.round_specs):
            bits = 0
            for part in ys[i]:
                if part[0] == "q":
                    bits = tcf.ext_bit(keypair, part[1])
            trailer = 0
            for p in (p for p in ys[i] if p[0] == "t"):
                trailer = trailer * 2 + tcf.ext_bit(keypair, p[1])
            answers.append((bits, trailer))
    except tcf.NotInImage:
        return None
    return state, nav.verdict(st, answers)


# ---------------------------------------------------------------------------
# Tail-bound arithmetic and transcript quality diagnostics
# ---------------------------------------------------------------------------


def azuma_bound(t: float, c_list) -> float:
    """exp(-2 t^2 / sum c_k^2) for a bounded-difference martingale."""
    if t < 0:
        raise ValueError("t >= 0 required")
    if t == 0:
        return 1.0
    c = np.asarray(c_list, dtype=float)
    if (c <= 0).any():
        raise ValueError("difference bounds must be positive")
    return float(math.exp(-2.0 * t * t / float((c * c).sum())))


def hoeffding_completeness_bound(n_check: int, per_round_rate: float,
                                 threshold_fraction: float) -> float:
    """Tail bound on missing the threshold given the per-round accept rate."""
    margin = per_round_rate - threshold_fraction
    if margin <= 0:
        return 1.0
    return float(math.exp(-2.0 * margin ** 2 * n_check))


@dataclass
class GoodTranscriptReport:
    accepted: bool
    flagged_rounds: list
    allowed_flags: int
    is_good: bool


def good_transcript_diagnostic(result: SeqRepResult, d: int, lam: int,
                               samples_per_round: int,
                               min_samples: int = 100) -> GoodTranscriptReport:
    """Flag rounds whose conditional test-pass estimate falls below
    1 - 1/lam^d; the accepted transcript qualifies as Good when at most
    lam^(d+1) rounds are flagged."""
    if samples_per_round < min_samples:
        raise ValueError(f"need >= {min_samples} conditional samples per round")
    flagged = []
    threshold = 1.0 - 1.0 / lam ** d
    for i, r in enumerate(result.rounds):
        if r.test_pass_estimate is None:
            raise ValueError("round missing conditional estimates")
        if r.test_pass_estimate < threshold:
            flagged.append(i)
    accepted = result.verdict == "Accept"
    allowed = int(lam ** (d + 1))
    return GoodTranscriptReport(accepted, flagged, allowed,
                                accepted and len(flagged) <= allowed)


def seqrep_trial_record(seed: int, config: SeqRepConfig,
                        result: SeqRepResult,
                        leftover_dist: float | None = None) -> dict:
    """JSON-ready per-trial record for experiment logs."""
    return {
        "seed": int(seed),
        "mode": "general",
        "N": config.N,
        "verdicts": [r.verdict for r in result.rounds],
        "phases": [r.phase for r in result.rounds],
        "p_chain": [None if p is None else float(p)
                    for p in result.ledger.p_chain],
        "repair_flags": [bool(f) for f in result.ledger.repair_flags],
        "test_estimates": [r.test_pass_estimate for r in result.rounds],
        "check_estimates": [r.check_pass_estimate for r in result.rounds],
        "leftover_distance": leftover_dist,
        "verdict": result.verdict,
    }
