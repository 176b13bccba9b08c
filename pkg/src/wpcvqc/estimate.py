"""Acceptance-probability estimation, state repair, and repairability checks.

The estimator alternates a dilated accept projector against an ancilla-reset
projector and scores the fraction of repeated outcomes. On the Jordan block
picture every eigenvalue-v eigenvector of the verifier contributes a block
with overlap v/2 + 1/4, so the scored statistic has expectation exactly equal
to the acceptance probability, concentrates on eigenstates, and is almost
projective.

Two interchangeable implementations are provided:

* ``val_est`` - exact block-Markov simulation (sample one outcome path,
  reweight eigenvalue classes in log space). Handles estimator budgets up to
  tens of millions of measurement steps.
* ``val_est_reference`` - the literal register-level walk on the dilated space
  (input (x) ancilla (x) three-level flag register). Used as the independent
  oracle in tests.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import binom

from . import qsim
from .qsim import DensityMatrix, StateVector
from .qma import QmaVerifier, eigenvalue_classes


def alternation_pairs(epsilon: float, delta: float) -> int:
    """Pair count t: smallest budget putting the binomial tail at radius
    epsilon/2 (output units) below delta/2 per run, via Hoeffding."""
    if not (0.0 < epsilon <= 1.0 and 0.0 < delta <= 1.0):
        raise ValueError("epsilon, delta must lie in (0, 1]")
    return max(1, int(math.ceil(4.0 / epsilon ** 2 * math.log(4.0 / delta))))


@dataclass(frozen=True)
class Estimate:
    """Discretized estimator output on the grid {k/t - 1/2 : k = 0..2t}."""

    value: float
    epsilon: float
    delta: float
    grid_size: int

    def __post_init__(self):
        t = (self.grid_size - 1) // 2
        k = (self.value + 0.5) * t
        if abs(k - round(k)) > 1e-9:
            raise ValueError(f"value {self.value} not on the output grid")
        if not (-0.5 - 1e-12 <= self.value <= 1.5 + 1e-12):
            raise ValueError("estimate outside [-1/2, 3/2]")


def _jordan_overlaps(values: np.ndarray) -> np.ndarray:
    return values / 2.0 + 0.25


def _class_components(v: QmaVerifier, state: StateVector,
                      witness_labels: list[str] | None):
    """Eigenvalue-class components of `state`, verifier lifted with identity
    on any non-witness registers."""
    values, bases = eigenvalue_classes(v)
    labels = witness_labels if witness_labels is not None else state.labels()
    comps = []
    for basis in bases:
        proj = basis @ basis.conj().T
        comps.append(qsim.apply_operator_unnormalized(state, proj, labels))
    masses = np.array([float(np.vdot(c, c).real) for c in comps])
    keep = masses > 1e-30
    return (values[keep], [c for c, k in zip(comps, keep) if k],
            masses[keep] / masses[keep].sum())


def _as_pure(state, rng: np.random.Generator) -> StateVector:
    """Density inputs are realized through their seeded eigen-ensemble."""
    if isinstance(state, DensityMatrix):
        ensemble = state.eigen_ensemble()
        weights = np.array([w for w, _ in ensemble])
        pick = int(rng.choice(len(ensemble), p=weights / weights.sum()))
        return ensemble[pick][1]
    return state


def val_est(v: QmaVerifier, state, epsilon: float, delta: float,
            rng: np.random.Generator,
            witness_labels: list[str] | None = None,
            max_dim: int = qsim.DEFAULT_MAX_DIM) -> tuple[Estimate, StateVector]:
    """Almost-projective estimate of Pr[v accepts state].

    Returns the grid estimate and the post-measurement state. The estimate's
    expectation equals the acceptance probability exactly; eigenstates with
    eigenvalue p yield |estimate - p| <= epsilon except with probability
    <= delta; two consecutive runs agree within max(eps, eps') except with
    probability <= max(delta, delta').
    """
    psi = _as_pure(state, rng)
    if psi.dim * v.algorithm.ancilla_dim * 3 > max_dim * 3:
        raise qsim.DimensionError("dilated dimension exceeds cap")
    t = alternation_pairs(epsilon, delta)
    values, comps, masses = _class_components(v, psi, witness_labels)
    overlaps = _jordan_overlaps(values)
    walk = qsim.sample_alternating_walk(masses, overlaps, 2 * t, rng,
                                        completion_cap=2 * t)
    value = walk.repeats / t - 0.5
    est = Estimate(value, epsilon, delta, 2 * t + 1)
    if walk.reset_success:
        post = qsim.reweight_classes(comps, overlaps, walk)
    else:
        # completion phase exhausted (probability <= (3/4)^t): the flag
        # registers stay entangled; collapse to the sampled class, which is
        # what tracing them out yields up to the same tail
        c = comps[walk.sampled_class]
        post = c / np.linalg.norm(c)
    return est, StateVector(post, list(psi.layout))


def valest_measurement(v: QmaVerifier, epsilon: float, delta: float,
                       witness_labels: list[str] | None = None):
    """Closure form of the estimator, for feeding into repair."""

    def m(state, rng):
        est, post = val_est(v, state, epsilon, delta, rng,
                            witness_labels=witness_labels)
        return est.value, post

    return m


def valest_accept_tail(v: QmaVerifier, state: StateVector, p_star: float,
                       epsilon: float, delta: float,
                       witness_labels: list[str] | None = None) -> float:
    """Exact Pr[estimate >= p_star] from class masses and binomial tails."""
    t = alternation_pairs(epsilon, delta)
    values, comps, masses = _class_components(v, state, witness_labels)
    overlaps = _jordan_overlaps(values)
    r_min = math.ceil((p_star + 0.5) * t - 1e-12)
    tails = binom.sf(r_min - 1, 2 * t, overlaps)
    return float(np.dot(masses, tails))


def eigenstate_deviation_bound(epsilon: float, delta: float) -> float:
    """Hoeffding bound on Pr[|estimate - p| > epsilon] for an eigenstate."""
    t = alternation_pairs(epsilon, delta)
    return min(1.0, 2.0 * math.exp(-t * epsilon ** 2))


# ---------------------------------------------------------------------------
# Register-level reference implementation
# ---------------------------------------------------------------------------

_TOP = 1  # flag register basis: 0 = run the verifier, 1 = auto-win, 2 = auto-lose
_BOT = 2


def _flag_plus() -> np.ndarray:
    return np.array([1.0 / math.sqrt(2), 0.5, 0.5], dtype=complex)


def val_est_reference(v: QmaVerifier, state: StateVector, epsilon: float,
                      delta: float, rng: np.random.Generator,
                      pairs_override: int | None = None
                      ) -> tuple[Estimate, StateVector]:
    """Dense register-level estimator walk; oracle for the fast path.

    Appends the verifier ancilla (reset register) and a three-level flag
    register prepared in (|0> + (|top> + |bot>)/sqrt(2))/sqrt(2), then
    alternates the measurement pair for t rounds plus a completion phase.
    """
    t = pairs_override or alternation_pairs(epsilon, delta)
    d = state.dim
    d_anc = v.algorithm.ancilla_dim
    dilated = v.algorithm.dilation_unitary.conj().T @ \
        v.algorithm.accept_projector @ v.algorithm.dilation_unitary
    flag0 = np.diag([1.0, 0.0, 0.0])
    flag_top = np.diag([0.0, 1.0, 0.0])
    pi_g = np.kron(dilated, flag0) + np.kron(np.eye(d * d_anc), flag_top)
    plus = _flag_plus()
    reset_vec = np.kron(qsim._zero_vec(d_anc), plus)
    pi_reset = np.kron(np.eye(d), np.outer(reset_vec, reset_vec.conj()))

    joint = qsim.append_register(state, "_r", qsim._zero_vec(d_anc))
    joint = qsim.append_register(joint, "_t", plus)
    labels = joint.labels()
    eye = np.eye(d * d_anc * 3)

    def measure(proj, st):
        outcome, post = qsim.measure_projective(
            st, [proj, eye - proj], rng, labels)
        return 1 - outcome, post  # outcome 1 = projected onto proj

    outcomes = []
    for _ in range(t):
        o1, joint = measure(pi_g, joint)
        o2, joint = measure(pi_reset, joint)
        outcomes.extend([o1, o2])
    reset_ok = outcomes[-1] == 1
    if not reset_ok:
        for _ in range(t):
            _, joint = measure(pi_g, joint)
            o2, joint = measure(pi_reset, joint)
            if o2 == 1:
                reset_ok = True
                break
    seq = [1] + outcomes
    repeats = sum(1 for a, b in zip(seq, seq[1:]) if a == b)
    est = Estimate(repeats / t - 0.5, epsilon, delta, 2 * t + 1)

    if reset_ok:
        # reset image is product: peel off both ancilla registers exactly
        tensor = joint.tensor().reshape(d, d_anc * 3)
        psi = tensor @ reset_vec.conj()
        psi = psi / np.linalg.norm(psi)
    else:
        _, joint = qsim.measure_registers(joint, ["_r", "_t"], rng)
        red = qsim.partial_trace(joint, state.labels())
        psi = red.eigen_ensemble()[0][1].amplitudes
    return est, StateVector(psi, list(state.layout))


# ---------------------------------------------------------------------------
# Jordan decomposition of a projector pair
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class JordanBlock:
    value: float
    basis_b: StateVector
    basis_a: StateVector | None
    one_dim: bool


@dataclass(frozen=True)
class JordanDecomposition:
    blocks: list = field(default_factory=list)

    def values(self) -> np.ndarray:
        return np.array([b.value for b in self.blocks])


def jordan_decompose(pi_a: np.ndarray, pi_b: np.ndarray,
                     tol: float = 1e-8) -> JordanDecomposition:
    """Block decomposition of a projector pair.

    Eigendecomposes Pi_B Pi_A Pi_B restricted to range(Pi_B); block values are
    the squared overlaps of the paired block vectors. A-side vectors come from
    normalizing Pi_A applied to the B-side vector; blocks with value 0 or 1
    are one-dimensional. Blocks are sorted by ascending value with the
    first-nonzero-component-real-positive phase convention.
    """
    pi_a = np.asarray(pi_a, dtype=complex)
    pi_b = np.asarray(pi_b, dtype=complex)
    for p in (pi_a, pi_b):
        if not qsim.is_projector(p, tol=tol):
            raise ValueError("input is not an idempotent Hermitian projector")
    evals_b, evecs_b = np.linalg.eigh(pi_b)
    cols = evecs_b[:, evals_b > 0.5]
    if cols.shape[1] == 0:
        return JordanDecomposition([])
    m = cols.conj().T @ pi_a @ cols
    vals, vecs = np.linalg.eigh(0.5 * (m + m.conj().T))
    layout = [("q", pi_b.shape[0])]
    blocks = []
    for i in np.argsort(vals):
        p = float(np.clip(vals[i], 0.0, 1.0))
        b_vec = qsim._canonical_phase(cols @ vecs[:, i])
        one_dim = p < tol or p > 1.0 - tol
        a_vec = None
        if not one_dim:
            av = pi_a @ b_vec
            a_vec = StateVector(qsim._canonical_phase(av / np.linalg.norm(av)),
                                list(layout))
        elif p > 1.0 - tol:
            a_vec = StateVector(b_vec, list(layout))
        blocks.append(JordanBlock(p, StateVector(b_vec, list(layout)),
                                  a_vec, bool(one_dim)))
    return JordanDecomposition(blocks)


# ---------------------------------------------------------------------------
# Repair
# ---------------------------------------------------------------------------


@dataclass
class ProjectiveMeasurement:
    """N-outcome projective measurement over given target registers."""

    projectors: list
    targets: list | None = None

    def measure(self, state: StateVector, rng: np.random.Generator):
        return qsim.measure_projective(state, self.projectors, rng,
                                       self.targets or state.labels())

    @property
    def num_outcomes(self) -> int:
        return len(self.projectors)


@dataclass
class RepairResult:
    state: StateVector
    final_estimate: float
    m_calls: int
    pi_calls: int
    succeeded: bool

    @property
    def oracle_calls(self) -> int:
        return self.m_calls + self.pi_calls


def repair(m, pi: ProjectiveMeasurement, state: StateVector, outcome_y,
           p: float, t_max: int, rng: np.random.Generator,
           epsilon: float) -> RepairResult:
    """Alternate the damaging measurement against the estimator until an
    estimate lands within epsilon of p, or t_max estimator calls are spent.

    A fresh estimator run on the returned state then lands within 2*epsilon
    of p except with the contract's O(N sqrt(delta)) failure mass. Exhausting
    t_max surfaces as succeeded=False so callers can count repair failures.
    """
    del outcome_y  # recorded by callers; the loop re-randomizes via pi
    m_calls = pi_calls = 0
    value, state = m(state, rng)
    m_calls += 1
    while abs(value - p) > epsilon and m_calls < t_max:
        _, state = pi.measure(state, rng)
        pi_calls += 1
        value, state = m(state, rng)
        m_calls += 1
    return RepairResult(state, value, m_calls, pi_calls,
                        abs(value - p) <= epsilon)


def default_repair_budget(delta: float) -> int:
    return int(math.ceil(1.0 / math.sqrt(delta)))


def repair_failure_bound(n_outcomes: int, delta: float, t_max: int) -> float:
    """Contract bound on Pr[|p** - p| >= 2 eps]: N (delta + 1/T) + 4 sqrt(delta)."""
    return min(1.0, n_outcomes * (delta + 1.0 / t_max) + 4.0 * math.sqrt(delta))


# ---------------------------------------------------------------------------
# Repairable-set classification and purity diagnostics
# ---------------------------------------------------------------------------


@dataclass
class RepairableVerdict:
    fraction_below: float
    verdict: bool
    threshold: float
    trials: int


def classify_repairable(state, v: QmaVerifier, p: float, epsilon: float,
                        lam: int, trials: int, rng: np.random.Generator,
                        witness_labels: list[str] | None = None) -> RepairableVerdict:
    """Monte-Carlo membership check for the repairable set at (p, epsilon).

    Estimates Pr[estimate < p - epsilon] under fresh estimator runs at
    delta = 2^-lam; membership requires the fraction to stay at or below
    sqrt(2 delta) plus three standard errors of that null bound.
    """
    if trials < 1:
        raise ValueError("trials >= 1 required")
    delta = 2.0 ** (-lam)
    below = 0
    for trial_rng in qsim.spawn_rngs(rng.integers(2 ** 63), trials):
        est, _ = val_est(v, state, epsilon, delta, trial_rng,
                         witness_labels=witness_labels)
        if est.value < p - epsilon:
            below += 1
    fraction = below / trials
    bound = math.sqrt(2.0 * delta)
    sigma = math.sqrt(max(bound * (1.0 - bound), 1.0 / trials) / trials)
    threshold = bound + 3.0 * sigma
    return RepairableVerdict(fraction, fraction <= threshold, threshold, trials)


@dataclass
class PurityReport:
    q_good: float
    q_bad: float
    bad_bound: float
    bound_ok: bool
    good_accept_floor: float
    support_accept_probs: list


def repaired_purity_diagnostic(rho: DensityMatrix, v: QmaVerifier,
                               p_star: float, epsilon: float, delta: float,
                               gamma: float) -> PurityReport:
    """Good/bad split of rho against the thresholded-estimate measurement.

    The binary measurement accepts when a fresh estimate lands at or above
    p_star; its per-eigenvector acceptance probability is computed exactly
    from binomial tails. Verifies the precondition Pr[accept] >= 1 - gamma,
    asserts q_bad <= sqrt(gamma), and reports the direct acceptance floor
    p_star - sqrt(gamma) - epsilon - delta on the good support.
    """

    def accept(s: StateVector) -> float:
        return valest_accept_tail(v, s, p_star, epsilon, delta)

    q_good, rho_good, q_bad, _ = qsim.good_bad_decomposition(rho, accept, gamma)
    floor = p_star - math.sqrt(gamma) - epsilon - delta
    support = []
    if rho_good is not None:
        for w, s in rho_good.eigen_ensemble():
            support.append((w, v.accept_prob(s)))
    return PurityReport(q_good, q_bad, math.sqrt(gamma),
                        q_bad <= math.sqrt(gamma) + 1e-9, floor, support)


def diagnostic_record(seed, p_star, estimates, oracle_calls, verdict) -> dict:
    """JSON-ready repair/estimation diagnostic record."""
    return {
        "seed": int(seed),
        "p_star": float(p_star),
        "estimates": [float(e) for e in estimates],
        "oracle_calls": int(oracle_calls),
        "verdict": bool(verdict),
    }
