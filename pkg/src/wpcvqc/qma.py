"""QMA verifier abstraction, eigenspace tooling, and one-witness amplification.

Toy verifier families (diagonal spectra, Haar-random dilations) are shipped as
fixtures so concentration experiments can dial in exact spectra.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from . import qsim
from .qsim import (DEFAULT_MAX_DIM, QuantumAlgorithm, StateVector,
                   acceptance_operator, _canonical_phase)

GAP_FLOOR = 0.05
DEFAULT_A = 2.0 / 3.0
DEFAULT_B = 1.0 / 3.0

# Iteration count for the amplifier: k = ceil(MW_CONSTANT * lam / (a-b)^2)
# gives a one-sided Hoeffding tail exp(-4 lam) <= 2^-lam on the repeat
# fraction.
MW_CONSTANT = 8.0


@dataclass(frozen=True)
class QmaVerifier:
    """Binary-outcome verifier with acceptance thresholds (a, b)."""

    instance_label: str
    algorithm: QuantumAlgorithm
    threshold_a: float = DEFAULT_A
    threshold_b: float = DEFAULT_B

    def __post_init__(self):
        if not (0.0 <= self.threshold_b < self.threshold_a <= 1.0):
            raise ValueError("need 0 <= b < a <= 1")
        if self.threshold_a - self.threshold_b < GAP_FLOOR:
            raise ValueError(f"gap a-b below floor {GAP_FLOOR}")

    @property
    def witness_dim(self) -> int:
        return self.algorithm.input_dim

    def operator(self) -> np.ndarray:
        # pure function of the frozen verifier; stash on the instance
        op = getattr(self, "_op", None)
        if op is None:
            op = acceptance_operator(self.algorithm)
            object.__setattr__(self, "_op", op)
        return op

    def accept_prob(self, state: StateVector) -> float:
        return qsim.acceptance_probability(self.operator(), state)


@dataclass(frozen=True)
class EigenSpectrum:
    """Eigenpairs of the acceptance operator, sorted by descending eigenvalue."""

    pairs: list = field(default_factory=list)  # (eigenvalue, StateVector)

    def eigenvalues(self) -> np.ndarray:
        return np.array([p for p, _ in self.pairs])

    def nearest(self, target: float):
        best = min(self.pairs, key=lambda pv: abs(pv[0] - target))
        return best


def eigen_spectrum(v: QmaVerifier, max_dim: int = DEFAULT_MAX_DIM) -> EigenSpectrum:
    """Full Hermitian eigendecomposition of the acceptance operator."""
    op = v.operator()
    if op.shape[0] > max_dim:
        raise qsim.DimensionError(f"dimension {op.shape[0]} exceeds cap {max_dim}")
    evals, evecs = np.linalg.eigh(op)
    order = np.argsort(evals)[::-1]
    layout = [("w", op.shape[0])]
    pairs = [(float(np.clip(evals[i], 0.0, 1.0)),
              StateVector(_canonical_phase(evecs[:, i]), list(layout)))
             for i in order]
    return EigenSpectrum(pairs)


def eigenvalue_classes(v: QmaVerifier, tol: float = 1e-9):
    """Distinct eigenvalues with their eigenprojector column blocks.

    Returns (values, bases) where bases[k] is a (dim x mult) orthonormal
    column block for eigenvalue values[k], ascending.
    """
    cached = getattr(v, "_classes", None)
    if cached is not None:
        return cached
    op = v.operator()
    evals, evecs = np.linalg.eigh(op)
    evals = np.clip(evals, 0.0, 1.0)
    values: list[float] = []
    blocks: list[list[int]] = []
    for i, ev in enumerate(evals):
        if values and abs(ev - values[-1]) <= tol:
            blocks[-1].append(i)
        else:
            values.append(float(ev))
            blocks.append([i])
    out = (np.array(values), [evecs[:, idx] for idx in blocks])
    object.__setattr__(v, "_classes", out)
    return out


def make_witness(spectrum: EigenSpectrum, target_p: float,
                 superposition: bool = False, tol: float = 1e-6) -> StateVector:
    """Eigenstate (or two-eigenstate mix) achieving acceptance target_p.

    Without superposition mode the nearest eigenvalue must lie within tol of
    the target. In superposition mode a bracketing eigenvalue pair is combined
    with weights solving th*p1 + (1-th)*p2 = target_p.
    """
    p, vec = spectrum.nearest(target_p)
    if abs(p - target_p) <= tol:
        return vec
    if not superposition:
        raise ValueError(f"no eigenvalue within {tol} of {target_p}")
    above = [(q, s) for q, s in spectrum.pairs if q >= target_p]
    below = [(q, s) for q, s in spectrum.pairs if q <= target_p]
    if not above or not below:
        raise ValueError(f"no eigenvalue pair bracketing {target_p}")
    p1, s1 = min(above, key=lambda qs: qs[0])
    p2, s2 = max(below, key=lambda qs: qs[0])
    th = (target_p - p2) / (p1 - p2)
    amps = math.sqrt(th) * s1.amplitudes + math.sqrt(1.0 - th) * s2.amplitudes
    return StateVector(amps / np.linalg.norm(amps), list(s1.layout))


def mw_iterations(lam: int, a: float, b: float) -> int:
    # even so the scored walk always ends on a reset measurement
    k = int(math.ceil(MW_CONSTANT * lam / (a - b) ** 2))
    return k + (k % 2)


def mw_amplify(v: QmaVerifier, lam: int, state: StateVector,
               rng: np.random.Generator) -> tuple[bool, StateVector]:
    """One-witness amplification by alternating projections.

    Applies the dilated accept projector and the ancilla-reset projector in
    alternation for k(lam, a, b) scored measurements, accepting when the
    fraction of repeated outcomes exceeds (a+b)/2. Eigenstates with eigenvalue
    >= a are accepted except with probability 2^-lam, eigenvalue <= b ones are
    rejected likewise, and accepting runs return eigenstates intact (the walk
    is steered back to the reset image before the ancilla is discarded).
    """
    if lam < 1:
        raise ValueError("lam >= 1 required")
    k = mw_iterations(lam, v.threshold_a, v.threshold_b)
    values, bases = eigenvalue_classes(v)
    psi = state.amplitudes
    comps = [basis @ (basis.conj().T @ psi) for basis in bases]
    masses = np.array([float(np.vdot(c, c).real) for c in comps])
    keep = masses > 1e-30
    values, masses = values[keep], masses[keep]
    comps = [c for c, k_ in zip(comps, keep) if k_]
    walk = qsim.sample_alternating_walk(masses, values, k, rng,
                                        completion_cap=2 * k)
    accept = walk.repeats / walk.steps > (v.threshold_a + v.threshold_b) / 2.0
    post = qsim.reweight_classes(comps, np.clip(values, 1e-12, 1 - 1e-12), walk)
    return bool(accept), StateVector(post, list(state.layout))


def mw_accept_probability(eigenvalue: float, lam: int, a: float, b: float) -> float:
    """Binomial-law acceptance rate of the amplifier on an eigenstate."""
    from scipy.stats import binom

    k = mw_iterations(lam, a, b)
    threshold = math.floor((a + b) / 2.0 * k)  # accept iff repeats > threshold
    return float(binom.sf(threshold, k, eigenvalue))


# ---------------------------------------------------------------------------
# Fixture verifier families
# ---------------------------------------------------------------------------


def diagonal_verifier(spectrum, a: float = DEFAULT_A, b: float = DEFAULT_B,
                      label: str = "diag") -> QmaVerifier:
    """Verifier whose acceptance operator is diag(spectrum).

    Dilated with one ancilla qubit: a controlled rotation writes each
    amplitude's accept weight onto the ancilla, and the accept projector reads
    the ancilla's |1>.
    """
    spectrum = np.asarray(spectrum, dtype=float)
    d = len(spectrum)
    u = np.zeros((2 * d, 2 * d), dtype=complex)
    for i, p in enumerate(spectrum):
        c, s = math.sqrt(1.0 - p), math.sqrt(p)
        # basis order: (input i) (x) (ancilla bit)
        u[2 * i, 2 * i] = c
        u[2 * i + 1, 2 * i] = s
        u[2 * i, 2 * i + 1] = -s
        u[2 * i + 1, 2 * i + 1] = c
    accept = np.kron(np.eye(d), np.diag([0.0, 1.0]))
    alg = QuantumAlgorithm(u, accept, [2])
    return QmaVerifier(label, alg, a, b)


def haar_unitary(dim: int, rng: np.random.Generator) -> np.ndarray:
    z = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    q, r = np.linalg.qr(z)
    return q * (np.diag(r) / np.abs(np.diag(r)))


def haar_verifier(num_witness_qubits: int, rng: np.random.Generator,
                  a: float = DEFAULT_A, b: float = DEFAULT_B,
                  label: str = "haar") -> QmaVerifier:
    """Haar-random-dilation verifier on <= 4 witness qubits."""
    if num_witness_qubits > 4:
        raise ValueError("fixture family capped at 4 witness qubits")
    d = 2 ** num_witness_qubits
    u = haar_unitary(2 * d, rng)
    accept = np.kron(np.eye(d), np.diag([0.0, 1.0]))
    alg = QuantumAlgorithm(u, accept, [2])
    return QmaVerifier(label, alg, a, b)


# ---------------------------------------------------------------------------
# JSON serialization of fixture verifiers (operator entries as re/im pairs,
# row-major)
# ---------------------------------------------------------------------------


def _matrix_to_json(m: np.ndarray):
    return [[[float(x.real), float(x.imag)] for x in row] for row in np.asarray(m, dtype=complex)]


def _matrix_from_json(rows) -> np.ndarray:
    return np.array([[complex(re, im) for re, im in row] for row in rows])


def verifier_to_json(v: QmaVerifier) -> str:
    doc = {
        "instance_label": v.instance_label,
        "threshold_a": v.threshold_a,
        "threshold_b": v.threshold_b,
        "ancilla_dims": list(v.algorithm.ancilla_dims),
        "dilation_unitary": _matrix_to_json(v.algorithm.dilation_unitary),
        "accept_projector": _matrix_to_json(v.algorithm.accept_projector),
    }
    return json.dumps(doc, sort_keys=True)


def verifier_from_json(text: str) -> QmaVerifier:
    doc = json.loads(text)
    alg = QuantumAlgorithm(
        _matrix_from_json(doc["dilation_unitary"]),
        _matrix_from_json(doc["accept_projector"]),
        list(doc["ancilla_dims"]))
    return QmaVerifier(doc["instance_label"], alg,
                       doc["threshold_a"], doc["threshold_b"])
