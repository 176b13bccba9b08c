"""Dense finite-dimensional quantum simulation core.

States live over ordered register layouts (label, local dimension). Everything
is a pure function of its inputs plus an explicit seeded random generator, so
protocol runs replay bit-for-bit.

Numerical tolerance tiers used throughout the package:
construction checks 1e-9, assertion checks 1e-6, Monte-Carlo checks 3 standard
errors.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

CONSTRUCTION_TOL = 1e-9
ASSERTION_TOL = 1e-6
DEFAULT_MAX_DIM = 2 ** 14

Layout = list[tuple[str, int]]


def make_rng(seed) -> np.random.Generator:
    """Single seedable randomness source; pass the Generator explicitly."""
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.Generator(np.random.PCG64(seed))


def spawn_rngs(seed, n: int) -> list[np.random.Generator]:
    """Independent per-trial generators with reproducible derivation."""
    return [np.random.Generator(np.random.PCG64(s))
            for s in np.random.SeedSequence(seed).spawn(n)]


class DimensionError(ValueError):
    pass


class MeasurementError(ValueError):
    pass


def _layout_dim(layout: Layout) -> int:
    d = 1
    for _, k in layout:
        d *= k
    return d


@dataclass(frozen=True)
class StateVector:
    """Complex-amplitude pure state over a registered layout.

    amplitudes are indexed row-major over the layout's register values.
    """

    amplitudes: np.ndarray
    layout: Layout = field(default_factory=list)

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=complex)
        object.__setattr__(self, "amplitudes", amps)
        if not self.layout:
            object.__setattr__(self, "layout", [("q", len(amps))])
        if _layout_dim(self.layout) != len(amps):
            raise DimensionError(
                f"layout dims product {_layout_dim(self.layout)} != "
                f"amplitude length {len(amps)}")
        sqnorm = float(np.vdot(amps, amps).real)
        if abs(sqnorm - 1.0) > CONSTRUCTION_TOL:
            raise ValueError(f"state squared norm {sqnorm} not 1")

    @property
    def dim(self) -> int:
        return len(self.amplitudes)

    def labels(self) -> list[str]:
        return [name for name, _ in self.layout]

    def register_dim(self, label: str) -> int:
        for name, k in self.layout:
            if name == label:
                return k
        raise KeyError(label)

    def axes_of(self, labels: list[str]) -> list[int]:
        pos = {name: i for i, (name, _) in enumerate(self.layout)}
        return [pos[lab] for lab in labels]

    def tensor(self) -> np.ndarray:
        return self.amplitudes.reshape([k for _, k in self.layout])

    def to_density(self) -> "DensityMatrix":
        m = np.outer(self.amplitudes, self.amplitudes.conj())
        return DensityMatrix(m, list(self.layout))

    def overlap(self, other: "StateVector") -> complex:
        return complex(np.vdot(self.amplitudes, other.amplitudes))

    def fidelity(self, other: "StateVector") -> float:
        return abs(self.overlap(other)) ** 2


@dataclass(frozen=True)
class DensityMatrix:
    """Hermitian, unit-trace, PSD (within 1e-9) operator over a layout."""

    matrix: np.ndarray
    layout: Layout = field(default_factory=list)

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        object.__setattr__(self, "matrix", m)
        if not self.layout:
            object.__setattr__(self, "layout", [("q", m.shape[0])])
        if m.shape[0] != m.shape[1] or _layout_dim(self.layout) != m.shape[0]:
            raise DimensionError("density matrix shape/layout mismatch")
        if np.max(np.abs(m - m.conj().T)) > CONSTRUCTION_TOL:
            raise ValueError("density matrix not Hermitian")
        if abs(np.trace(m).real - 1.0) > CONSTRUCTION_TOL:
            raise ValueError("density matrix trace not 1")
        evals = np.linalg.eigvalsh(m)
        if evals.min() < -CONSTRUCTION_TOL:
            raise ValueError(f"density matrix has eigenvalue {evals.min()}")

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def eigen_ensemble(self, tol: float = 1e-12):
        """Spectral ensemble (weights, StateVectors), heaviest first."""
        evals, evecs = np.linalg.eigh(self.matrix)
        order = np.argsort(evals)[::-1]
        out = []
        for idx in order:
            w = float(max(evals[idx], 0.0))
            if w <= tol:
                continue
            v = _canonical_phase(evecs[:, idx])
            out.append((w, StateVector(v, list(self.layout))))
        total = sum(w for w, _ in out)
        return [(w / total, s) for w, s in out]


def _canonical_phase(vec: np.ndarray, tol: float = 1e-12) -> np.ndarray:
    """First nonzero component made real-positive; reproducible bases."""
    v = np.asarray(vec, dtype=complex)
    for x in v:
        if abs(x) > tol:
            return v * (abs(x) / x)
    return v


def basis_state(layout: Layout, values: dict[str, int] | None = None) -> StateVector:
    values = values or {}
    dims = [k for _, k in layout]
    idx = 0
    for (name, k) in layout:
        idx = idx * k + values.get(name, 0)
    amps = np.zeros(int(np.prod(dims)), dtype=complex)
    amps[idx] = 1.0
    return StateVector(amps, list(layout))


def product_state(parts: list[tuple[str, np.ndarray]]) -> StateVector:
    """Kron of per-register amplitude vectors, in the given register order."""
    amps = np.array([1.0], dtype=complex)
    layout: Layout = []
    for name, vec in parts:
        vec = np.asarray(vec, dtype=complex)
        amps = np.kron(amps, vec)
        layout.append((name, len(vec)))
    amps = amps / np.linalg.norm(amps)
    return StateVector(amps, layout)


def _lift_to_targets(state: StateVector, op: np.ndarray, targets: list[str]) -> np.ndarray:
    """Apply op on target registers, identity elsewhere; returns amplitudes."""
    tensor = state.tensor()
    axes = state.axes_of(targets)
    ndim = tensor.ndim
    rest = [a for a in range(ndim) if a not in axes]
    perm = axes + rest
    t = np.transpose(tensor, perm)
    d_t = int(np.prod([t.shape[i] for i in range(len(axes))])) if axes else 1
    mat = t.reshape(d_t, -1)
    if op.shape != (d_t, d_t):
        raise DimensionError(
            f"operator shape {op.shape} does not match target dim {d_t}")
    out = op @ mat
    out = out.reshape(t.shape)
    inv = np.argsort(perm)
    return np.transpose(out, inv).reshape(state.dim)


def is_unitary(u: np.ndarray, tol: float = ASSERTION_TOL) -> bool:
    u = np.asarray(u, dtype=complex)
    return u.shape[0] == u.shape[1] and \
        np.max(np.abs(u.conj().T @ u - np.eye(u.shape[0]))) <= tol


def is_projector(p: np.ndarray, tol: float = 1e-8) -> bool:
    p = np.asarray(p, dtype=complex)
    return np.max(np.abs(p - p.conj().T)) <= tol and \
        np.max(np.abs(p @ p - p)) <= tol


def apply_unitary(state: StateVector, u: np.ndarray, targets: list[str] | None = None) -> StateVector:
    """u applied to the target registers, identity elsewhere; norm preserved."""
    u = np.asarray(u, dtype=complex)
    targets = targets if targets is not None else state.labels()
    if not is_unitary(u):
        raise ValueError("operator fails unitarity check at 1e-6")
    amps = _lift_to_targets(state, u, targets)
    amps = amps / np.linalg.norm(amps)
    return StateVector(amps, list(state.layout))


def apply_operator_unnormalized(state: StateVector, op: np.ndarray,
                                targets: list[str] | None = None) -> np.ndarray:
    targets = targets if targets is not None else state.labels()
    return _lift_to_targets(state, np.asarray(op, dtype=complex), targets)


def measure_projective(state: StateVector, projectors: list[np.ndarray],
                       rng: np.random.Generator,
                       targets: list[str] | None = None) -> tuple[int, StateVector]:
    """Projective measurement from a resolution of identity.

    Outcome i is drawn with probability ||Pi_i psi||^2 and the post-state is
    the renormalized projection.
    """
    targets = targets if targets is not None else state.labels()
    d = int(np.prod([state.register_dim(t) for t in targets]))
    total = np.zeros((d, d), dtype=complex)
    for p in projectors:
        p = np.asarray(p, dtype=complex)
        if not is_projector(p):
            raise MeasurementError("measurement element is not a projector")
        total = total + p
    for i, p in enumerate(projectors):
        for q in projectors[i + 1:]:
            if np.max(np.abs(np.asarray(p) @ np.asarray(q))) > 1e-8:
                raise MeasurementError("projectors not pairwise orthogonal")
    if np.max(np.abs(total - np.eye(d))) > 1e-9:
        raise MeasurementError("projector set is not a resolution of identity")
    branches = [apply_operator_unnormalized(state, p, targets) for p in projectors]
    probs = np.array([float(np.vdot(b, b).real) for b in branches])
    probs = np.clip(probs, 0.0, None)
    probs = probs / probs.sum()
    outcome = int(rng.choice(len(projectors), p=probs))
    post = branches[outcome] / np.linalg.norm(branches[outcome])
    return outcome, StateVector(post, list(state.layout))


def measure_registers(state: StateVector, labels: list[str],
                      rng: np.random.Generator) -> tuple[tuple[int, ...], StateVector]:
    """Computational-basis measurement of whole registers."""
    return measure_value_function(
        state, labels, lambda vals: tuple(vals), rng)


def measure_value_function(state: StateVector, labels: list[str], fn,
                           rng: np.random.Generator):
    """Measure a classical function of register values (diagonal measurement).

    fn maps a tuple of register values (in `labels` order) to a hashable
    outcome. Equivalent to coherently computing fn into a fresh register and
    measuring it, without materializing that register.
    """
    tensor = state.tensor()
    axes = state.axes_of(labels)
    ndim = tensor.ndim
    rest = [a for a in range(ndim) if a not in axes]
    t = np.transpose(tensor, axes + rest)
    dims = [t.shape[i] for i in range(len(axes))]
    flat = t.reshape(int(np.prod(dims)) if dims else 1, -1)
    weights = np.sum(np.abs(flat) ** 2, axis=1)
    outcomes: dict = {}
    for row in range(flat.shape[0]):
        if weights[row] <= 0.0:
            continue
        vals = np.unravel_index(row, dims) if dims else ()
        key = fn(tuple(int(v) for v in vals))
        if key not in outcomes:
            outcomes[key] = []
        outcomes[key].append(row)
    keys = list(outcomes.keys())
    probs = np.array([sum(weights[r] for r in outcomes[k]) for k in keys])
    probs = probs / probs.sum()
    pick = keys[int(rng.choice(len(keys), p=probs))]
    mask = np.zeros(flat.shape[0], dtype=bool)
    mask[outcomes[pick]] = True
    post = np.where(mask[:, None], flat, 0.0)
    post = post / np.linalg.norm(post)
    post = post.reshape(t.shape)
    inv = np.argsort(axes + rest)
    post = np.transpose(post, inv).reshape(state.dim)
    return pick, StateVector(post, list(state.layout))


def apply_basis_map(state: StateVector, labels: list[str], fn) -> StateVector:
    """Permute computational-basis values of the target registers.

    fn maps a tuple of register values to a new tuple; it must be a bijection
    on the product of the target registers (classical reversible computation).
    """
    tensor = state.tensor()
    axes = state.axes_of(labels)
    rest = [a for a in range(tensor.ndim) if a not in axes]
    t = np.transpose(tensor, axes + rest)
    dims = [t.shape[i] for i in range(len(axes))]
    d = int(np.prod(dims)) if dims else 1
    flat = t.reshape(d, -1)
    perm = np.empty(d, dtype=np.int64)
    for row in range(d):
        vals = np.unravel_index(row, dims) if dims else ()
        new_vals = fn(tuple(int(v) for v in vals))
        perm[row] = int(np.ravel_multi_index(new_vals, dims)) if dims else 0
    if len(np.unique(perm)) != d:
        raise ValueError("basis map is not a bijection")
    out = np.zeros_like(flat)
    out[perm] = flat
    out = out.reshape(t.shape)
    inv = np.argsort(axes + rest)
    return StateVector(np.transpose(out, inv).reshape(state.dim),
                       list(state.layout))


def append_register(state: StateVector, label: str, vec: np.ndarray) -> StateVector:
    vec = np.asarray(vec, dtype=complex)
    amps = np.kron(state.amplitudes, vec / np.linalg.norm(vec))
    return StateVector(amps, list(state.layout) + [(label, len(vec))])


def project_register(state: StateVector, label: str, value: int,
                     tol: float = ASSERTION_TOL) -> StateVector:
    """Drop a register known to hold a basis value (errors if it does not)."""
    tensor = state.tensor()
    axis = state.axes_of([label])[0]
    sl = [slice(None)] * tensor.ndim
    sl[axis] = value
    kept = tensor[tuple(sl)]
    norm = np.linalg.norm(kept)
    if abs(norm - 1.0) > math.sqrt(tol):
        raise ValueError(f"register {label} not concentrated on {value} "
                         f"(mass {norm ** 2:.3g})")
    layout = [(n, k) for n, k in state.layout if n != label]
    return StateVector(kept.reshape(-1) / norm, layout)


def partial_trace(state: StateVector | DensityMatrix, keep: list[str]) -> DensityMatrix:
    """Reduced density matrix over the `keep` registers (in layout order)."""
    layout = state.layout
    keep_set = set(keep)
    keep_axes = [i for i, (n, _) in enumerate(layout) if n in keep_set]
    rest_axes = [i for i, (n, _) in enumerate(layout) if n not in keep_set]
    dims = [k for _, k in layout]
    dk = int(np.prod([dims[i] for i in keep_axes])) if keep_axes else 1
    if isinstance(state, StateVector):
        t = np.transpose(state.tensor(), keep_axes + rest_axes).reshape(dk, -1)
        rho = t @ t.conj().T
    else:
        n = len(dims)
        dr = int(np.prod(dims)) // dk
        t = state.matrix.reshape(dims + dims)
        perm = keep_axes + rest_axes
        t = np.transpose(t, perm + [a + n for a in perm])
        rho = np.einsum("arbr->ab", t.reshape(dk, dr, dk, dr))
    new_layout = [layout[i] for i in keep_axes]
    return DensityMatrix(rho, new_layout)


@dataclass(frozen=True)
class QuantumAlgorithm:
    """Binary-outcome algorithm: unitary dilation plus an accept projector.

    The dilation acts on input (x) ancilla; ancilla registers start at |0>.
    """

    dilation_unitary: np.ndarray
    accept_projector: np.ndarray
    ancilla_dims: list[int]

    def __post_init__(self):
        u = np.asarray(self.dilation_unitary, dtype=complex)
        p = np.asarray(self.accept_projector, dtype=complex)
        object.__setattr__(self, "dilation_unitary", u)
        object.__setattr__(self, "accept_projector", p)
        if not is_unitary(u, tol=1e-8):
            raise ValueError("dilation is not unitary within tolerance")
        if not is_projector(p):
            raise ValueError("accept projector fails idempotent/Hermitian check")
        if u.shape != p.shape:
            raise DimensionError("dilation and projector dims differ")

    @property
    def ancilla_dim(self) -> int:
        return int(np.prod(self.ancilla_dims)) if self.ancilla_dims else 1

    @property
    def input_dim(self) -> int:
        return self.dilation_unitary.shape[0] // self.ancilla_dim


def acceptance_operator(alg: QuantumAlgorithm) -> np.ndarray:
    """Hermitian operator whose expectation is the acceptance probability.

    Contracts the dilation against the |0> ancilla: (I (x) <0|) U^dag P U
    (I (x) |0>). Spectrum lies in [0, 1] up to float noise.
    """
    d_in, d_anc = alg.input_dim, alg.ancilla_dim
    u = alg.dilation_unitary
    m = u.conj().T @ alg.accept_projector @ u
    m = m.reshape(d_in, d_anc, d_in, d_anc)
    op = m[:, 0, :, 0]
    return 0.5 * (op + op.conj().T)


def acceptance_probability(op: np.ndarray, state: StateVector) -> float:
    return float(np.real(np.vdot(state.amplitudes, op @ state.amplitudes)))


def run_algorithm(alg: QuantumAlgorithm, state: StateVector,
                  rng: np.random.Generator) -> tuple[bool, StateVector]:
    """One accept/reject shot: dilate, measure, discard ancillas.

    The returned post-state is the joint (input (x) ancilla) state after the
    accept/reject projection, with ancillas still attached.
    """
    joint = append_register(state, "_anc", _zero_vec(alg.ancilla_dim))
    labels = state.labels() + ["_anc"]
    joint = apply_unitary(joint, alg.dilation_unitary, labels)
    acc = np.asarray(alg.accept_projector)
    outcome, post = measure_projective(
        joint, [acc, np.eye(acc.shape[0]) - acc], rng, labels)
    return outcome == 0, post


def _zero_vec(dim: int) -> np.ndarray:
    v = np.zeros(dim, dtype=complex)
    v[0] = 1.0
    return v


def trace_distance(a: DensityMatrix, b: DensityMatrix) -> float:
    """(1/2)||a - b||_1 via eigenvalues of the difference."""
    if [k for _, k in a.layout] != [k for _, k in b.layout]:
        raise DimensionError("layout mismatch")
    evals = np.linalg.eigvalsh(a.matrix - b.matrix)
    return float(0.5 * np.sum(np.abs(evals)))


def trace_distance_states(a: StateVector, b: StateVector) -> float:
    """Pure-state shortcut: sqrt(1 - |<a|b>|^2)."""
    ov = abs(a.overlap(b)) ** 2
    return math.sqrt(max(0.0, 1.0 - min(ov, 1.0)))


def good_bad_decomposition(rho: DensityMatrix, accept_prob, gamma: float):
    """Split rho into orthogonal good/bad mixtures against a binary measurement.

    accept_prob maps a pure StateVector to its acceptance probability under
    the measurement. Eigenvectors accepted with probability >= 1 - sqrt(gamma)
    form the good part; the bad mass is at most sqrt(gamma).

    Returns (q_good, rho_good, q_bad, rho_bad); an empty side is returned as
    (0.0, None).
    """
    ensemble = rho.eigen_ensemble()
    overall = sum(w * accept_prob(s) for w, s in ensemble)
    if overall < 1.0 - gamma - ASSERTION_TOL:
        raise ValueError(
            f"acceptance {overall:.6f} below 1 - gamma = {1.0 - gamma:.6f}")
    thresh = 1.0 - math.sqrt(gamma)
    good, bad = [], []
    for w, s in ensemble:
        (good if accept_prob(s) >= thresh - CONSTRUCTION_TOL else bad).append((w, s))

    def _mix(part):
        if not part:
            return 0.0, None
        q = sum(w for w, _ in part)
        m = sum(w * np.outer(s.amplitudes, s.amplitudes.conj()) for w, s in part)
        return q, DensityMatrix(m / q, list(rho.layout))

    q_good, rho_good = _mix(good)
    q_bad, rho_bad = _mix(bad)
    return q_good, rho_good, q_bad, rho_bad


# ---------------------------------------------------------------------------
# Alternating two-projector measurement walks.
#
# Both the acceptance-probability estimator and the one-witness amplifier
# reduce to the same picture: a state prepared in the image of a "reset"
# projector, measured alternately against a second projector. Each Jordan
# block contributes an overlap p, and every measurement outcome repeats the
# previous one with probability exactly p. Sampling the repeat pattern once
# and reweighting each eigenvalue class by p^(R/2) (1-p)^((K-R)/2) (a global
# sign aside) reproduces the register-level walk exactly.
# ---------------------------------------------------------------------------


@dataclass
class WalkResult:
    repeats: int            # repeats among the scored steps
    steps: int              # scored steps
    extra_repeats: int      # repeats during the completion phase
    extra_steps: int
    reset_success: bool     # ended back in the reset image
    sampled_class: int
    last_outcome: int


def sample_alternating_walk(masses: np.ndarray, overlaps: np.ndarray,
                            steps: int, rng: np.random.Generator,
                            completion_cap: int | None = None) -> WalkResult:
    """Sample one outcome path of the alternating-measurement walk.

    masses: probability of each eigenvalue class in the input state.
    overlaps: per-class Jordan overlap p (repeat probability).
    steps: number of scored measurements (outcomes contribute to the repeat
        statistic, with an implicit leading outcome of 1).
    completion_cap: extra unscored measurements allowed to return the state
        to the reset image (None disables the completion phase).
    """
    k = int(rng.choice(len(masses), p=masses / masses.sum()))
    p = float(overlaps[k])
    repeats = int(rng.binomial(steps, p))
    # outcome after `steps` alternating measurements: flips once per change
    last = 1 if (steps - repeats) % 2 == 0 else 0
    extra_r = 0
    extra_n = 0
    reset_ok = True
    if completion_cap is not None and last == 0:
        # walk sits on the reject side of the reset measurement; alternate
        # (other, reset) pairs until a reset measurement yields 1
        reset_ok = False
        prev = 0
        while extra_n + 2 <= completion_cap:
            for _ in range(2):  # one non-reset then one reset measurement
                rep = rng.random() < p
                extra_n += 1
                extra_r += int(rep)
                prev = prev if rep else 1 - prev
            if prev == 1:
                reset_ok = True
                break
    return WalkResult(repeats, steps, extra_r, extra_n, reset_ok, k, last)


def reweight_classes(components: list[np.ndarray], overlaps: np.ndarray,
                     walk: WalkResult) -> np.ndarray:
    """Post-walk state: per-class amplitude weights applied in log space."""
    r = walk.repeats + walk.extra_repeats
    n = walk.steps + walk.extra_steps
    logw = 0.5 * (r * np.log(overlaps) + (n - r) * np.log1p(-overlaps))
    logw = logw - logw.max()
    out = sum(np.exp(w) * c for w, c in zip(logw, components))
    return out / np.linalg.norm(out)
