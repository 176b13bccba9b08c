"""Dual-mode trapdoor functions with state recovery.

Two instantiations sit behind one keypair interface:

* ``ideal`` - a table-keyed family over bit-strings. Recovery mode is exactly
  2^n-to-1 with exact state recovery; injective mode is the identity pairing
  (x, r). No mode indistinguishability is claimed: the family exists to drive
  full protocol simulations with exact bookkeeping.
* ``lattice`` - the LWE family with gadget trapdoors at desk-scale moduli.
  Recovery fidelity follows the configured error-width ratio; every bound is
  recomputed from the actual parameters rather than asymptotic targets.

Randomness elements, range values, and register encodings are integer-indexed
so evaluations can run coherently inside the state-vector simulator.
"""

from __future__ import annotations

import enum
import math
import struct
from dataclasses import dataclass

import numpy as np

from . import qsim
from .qsim import StateVector


class TcfMode(enum.Enum):
    RECOVERY = "recovery"
    INJECTIVE = "injective"


class DecodeFailure(Exception):
    """Gadget inversion found no preimage within the error radius."""


class NotInImage(Exception):
    """Extraction target is outside the function's image."""


# ---------------------------------------------------------------------------
# LWE parameters and the gadget trapdoor
# ---------------------------------------------------------------------------

SETUP_CONSTANT_C = 1.0  # documented constant in the B' setup ceiling


@dataclass(frozen=True)
class LweParams:
    n: int
    m: int
    q: int
    B: int
    B_prime: int
    recovery_lambda: int = 1
    recovery_exponent: int = 2  # multiplier on lambda in the width-ratio rule

    def __post_init__(self):
        if self.B > self.B_prime:
            raise ValueError("need B <= B'")
        ceiling = self.q / (2 * SETUP_CONSTANT_C *
                            math.sqrt(self.n * self.m * math.log2(self.q)))
        if self.B_prime > ceiling:
            raise ValueError(f"B' {self.B_prime} above ceiling {ceiling:.2f}")

    @property
    def has_gadget(self) -> bool:
        """m >= n*k admits a gadget trapdoor; below that (the quantum-micro
        regime) inversion enumerates the q^n secrets directly."""
        return self.m >= self.n * self.k

    @property
    def k(self) -> int:
        return int(math.ceil(math.log2(self.q)))

    @property
    def sigma(self) -> float:
        """Width of the truncated integer Gaussian: B'/3, mass renormalized."""
        return self.B_prime / 3.0

    @classmethod
    def from_security(cls, lam: int, n: int, m: int, q: int, B_prime: int,
                      recovery_exponent: int = 2) -> "LweParams":
        """Derive B from the width-ratio rule B/B' = 1/(2^(e*lam) * 2 pi m)."""
        b = max(0, int(B_prime / (2.0 ** (recovery_exponent * lam) * 2 * math.pi * m)))
        return cls(n, m, q, b, B_prime, lam, recovery_exponent)


def hellinger_sq(params: LweParams) -> float:
    """Shift sensitivity of the truncated Gaussian: 1 - exp(-2 pi m B / B')."""
    return 1.0 - math.exp(-2.0 * math.pi * params.m * params.B / params.B_prime)


def recovery_trace_bound(params: LweParams, n_bits: int = 1) -> float:
    """Per-run trace-distance bound of recover(exp(.)), additive over bits."""
    h2 = hellinger_sq(params)
    return n_bits * math.sqrt(max(0.0, 1.0 - (1.0 - h2) ** 2))


@dataclass(frozen=True)
class GadgetTrapdoor:
    params: LweParams
    a_matrix: np.ndarray   # m x n over Z_q
    t_inv: np.ndarray      # m x m: multiply to expose the gadget block

    @property
    def decode_radius(self) -> int:
        return gadget_decode_radius(self.params.q, self.params.k)


def gadget_column(q: int, k: int) -> np.ndarray:
    return np.array([pow(2, j, q) for j in range(k)], dtype=np.int64)


def _centered(v: np.ndarray, q: int) -> np.ndarray:
    return (np.asarray(v, dtype=np.int64) + q // 2) % q - q // 2


def gadget_decode_radius(q: int, k: int) -> int:
    """Half the exact minimum distance of the powers-of-two gadget code."""
    g = gadget_column(q, k)
    d = np.arange(1, q, dtype=np.int64)
    residues = np.abs(_centered(np.outer(d, g) % q, q)).max(axis=1)
    return int((residues.min() - 1) // 2)


@dataclass(frozen=True)
class DirectTrapdoor:
    """Quantum-micro fallback: no gadget fits, invert by secret enumeration."""

    params: LweParams
    a_matrix: np.ndarray

    @property
    def decode_radius(self) -> int:
        return self.params.B_prime


def trapgen_mp(params: LweParams, rng: np.random.Generator) -> GadgetTrapdoor:
    """Gadget trapdoor generation: A = T [Abar; G], trapdoor exposes T^-1."""
    if not params.has_gadget:
        raise ValueError("m < n*ceil(log2 q): no gadget trapdoor at these "
                         "parameters, use make_trapdoor")
    n, m, q, k = params.n, params.m, params.q, params.k
    mbar = m - n * k
    g = gadget_column(q, k)
    gadget = np.zeros((n * k, n), dtype=np.int64)
    for i in range(n):
        gadget[i * k:(i + 1) * k, i] = g
    abar = rng.integers(0, q, size=(mbar, n), dtype=np.int64)
    a_prime = np.vstack([abar, gadget]) % q
    r = rng.integers(0, 2, size=(mbar, n * k), dtype=np.int64)
    t = np.block([[np.eye(mbar, dtype=np.int64), (-r) % q],
                  [np.zeros((n * k, mbar), dtype=np.int64),
                   np.eye(n * k, dtype=np.int64)]]).astype(np.int64) % q
    t_inv = np.block([[np.eye(mbar, dtype=np.int64), r],
                      [np.zeros((n * k, mbar), dtype=np.int64),
                       np.eye(n * k, dtype=np.int64)]]).astype(np.int64) % q
    a = (t @ a_prime) % q
    return GadgetTrapdoor(params, a, t_inv)


def invert_mp_batch(td: GadgetTrapdoor, ys: np.ndarray,
                    radius: int | None = None):
    """Vectorized inversion of rows y = A s + e.

    Returns (s, e, ok): per-row secrets, centered errors, and a success mask
    (failure = no candidate decodes every gadget row within the radius).
    Gadget rows sit below T^-1, so their error is never amplified by the
    trapdoor multiply.
    """
    params = td.params
    n, m, q, k = params.n, params.m, params.q, params.k
    radius = radius if radius is not None else td.decode_radius
    ys = np.atleast_2d(np.asarray(ys, dtype=np.int64)) % q
    rows = ys.shape[0]
    exposed = (ys @ td.t_inv.T) % q
    gadget_rows = exposed[:, m - n * k:]
    g = gadget_column(q, k)
    # a valid decode has |e_0| <= radius, so the first gadget row prunes the
    # candidate secrets; a candidate whose worst residual fits the radius is
    # the unique decode (2*radius is below the gadget code's min distance),
    # so rows resolve at the first passing offset
    offsets = np.arange(-radius, radius + 1, dtype=np.int64)
    offsets = offsets[np.argsort(np.abs(offsets), kind="stable")]
    s = np.zeros((rows, n), dtype=np.int64)
    ok = np.ones(rows, dtype=bool)
    for i in range(n):
        block = gadget_rows[:, i * k:(i + 1) * k]
        resolved = np.zeros(rows, dtype=bool)
        found = np.zeros(rows, dtype=np.int64)
        for off in offsets:
            open_idx = np.flatnonzero(~resolved)
            if open_idx.size == 0:
                break
            cand = (block[open_idx, 0] - off) % q
            worst = np.full(open_idx.size, abs(int(off)), dtype=np.int64)
            for j in range(1, k):
                resid = np.abs(_centered(block[open_idx, j] - cand * g[j], q))
                np.maximum(worst, resid, out=worst)
            hit = worst <= radius
            found[open_idx[hit]] = cand[hit]
            resolved[open_idx[hit]] = True
        s[:, i] = found
        ok &= resolved
    e = _centered(ys - (s @ td.a_matrix.T) % q, q)
    ok &= np.abs(e).max(axis=1) <= radius
    return s, e, ok


def make_trapdoor(params: LweParams, rng: np.random.Generator):
    if params.has_gadget:
        return trapgen_mp(params, rng)
    a = rng.integers(0, params.q, size=(params.m, params.n), dtype=np.int64)
    return DirectTrapdoor(params, a)


def _invert_direct(td: DirectTrapdoor, y: np.ndarray,
                   radius: int) -> tuple[np.ndarray, np.ndarray]:
    p = td.params
    secrets = np.array(list(np.ndindex(*([p.q] * p.n))), dtype=np.int64)
    errs = _centered(y[None, :] - (secrets @ td.a_matrix.T) % p.q, p.q)
    worst = np.abs(errs).max(axis=1)
    best = int(worst.argmin())
    if worst[best] > radius:
        raise DecodeFailure("no secret within the error radius")
    return secrets[best], errs[best]


def invert_mp(td, y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Recover (s, e) from y = A s + e; DecodeFailure outside the radius."""
    y = np.asarray(y, dtype=np.int64)
    if isinstance(td, DirectTrapdoor):
        return _invert_direct(td, y, td.decode_radius)
    s, e, ok = invert_mp_batch(td, y[None, :])
    if not ok[0]:
        raise DecodeFailure("no preimage within the gadget decode radius")
    return s[0], e[0]


def truncated_gaussian_weights(bound: int, sigma: float) -> np.ndarray:
    if bound == 0:
        return np.array([1.0])
    support = np.arange(-bound, bound + 1).astype(float)
    w = np.exp(-support ** 2 / (2.0 * sigma ** 2))
    return w / w.sum()


def sample_truncated_gaussian(bound: int, sigma: float, size,
                              rng: np.random.Generator) -> np.ndarray:
    if bound == 0:
        return np.zeros(size, dtype=np.int64)
    support = np.arange(-bound, bound + 1)
    return rng.choice(support, p=truncated_gaussian_weights(bound, sigma),
                      size=size).astype(np.int64)


# ---------------------------------------------------------------------------
# Keypairs
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class IdealPublic:
    mode: TcfMode
    n_bits: int
    r_bits: int
    table: np.ndarray | None  # recovery mode: per-bit-value mask table


@dataclass(frozen=True)
class LatticePublic:
    mode: TcfMode
    n_bits: int
    params: LweParams
    a_matrix: np.ndarray
    u: np.ndarray


@dataclass(frozen=True)
class TcfKeypair:
    pp: object
    td: object
    mode: TcfMode
    domain_bits: int
    instantiation: str  # "ideal" | "lattice"


def setup(mode: TcfMode, instantiation: str, rng: np.random.Generator,
          domain_bits: int = 1, r_bits: int | None = None,
          params: LweParams | None = None) -> TcfKeypair:
    """Sample a keypair in the requested mode.

    Lattice recovery mode publishes u = A s + e; injective mode publishes a
    uniform u pushed off every low-norm coset (margin 2B') so extraction
    succeeds with probability 1 at toy scale. The ideal family's mask table
    doubles as the function key and the trapdoor.
    """
    if instantiation == "ideal":
        r_bits = r_bits if r_bits is not None else max(1, domain_bits)
        if mode is TcfMode.RECOVERY:
            table = rng.integers(0, 2 ** r_bits, size=2, dtype=np.int64)
            pp = IdealPublic(mode, domain_bits, r_bits, table)
            return TcfKeypair(pp, table, mode, domain_bits, "ideal")
        pp = IdealPublic(mode, domain_bits, r_bits, None)
        return TcfKeypair(pp, "injective-tag", mode, domain_bits, "ideal")
    if instantiation != "lattice":
        raise ValueError(f"unknown instantiation {instantiation!r}")
    if params is None:
        raise ValueError("lattice setup needs LweParams")
    td = make_trapdoor(params, rng)
    q, m = params.q, params.m
    if mode is TcfMode.RECOVERY:
        s = rng.integers(0, q, size=params.n, dtype=np.int64)
        e = sample_truncated_gaussian(params.B, params.B / 3.0, params.m, rng)
        u = ((td.a_matrix @ s) + e) % q
    else:
        u = rng.integers(0, q, size=m, dtype=np.int64)
        if _on_low_norm_coset(td, u, 2 * params.B_prime):
            u = (u + q // 2) % q
        if _on_low_norm_coset(td, u, 2 * params.B_prime):
            raise RuntimeError("could not push u off every low-norm coset")
    pp = LatticePublic(mode, domain_bits, params, td.a_matrix, u)
    return TcfKeypair(pp, (td, u), mode, domain_bits, "lattice")


def _on_low_norm_coset(td, u: np.ndarray, margin: int) -> bool:
    try:
        if isinstance(td, DirectTrapdoor):
            _, e = _invert_direct(td, u, radius=margin)
        else:
            _, e_row, ok = invert_mp_batch(td, u[None, :],
                                           radius=min(margin, td.decode_radius))
            if not ok[0]:
                return False
            e = e_row[0]
    except DecodeFailure:
        return False
    return bool(np.abs(e).max() <= margin)


# ---------------------------------------------------------------------------
# Randomness / range encodings (integer indices for register simulation)
# ---------------------------------------------------------------------------


def rand_size(pp) -> int:
    """Size of the per-bit randomness support."""
    if isinstance(pp, IdealPublic):
        return 2 ** pp.r_bits
    p = pp.params
    return p.q ** p.n * (2 * p.B_prime + 1) ** p.m


def rand_decode(pp, idx: int):
    if isinstance(pp, IdealPublic):
        return int(idx)
    p = pp.params
    width = 2 * p.B_prime + 1
    e = np.empty(p.m, dtype=np.int64)
    for j in range(p.m - 1, -1, -1):
        e[j] = idx % width - p.B_prime
        idx //= width
    x = np.empty(p.n, dtype=np.int64)
    for j in range(p.n - 1, -1, -1):
        x[j] = idx % p.q
        idx //= p.q
    return x, e


def rand_encode(pp, element) -> int:
    if isinstance(pp, IdealPublic):
        return int(element)
    p = pp.params
    x, e = element
    idx = 0
    for v in x:
        idx = idx * p.q + int(v) % p.q
    for v in e:
        idx = idx * (2 * p.B_prime + 1) + int(v) + p.B_prime
    return idx


def y_encode(pp, y) -> int:
    if isinstance(pp, IdealPublic):
        return int(y)
    q = pp.params.q
    idx = 0
    for v in np.asarray(y).reshape(-1):
        idx = idx * q + int(v) % q
    return idx


def y_decode(pp, idx: int) -> np.ndarray:
    if isinstance(pp, IdealPublic):
        return int(idx)
    p = pp.params
    y = np.empty(p.m, dtype=np.int64)
    for j in range(p.m - 1, -1, -1):
        y[j] = idx % p.q
        idx //= p.q
    return y


def rand_superposition(pp) -> np.ndarray:
    """Amplitudes of the per-bit randomness superposition (unit norm)."""
    if isinstance(pp, IdealPublic):
        size = 2 ** pp.r_bits
        return np.full(size, 1.0 / math.sqrt(size), dtype=complex)
    p = pp.params
    gauss = truncated_gaussian_weights(p.B_prime, p.sigma)
    probs = np.full(p.q ** p.n, 1.0 / p.q ** p.n)
    for _ in range(p.m):
        probs = np.kron(probs, gauss)
    return np.sqrt(probs).astype(complex)


# ---------------------------------------------------------------------------
# Evaluation / extraction / recovery
# ---------------------------------------------------------------------------


def evaluate_bit(pp, bit: int, r):
    """Single-bit evaluation. Lattice: y = A x + bit*u + e' over Z_q^m;
    ideal recovery: y = r xor table[bit]; ideal injective: y = (bit, r)."""
    bit = int(bit)
    if isinstance(pp, IdealPublic):
        r = int(r)
        if not (0 <= r < 2 ** pp.r_bits):
            raise ValueError("randomness outside support")
        if pp.mode is TcfMode.INJECTIVE:
            return (bit << pp.r_bits) | r
        return r ^ int(pp.table[bit])
    x, e = r
    p = pp.params
    x = np.asarray(x, dtype=np.int64)
    e = np.asarray(e, dtype=np.int64)
    if e.size and np.abs(e).max() > p.B_prime:
        raise ValueError("randomness outside support")
    return tuple((((pp.a_matrix @ x) + bit * pp.u + e) % p.q).tolist())


def evaluate(keypair: TcfKeypair, x: int, rs: list) -> tuple:
    """Multi-bit evaluation by per-bit concatenation (domain extension).

    rs is a list with one randomness element per domain bit.
    """
    n = keypair.domain_bits
    if not isinstance(rs, list) or len(rs) != n:
        raise ValueError("one randomness element per domain bit")
    bits = [(x >> (n - 1 - i)) & 1 for i in range(n)]
    return tuple(evaluate_bit(keypair.pp, b, r) for b, r in zip(bits, rs))


def evaluate_bit_index(pp, bit: int, r_idx: int) -> int:
    """Index-coded single-bit evaluation for coherent register use."""
    if isinstance(pp, IdealPublic):
        return evaluate_bit(pp, bit, r_idx)
    return y_encode(pp, evaluate_bit(pp, bit, rand_decode(pp, r_idx)))


def ext_bit(keypair: TcfKeypair, y) -> int:
    """Injective-mode extraction of a single bit from its image."""
    pp = keypair.pp
    if isinstance(pp, IdealPublic):
        y = int(y)
        if not (0 <= y < 2 ** (1 + pp.r_bits)):
            raise NotInImage(f"{y} outside the ideal injective range")
        return y >> pp.r_bits
    td, u = keypair.td
    p = pp.params
    y = np.asarray(y, dtype=np.int64)
    for bit in (0, 1):
        target = (y - bit * u) % p.q
        try:
            _, e = invert_mp(td, target)
        except DecodeFailure:
            continue
        if np.abs(e).max() <= p.B_prime:
            return bit
    raise NotInImage("no branch decodes within B'")


def ext(keypair: TcfKeypair, ys: list) -> int:
    """Injective-mode extraction of the full input from its per-bit images."""
    if keypair.mode is not TcfMode.INJECTIVE:
        raise ValueError("ext requires an injective-mode keypair")
    if not isinstance(ys, (list, tuple)) or len(ys) != keypair.domain_bits:
        raise ValueError("one image per domain bit")
    x = 0
    for y in ys:
        x = (x << 1) | ext_bit(keypair, y)
    return x


def recovery_shifts(keypair: TcfKeypair, y) -> dict:
    """Canonical per-branch preimage randomness for one committed image."""
    if keypair.mode is not TcfMode.RECOVERY:
        raise ValueError("recovery shifts need a recovery-mode keypair")
    pp = keypair.pp
    if isinstance(pp, IdealPublic):
        return {b: int(y) ^ int(pp.table[b]) for b in (0, 1)}
    td, u = keypair.td
    p = pp.params
    if isinstance(y, (int, np.integer)):
        y = y_decode(pp, y)
    y = np.asarray(y, dtype=np.int64).reshape(-1)
    s_u, e_u = invert_mp(td, u)
    x0, e0 = invert_mp(td, y)
    x1 = (x0 - s_u) % p.q
    e1 = e0 - e_u
    return {0: (x0, e0), 1: (x1, e1)}


def recover_map(keypair: TcfKeypair, y):
    """Basis bijection (bit, r_index) -> (bit, shifted r_index) for one slot.

    Subtraction wraps cyclically inside the truncated error window so the map
    stays a permutation; wrapped branches carry the recovery error mass.
    """
    pp = keypair.pp
    shifts = recovery_shifts(keypair, y)
    if isinstance(pp, IdealPublic):
        def fn(bit, r_idx):
            return bit, int(r_idx) ^ shifts[bit]
        return fn
    p = pp.params
    width = 2 * p.B_prime + 1

    def fn(bit, r_idx):
        x, e = rand_decode(pp, r_idx)
        xs, es = shifts[bit]
        x_new = (x - xs) % p.q
        e_new = (e - es + p.B_prime) % width - p.B_prime
        return bit, rand_encode(pp, (x_new, e_new))

    return fn


def eval_measure_slot(keypair: TcfKeypair, state: StateVector,
                      data_label: str, rand_label: str,
                      rng: np.random.Generator):
    """Append the randomness register, evaluate coherently, measure the image.

    The data register must hold a single in-superposition bit (dimension 2).
    Returns (y_index, post_state) with the randomness register attached.
    """
    pp = keypair.pp
    if state.register_dim(data_label) != 2:
        raise ValueError("slot evaluation covers one bit; commit extra "
                         "classical bits separately")
    joint = qsim.append_register(state, rand_label, rand_superposition(pp))
    y, post = qsim.measure_value_function(
        joint, [data_label, rand_label],
        lambda v: evaluate_bit_index(pp, v[0], v[1]), rng)
    return y, post


def commit_classical_bit(keypair: TcfKeypair, bit: int,
                         rng: np.random.Generator):
    """Commit a branch-deterministic bit with classically sampled randomness."""
    pp = keypair.pp
    if isinstance(pp, IdealPublic):
        r = int(rng.integers(0, 2 ** pp.r_bits))
        return evaluate_bit(pp, bit, r), r
    p = pp.params
    x = rng.integers(0, p.q, size=p.n, dtype=np.int64)
    e = sample_truncated_gaussian(p.B_prime, p.sigma, p.m, rng)
    return evaluate_bit(pp, bit, (x, e)), (x, e)


def recover_slot(keypair: TcfKeypair, state: StateVector, data_label: str,
                 rand_label: str, y) -> StateVector:
    """Apply the recovery unitary to one (data bit, randomness) register pair."""
    fn = recover_map(keypair, y)
    return qsim.apply_basis_map(state, [data_label, rand_label],
                                lambda vals: fn(vals[0], vals[1]))


# ---------------------------------------------------------------------------
# Channel comparison: recover . U . exp vs U
# ---------------------------------------------------------------------------


def _bell_probes(d: int):
    base = np.zeros((d, d), dtype=complex)
    for j in range(d):
        base[j, j] = 1.0
    base = base / math.sqrt(d)
    omega = np.exp(2j * math.pi / d)
    probes = []
    for a in range(d):
        for b in range(d):
            shift = np.roll(np.eye(d), a, axis=0)
            phase = np.diag([omega ** (b * j) for j in range(d)])
            probes.append((base @ (shift @ phase).T).reshape(-1))
    return probes


def eval_measure_recover_channel_test(keypair: TcfKeypair, channel=None) -> float:
    """Max trace distance of (recover . channel . exp) from channel alone.

    Probes are the generalized Bell basis on (reference (x) data); the
    optional channel acts on that pair and must be block-diagonal in the
    data register's computational basis (the compilers only ever apply such
    channels between evaluation and recovery). Serves as the diamond-distance
    surrogate at desk scale.
    """
    if keypair.mode is not TcfMode.RECOVERY:
        raise ValueError("recovery-mode keypair required")
    if keypair.domain_bits != 1:
        raise ValueError("probe test covers the single-bit family; "
                         "extend additively per bit")
    pp = keypair.pp
    d = 2
    rand_amp = rand_superposition(pp)
    r_dim = len(rand_amp)
    images = np.array([[evaluate_bit_index(pp, b, r) for r in range(r_dim)]
                       for b in range(d)])
    worst = 0.0
    for probe in _bell_probes(d):
        joint = np.einsum("i,j->ij", probe, rand_amp).reshape(d, d, r_dim)
        rho_out = np.zeros((d * d, d * d), dtype=complex)
        for y in np.unique(images):
            vec = np.where(images[None, :, :] == y, joint, 0.0)
            fn = recover_map(keypair, int(y) if images.dtype.kind in "iu" else y)
            rec = np.zeros_like(vec)
            for data in range(d):
                for r_idx in range(r_dim):
                    _, new_r = fn(data, r_idx)
                    rec[:, data, new_r] += vec[:, data, r_idx]
            mat = rec.reshape(d * d, r_dim)
            rho_out += mat @ mat.conj().T
        rho_in = np.outer(probe, probe.conj())
        if channel is not None:
            rho_out = channel(rho_out)
            rho_in = channel(rho_in)
        evals = np.linalg.eigvalsh(rho_out - rho_in)
        worst = max(worst, 0.5 * float(np.abs(evals).sum()))
    return worst


# ---------------------------------------------------------------------------
# Binary serialization: little-endian u64 dimension header, row-major u32
# entries
# ---------------------------------------------------------------------------

_MODE_TAG = {TcfMode.RECOVERY: 0, TcfMode.INJECTIVE: 1}
_INST_TAG = {"ideal": 0, "lattice": 1}


def serialize_keypair(keypair: TcfKeypair) -> bytes:
    mode = _MODE_TAG[keypair.mode]
    inst = _INST_TAG[keypair.instantiation]
    if keypair.instantiation == "ideal":
        pp = keypair.pp
        table = pp.table if pp.table is not None else np.zeros(0, dtype=np.int64)
        head = struct.pack("<5Q", inst, mode, keypair.domain_bits,
                           pp.r_bits, len(table))
        return head + np.asarray(table, dtype="<u4").tobytes()
    pp = keypair.pp
    p = pp.params
    td, _ = keypair.td
    head = struct.pack("<8Q", inst, mode, keypair.domain_bits,
                       p.n, p.m, p.q, p.B, p.B_prime)
    blocks = [np.asarray(pp.a_matrix % p.q, dtype="<u4"),
              np.asarray(pp.u % p.q, dtype="<u4")]
    if p.has_gadget:
        blocks.append(np.asarray(td.t_inv % p.q, dtype="<u4"))
    return head + b"".join(b.tobytes() for b in blocks)


def deserialize_keypair(blob: bytes) -> TcfKeypair:
    inst, mode_tag = struct.unpack_from("<2Q", blob, 0)
    mode = TcfMode.RECOVERY if mode_tag == 0 else TcfMode.INJECTIVE
    if inst == 0:
        _, _, n_bits, r_bits, count = struct.unpack_from("<5Q", blob, 0)
        table = np.frombuffer(blob, dtype="<u4", count=count, offset=40)
        table = table.astype(np.int64) if count else None
        pp = IdealPublic(mode, int(n_bits), int(r_bits), table)
        td = table if mode is TcfMode.RECOVERY else "injective-tag"
        return TcfKeypair(pp, td, mode, int(n_bits), "ideal")
    _, _, n_bits, n, m, q, b, b_prime = struct.unpack_from("<8Q", blob, 0)
    params = LweParams(int(n), int(m), int(q), int(b), int(b_prime))
    off = 64
    a = np.frombuffer(blob, dtype="<u4", count=m * n, offset=off)
    a = a.reshape(m, n).astype(np.int64)
    off += 4 * m * n
    u = np.frombuffer(blob, dtype="<u4", count=m, offset=off)
    off += 4 * m
    if params.has_gadget:
        t_inv = np.frombuffer(blob, dtype="<u4", count=m * m, offset=off)
        td = GadgetTrapdoor(params, a, t_inv.reshape(m, m).astype(np.int64))
    else:
        td = DirectTrapdoor(params, a)
    pp = LatticePublic(mode, int(n_bits), params, a, u.astype(np.int64))
    return TcfKeypair(pp, (td, u.astype(np.int64)), mode, int(n_bits),
                      "lattice")


# ---------------------------------------------------------------------------
# Fixture parameter sets
# ---------------------------------------------------------------------------

CLASSICAL_MICRO = LweParams(n=1, m=9, q=257, B=1, B_prime=8)
EXHAUSTIVE_MICRO = LweParams(n=1, m=9, q=257, B=1, B_prime=1)
QUANTUM_MICRO = LweParams(n=1, m=1, q=13, B=1, B_prime=2)
QUANTUM_MICRO_EXACT = LweParams(n=1, m=1, q=13, B=0, B_prime=2)
WIDE_MICRO = LweParams(n=2, m=2 + 2 * 9, q=257, B=1, B_prime=7)
