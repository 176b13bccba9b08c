"""State-preserving argument for graph 3-coloring.

The prover keeps a coloring superposition, shuffles it by a uniformly
superposed color permutation, commits each shuffled color through a
recovery-mode trapdoor function, opens one challenged edge, and after the
trapdoor reveal uncomputes both the commitments and the permutation. Every
operation is either a computational-basis permutation or a diagonal
measurement, so sessions run on a sparse basis-state engine with vectorized
lookup tables.

Colors are the values {0, 1, 2} in a dimension-3 slot, committed as two bits;
a 2-bit slot holding 3 is treated as an invalid color in adversarial probes.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field

import numpy as np

from . import qsim, tcf
from .qsim import DensityMatrix

PERMS: list[tuple[int, int, int]] = [tuple(p) for p in
                                     itertools.permutations(range(3))]
PERM_ARRAY = np.array(PERMS, dtype=np.int64)  # PERM_ARRAY[p, color]
ID_PERM = PERMS.index((0, 1, 2))


def perm_apply(perm_index: int, color: int) -> int:
    return PERMS[perm_index][color]


def unique_permutation(w_i: int, w_j: int, c_i: int, c_j: int) -> int | None:
    """The single permutation mapping w_i -> c_i and w_j -> c_j, when one
    exists (requires w_i != w_j and c_i != c_j)."""
    if w_i == w_j or c_i == c_j:
        return None
    matches = [k for k, p in enumerate(PERMS)
               if p[w_i] == c_i and p[w_j] == c_j]
    return matches[0] if len(matches) == 1 else None


# ---------------------------------------------------------------------------
# Graphs
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Graph:
    num_vertices: int
    edges: tuple

    def __post_init__(self):
        edges = tuple(tuple(sorted(e)) for e in self.edges)
        object.__setattr__(self, "edges", edges)
        if len(edges) < 1:
            raise ValueError("need at least one edge")
        for u, v in edges:
            if u == v:
                raise ValueError("self-loop")
            if not (0 <= u < self.num_vertices and 0 <= v < self.num_vertices):
                raise ValueError("edge endpoint out of range")

    def is_valid_coloring(self, colors) -> bool:
        return all(0 <= c <= 2 for c in colors) and \
            all(colors[u] != colors[v] for u, v in self.edges)

    def valid_colorings(self) -> list[tuple]:
        return [c for c in itertools.product(range(3), repeat=self.num_vertices)
                if self.is_valid_coloring(c)]

    def to_edge_list(self) -> str:
        return "\n".join(f"{u} {v}" for u, v in self.edges) + "\n"


def parse_graph(text: str) -> Graph:
    """Edge-list format: one `u v` pair per line, 0-indexed."""
    edges = []
    for line in text.splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        u, v = line.split()
        edges.append((int(u), int(v)))
    n = max(max(e) for e in edges) + 1
    return Graph(n, tuple(edges))


K3 = Graph(3, ((0, 1), (1, 2), (0, 2)))
PATH3 = Graph(3, ((0, 1), (1, 2)))
K4 = Graph(4, tuple(itertools.combinations(range(4), 2)))


# ---------------------------------------------------------------------------
# Sparse basis-state engine
# ---------------------------------------------------------------------------


class SparseState:
    """Superposition over labelled integer registers, stored sparsely.

    Measurements are diagonal functions of register values and unitaries are
    value permutations, both supplied as vectorized callables on integer
    column arrays.
    """

    def __init__(self, labels, dims, keys, amps):
        self.labels = list(labels)
        self.dims = list(dims)
        self.amps = np.asarray(amps, dtype=complex)
        self.keys = np.asarray(keys, dtype=np.int64).reshape(
            len(self.amps), len(self.labels))

    @classmethod
    def from_product(cls, parts) -> "SparseState":
        """parts: list of (label, dim, [(value, amp), ...])."""
        labels = [p[0] for p in parts]
        dims = [p[1] for p in parts]
        keys = np.zeros((1, 0), dtype=np.int64)
        amps = np.array([1.0], dtype=complex)
        for _, _, branch in parts:
            vals = np.array([v for v, _ in branch], dtype=np.int64)
            b_amps = np.array([a for _, a in branch], dtype=complex)
            keys = np.hstack([np.repeat(keys, len(vals), axis=0),
                              np.tile(vals, keys.shape[0])[:, None]])
            amps = np.repeat(amps, len(vals)) * np.tile(b_amps, len(amps))
        state = cls(labels, dims, keys, amps)
        state.renormalize()
        return state

    def column(self, label: str) -> int:
        return self.labels.index(label)

    def norm(self) -> float:
        return float(np.sqrt(np.vdot(self.amps, self.amps).real))

    def renormalize(self):
        self.amps = self.amps / self.norm()

    def copy(self) -> "SparseState":
        return SparseState(self.labels, self.dims, self.keys.copy(),
                           self.amps.copy())

    def support_size(self) -> int:
        return len(self.amps)

    def _packed(self, keys=None) -> np.ndarray:
        keys = self.keys if keys is None else keys
        strides = np.ones(len(self.dims), dtype=np.int64)
        for i in range(len(self.dims) - 2, -1, -1):
            strides[i] = strides[i + 1] * self.dims[i + 1]
        return keys @ strides

    def add_register(self, label: str, dim: int, branch) -> "SparseState":
        """Tensor a fresh register holding the given (value, amp) support."""
        vals = np.array([v for v, _ in branch], dtype=np.int64)
        b_amps = np.array([a for _, a in branch], dtype=complex)
        n, b = len(self.amps), len(vals)
        keys = np.hstack([np.repeat(self.keys, b, axis=0),
                          np.tile(vals, n)[:, None]])
        return SparseState(self.labels + [label], self.dims + [dim], keys,
                           np.repeat(self.amps, b) * np.tile(b_amps, n))

    def measure(self, labels, vec_fn, rng: np.random.Generator):
        """Measure a classical function of register values.

        vec_fn maps the (support x len(labels)) value array to a 1D integer
        outcome array. Returns (outcome, post_state).
        """
        cols = [self.column(lab) for lab in labels]
        out = np.asarray(vec_fn(self.keys[:, cols]))
        uniq, inverse = np.unique(out, return_inverse=True)
        w = np.bincount(inverse, weights=np.abs(self.amps) ** 2,
                        minlength=len(uniq))
        pick = int(rng.choice(len(uniq), p=w / w.sum()))
        mask = inverse == pick
        post = SparseState(self.labels, self.dims, self.keys[mask],
                           self.amps[mask])
        post.renormalize()
        return int(uniq[pick]), post

    def map_basis(self, labels, vec_fn, check: bool = True) -> "SparseState":
        """Apply a value bijection to the named registers.

        vec_fn maps the value array to a same-shape array of new values.
        """
        cols = [self.column(lab) for lab in labels]
        new_vals = np.asarray(vec_fn(self.keys[:, cols]), dtype=np.int64)
        keys = self.keys.copy()
        keys[:, cols] = new_vals.reshape(len(self.amps), len(cols))
        out = SparseState(self.labels, self.dims, keys, self.amps.copy())
        if check:
            packed = out._packed()
            if len(np.unique(packed)) != len(packed):
                raise ValueError("basis map collides on the support")
        return out

    def remove_register(self, label: str, expected_value: int | None = None
                        ) -> "SparseState":
        """Drop a register that is in a definite basis state on the support."""
        col = self.column(label)
        vals = np.unique(self.keys[:, col])
        if len(vals) != 1:
            raise ValueError(f"register {label} still in superposition")
        if expected_value is not None and vals[0] != expected_value:
            raise ValueError(f"register {label} holds {vals[0]}, "
                             f"expected {expected_value}")
        keep = [c for c in range(len(self.labels)) if c != col]
        return SparseState([l for l in self.labels if l != label],
                           [d for c, d in enumerate(self.dims) if c != col],
                           self.keys[:, keep], self.amps.copy())

    def reduced_density(self, labels):
        """Reduced density matrix over the named registers.

        Returns (DensityMatrix, basis) where basis lists the observed value
        tuples indexing the matrix.
        """
        cols = [self.column(lab) for lab in labels]
        rest = [c for c in range(len(self.labels)) if c not in cols]
        kept_rows = self.keys[:, cols]
        basis_arr, kept_ids = np.unique(kept_rows, axis=0, return_inverse=True)
        if rest:
            _, rest_ids = np.unique(self.keys[:, rest], axis=0,
                                    return_inverse=True)
        else:
            rest_ids = np.zeros(len(self.amps), dtype=np.int64)
        dim = basis_arr.shape[0]
        groups = int(rest_ids.max()) + 1
        v = np.zeros((groups, dim), dtype=complex)
        np.add.at(v, (rest_ids, kept_ids), self.amps)
        rho = v.conj().T @ v
        rho = rho / np.trace(rho).real
        basis = [tuple(int(x) for x in row) for row in basis_arr]
        return (DensityMatrix(rho, [("+".join(labels), dim)]), basis)


def coloring_basis_distance(rho_and_basis, amplitudes: dict) -> float:
    """Trace distance between a reduced coloring-register state and a pure
    coloring superposition, over the union of their supports."""
    rho, basis = rho_and_basis
    union = sorted(set(basis) | {tuple(c) for c in amplitudes})
    index = {v: i for i, v in enumerate(union)}
    d = len(union)
    big = np.zeros((d, d), dtype=complex)
    ids = [index[v] for v in basis]
    big[np.ix_(ids, ids)] = rho.matrix
    target = np.zeros(d, dtype=complex)
    for coloring, amp in amplitudes.items():
        target[index[tuple(coloring)]] = amp
    evals = np.linalg.eigvalsh(big - np.outer(target, target.conj()))
    return float(0.5 * np.abs(evals).sum())


# ---------------------------------------------------------------------------
# Witness state construction
# ---------------------------------------------------------------------------


def uniform_coloring_amplitudes(graph: Graph) -> dict:
    cols = graph.valid_colorings()
    amp = 1.0 / math.sqrt(len(cols))
    return {c: amp for c in cols}


def w_labels(graph: Graph) -> list[str]:
    return [f"w{v}" for v in range(graph.num_vertices)]


def make_witness_state(graph: Graph, amplitudes: dict,
                       require_valid: bool = True) -> SparseState:
    """Joint state of the coloring registers plus the uniform permutation
    register (honest initialization). Per-vertex randomness registers start
    in the product state |rand> and are attached lazily at commit time, which
    is equivalent and keeps the support small."""
    norm = math.sqrt(sum(abs(a) ** 2 for a in amplitudes.values()))
    items = sorted(amplitudes.items())
    if require_valid:
        for coloring, _ in items:
            if not graph.is_valid_coloring(coloring):
                raise ValueError(f"support contains invalid coloring {coloring}")
    keys, amps = [], []
    for coloring, a in items:
        for p in range(6):
            keys.append(tuple(coloring) + (p,))
            amps.append(a / norm / math.sqrt(6))
    return SparseState(w_labels(graph) + ["perm"],
                       [3] * graph.num_vertices + [6],
                       np.array(keys), np.array(amps, dtype=complex))


def _normalized(amplitudes: dict) -> dict:
    norm = math.sqrt(sum(abs(a) ** 2 for a in amplitudes.values()))
    return {tuple(k): v / norm for k, v in sorted(amplitudes.items())}


# ---------------------------------------------------------------------------
# Keypair lookup tables (vectorized evaluation and recovery)
# ---------------------------------------------------------------------------


class KeypairTables:
    """Integer lookup tables for one keypair: image[bit, r] and, per measured
    image, recover[bit, r]."""

    def __init__(self, keypair: tcf.TcfKeypair):
        self.keypair = keypair
        pp = keypair.pp
        self.r_dim = tcf.rand_size(pp)
        self.rand_branch = [(i, a) for i, a in
                            enumerate(tcf.rand_superposition(pp))
                            if abs(a) > 0.0]
        self.image = np.array(
            [[tcf.evaluate_bit_index(pp, b, r) for r in range(self.r_dim)]
             for b in (0, 1)], dtype=np.int64)
        self._recover_cache: dict = {}

    def recover_table(self, y: int) -> np.ndarray:
        if y not in self._recover_cache:
            fn = tcf.recover_map(self.keypair, y)
            self._recover_cache[y] = np.array(
                [[fn(b, r)[1] for r in range(self.r_dim)] for b in (0, 1)],
                dtype=np.int64)
        return self._recover_cache[y]


def _color_bit_array(colors: np.ndarray, j: int) -> np.ndarray:
    return (colors >> (1 - j)) & 1


def _color_bit(color: int, j: int) -> int:
    return (color >> (1 - j)) & 1


# ---------------------------------------------------------------------------
# Protocol transcript
# ---------------------------------------------------------------------------


@dataclass
class SpaTranscript:
    instantiation: str
    commitments: list = field(default_factory=list)
    challenge_edge: tuple | None = None
    opening: tuple | None = None
    verdict: str = "Reject"
    td_revealed: bool = False

    def to_json(self) -> str:
        return json.dumps({
            "instantiation": self.instantiation,
            "commitments": [[int(b) for b in y] for y in self.commitments],
            "challenge_edge": list(self.challenge_edge) if self.challenge_edge else None,
            "opening": list(self.opening) if self.opening else None,
            "verdict": self.verdict,
            "td_revealed": self.td_revealed,
        }, sort_keys=True)


@dataclass
class SpaRunResult:
    verdict: str
    transcript: SpaTranscript
    leftover: SparseState | None
    leftover_distance: float | None


# ---------------------------------------------------------------------------
# Session pieces (shared by single runs and repetitions); `pre` prefixes the
# register names so parallel copies stay disjoint
# ---------------------------------------------------------------------------


def _commit_vertex(state, tables: KeypairTables, vertex: int, pre: str,
                   rng: np.random.Generator):
    ys = []
    for j in (0, 1):
        lab = f"{pre}r{vertex}_{j}"
        state = state.add_register(lab, tables.r_dim, tables.rand_branch)

        def image(cols, j=j):
            colors = PERM_ARRAY[cols[:, 1], cols[:, 0]]
            return tables.image[_color_bit_array(colors, j), cols[:, 2]]

        y, state = state.measure([f"{pre}w{vertex}", f"{pre}perm", lab],
                                 image, rng)
        ys.append(y)
    return tuple(ys), state


def _recover_vertex(state, tables: KeypairTables, vertex: int, ys, pre: str,
                    drop: bool):
    for j in (0, 1):
        lab = f"{pre}r{vertex}_{j}"
        rec = tables.recover_table(ys[j])

        def mapped(cols, j=j, rec=rec):
            out = cols.copy()
            colors = PERM_ARRAY[cols[:, 1], cols[:, 0]]
            out[:, 2] = rec[_color_bit_array(colors, j), cols[:, 2]]
            return out

        state = state.map_basis([f"{pre}w{vertex}", f"{pre}perm", lab],
                                mapped, check=False)
        if drop:
            state = state.remove_register(lab, expected_value=0)
    return state


def _open_edge(state, tables: KeypairTables, i: int, j: int, pre: str,
               rng: np.random.Generator):
    r_dim = tables.r_dim
    labels = [f"{pre}perm", f"{pre}w{i}", f"{pre}w{j}",
              f"{pre}r{i}_0", f"{pre}r{i}_1", f"{pre}r{j}_0", f"{pre}r{j}_1"]

    def opening_fn(cols):
        c_i = PERM_ARRAY[cols[:, 0], cols[:, 1]]
        c_j = PERM_ARRAY[cols[:, 0], cols[:, 2]]
        packed = c_i
        for col in (c_j,):
            packed = packed * 3 + col
        for k in range(3, 7):
            packed = packed * r_dim + cols[:, k]
        return packed

    packed, state = state.measure(labels, opening_fn, rng)
    rs = []
    for _ in range(4):
        rs.append(packed % r_dim)
        packed //= r_dim
    rj1, rj0, ri1, ri0 = rs
    c_j = packed % 3
    c_i = packed // 3
    return (int(c_i), int(c_j), int(ri0), int(ri1), int(rj0), int(rj1)), state


def _check_opening(tables: KeypairTables, ys, i, j, opening) -> bool:
    c_i, c_j, ri0, ri1, rj0, rj1 = opening
    if c_i == c_j or c_i not in (0, 1, 2) or c_j not in (0, 1, 2):
        return False
    return all(
        tables.image[_color_bit(c, k), r] == ys[v][k]
        for v, c, rr in [(i, c_i, (ri0, ri1)), (j, c_j, (rj0, rj1))]
        for k, r in enumerate(rr))


def _unshuffle(state, graph: Graph, i, j, c_i, c_j, pre: str):
    labels = [f"{pre}w{v}" for v in range(graph.num_vertices)] + [f"{pre}perm"]
    nv = graph.num_vertices
    # per witness branch the opened colors pin a unique permutation; swap it
    # with the identity
    pin = np.full((3, 3), -1, dtype=np.int64)
    for wi in range(3):
        for wj in range(3):
            p = unique_permutation(wi, wj, c_i, c_j)
            pin[wi, wj] = -1 if p is None else p

    def swap(cols):
        out = cols.copy()
        pc = pin[cols[:, i], cols[:, j]]
        p = cols[:, nv]
        hit_pc = (p == pc)
        hit_id = (p == ID_PERM) & (pc >= 0)
        out[:, nv] = np.where(hit_pc, ID_PERM, np.where(hit_id, pc, p))
        return out

    return state.map_basis(labels, swap, check=False)


def _session(state, graph: Graph, tables: KeypairTables, pre: str,
             rng: np.random.Generator, forced_edge, transcript: SpaTranscript,
             drop_rand: bool):
    ys = []
    for v in range(graph.num_vertices):
        y, state = _commit_vertex(state, tables, v, pre, rng)
        ys.append(y)
    transcript.commitments = [list(y) for y in ys]

    if forced_edge is not None:
        i, j = forced_edge
    else:
        i, j = graph.edges[int(rng.integers(len(graph.edges)))]
    transcript.challenge_edge = (i, j)

    opening, state = _open_edge(state, tables, i, j, pre, rng)
    transcript.opening = opening
    if not _check_opening(tables, ys, i, j, opening):
        transcript.verdict = "Reject"
        return None, state
    transcript.verdict = "Accept"
    transcript.td_revealed = True
    c_i, c_j, ri0, ri1, rj0, rj1 = opening

    for v in range(graph.num_vertices):
        if v not in (i, j):
            state = _recover_vertex(state, tables, v, ys[v], pre, drop_rand)
    for lab, val in [(f"{pre}r{i}_0", ri0), (f"{pre}r{i}_1", ri1),
                     (f"{pre}r{j}_0", rj0), (f"{pre}r{j}_1", rj1)]:
        state = state.remove_register(lab, expected_value=val)
    state = _unshuffle(state, graph, i, j, c_i, c_j, pre)
    state = state.remove_register(f"{pre}perm", expected_value=ID_PERM)
    return opening, state


def spa_run(graph: Graph, amplitudes: dict, keypair: tcf.TcfKeypair,
            rng: np.random.Generator, forced_edge: tuple | None = None,
            keep_state: bool = True) -> SpaRunResult:
    """One honest session of the commit / challenge / open / recover argument.

    The keypair must be recovery-mode. Returns the verdict, the classical
    transcript, the leftover joint state, and the trace distance of the
    leftover coloring registers to the input superposition.
    """
    if keypair.mode is not tcf.TcfMode.RECOVERY:
        raise ValueError("honest sessions run against recovery-mode keys")
    tables = KeypairTables(keypair)
    state = make_witness_state(graph, amplitudes)
    transcript = SpaTranscript(keypair.instantiation)
    opening, state = _session(state, graph, tables, "", rng, forced_edge,
                              transcript, drop_rand=keypair.instantiation == "ideal")
    if opening is None:
        return SpaRunResult("Reject", transcript,
                            state if keep_state else None, None)
    distance = coloring_basis_distance(state.reduced_density(w_labels(graph)),
                                       _normalized(amplitudes))
    return SpaRunResult("Accept", transcript, state if keep_state else None,
                        distance)


# ---------------------------------------------------------------------------
# Soundness probe and extraction (classical adversaries)
# ---------------------------------------------------------------------------


def extract_coloring(keypair: tcf.TcfKeypair, commitments) -> list:
    """Per-vertex trapdoor extraction; invalid/out-of-image become None."""
    colors = []
    for y in commitments:
        try:
            c = tcf.ext(keypair, list(y))
        except tcf.NotInImage:
            colors.append(None)
            continue
        colors.append(c if c in (0, 1, 2) else None)
    return colors


def spa_soundness_probe(graph: Graph, keypair: tcf.TcfKeypair,
                        commitments) -> float:
    """Exact acceptance ceiling of a commitment vector in injective mode.

    Counts the challenge edges whose unique preimage colors collide or are
    invalid; the best possible acceptance is 1 - bad/|E|.
    """
    if keypair.mode is not tcf.TcfMode.INJECTIVE:
        raise ValueError("the probe extracts against injective-mode keys")
    colors = extract_coloring(keypair, commitments)
    bad = sum(1 for u, v in graph.edges
              if colors[u] is None or colors[v] is None
              or colors[u] == colors[v])
    return 1.0 - bad / len(graph.edges)


def best_classical_commitment(graph: Graph, keypair: tcf.TcfKeypair,
                              rng: np.random.Generator):
    """Deterministic-strategy optimum: the assignment minimizing bad edges,
    committed honestly (including out-of-range colors, which make every
    incident edge bad)."""
    best, best_bad = None, None
    for assignment in itertools.product(range(4), repeat=graph.num_vertices):
        bad = sum(1 for u, v in graph.edges
                  if assignment[u] == 3 or assignment[v] == 3
                  or assignment[u] == assignment[v])
        if best_bad is None or bad < best_bad:
            best, best_bad = assignment, bad
    pp = keypair.pp
    ys = []
    for c in best:
        bits = []
        for j in (0, 1):
            if isinstance(pp, tcf.IdealPublic):
                r = int(rng.integers(0, 2 ** pp.r_bits))
                bits.append(tcf.evaluate_bit(pp, _color_bit(c, j), r))
            else:
                y, _ = tcf.commit_classical_bit(keypair, _color_bit(c, j), rng)
                bits.append(tcf.y_encode(pp, y))
        ys.append(tuple(bits))
    return ys, best, best_bad


def spa_extract(prover_hook, graph: Graph, rng: np.random.Generator,
                keypair: tcf.TcfKeypair | None = None):
    """Run a prover hook against injective-mode keys and invert the
    commitments; returns a valid coloring or None."""
    if keypair is None:
        keypair = tcf.setup(tcf.TcfMode.INJECTIVE, "ideal", rng,
                            domain_bits=2, r_bits=2)
    commitments = prover_hook(keypair.pp, rng)
    colors = extract_coloring(keypair, commitments)
    if any(c is None for c in colors):
        return None
    return colors if graph.is_valid_coloring(colors) else None


def honest_commit_hook(graph: Graph, amplitudes: dict):
    """Honest prover front half: shuffle, commit, surrender the images."""

    def hook(pp, rng):
        inst = "ideal" if isinstance(pp, tcf.IdealPublic) else "lattice"
        keypair = tcf.TcfKeypair(pp, None, pp.mode, 2, inst)
        tables = KeypairTables(keypair)
        state = make_witness_state(graph, amplitudes)
        ys = []
        for v in range(graph.num_vertices):
            y, state = _commit_vertex(state, tables, v, "", rng)
            ys.append(y)
        return ys

    return hook


# ---------------------------------------------------------------------------
# Repetition
# ---------------------------------------------------------------------------


def spa_sequential_repeat(graph: Graph, amplitudes: dict, k: int,
                          rng: np.random.Generator,
                          r_bits: int = 2):
    """k sessions in order on the same witness register (ideal family).

    Fresh recovery-mode keys each session; accepts iff every session accepts.
    Returns (verdict, distance of the final leftover to the input, transcripts).
    """
    if k < 1:
        raise ValueError("k >= 1")
    transcripts = []
    original = _normalized(amplitudes)
    current = dict(original)
    final_distance = 0.0
    for _ in range(k):
        keypair = tcf.setup(tcf.TcfMode.RECOVERY, "ideal", rng,
                            domain_bits=2, r_bits=r_bits)
        result = spa_run(graph, current, keypair, rng)
        transcripts.append(result.transcript)
        if result.verdict != "Accept":
            return "Reject", final_distance, transcripts
        # ideal accepting sessions strip every ancilla register, so the
        # leftover is a pure coloring superposition that threads onward
        leftover = result.leftover
        current = {tuple(int(x) for x in row): amp
                   for row, amp in zip(leftover.keys, leftover.amps)}
        final_distance = coloring_basis_distance(
            leftover.reduced_density(w_labels(graph)), original)
    return "Accept", final_distance, transcripts


def spa_parallel_repeat(graph: Graph, amplitudes: dict, n: int,
                        rng: np.random.Generator,
                        forced_edges: list | None = None):
    """n-fold repetition on coherent basis copies of the witness register.

    The witness is classically copied (per-vertex values repeated across n
    register banks), each session runs on its own bank with fresh keys and
    its own randomness stream, and the copies are uncomputed at the end.
    Returns (verdict, distance of the surviving register bank to the input).
    """
    if n < 1:
        raise ValueError("n >= 1")
    norm_amps = _normalized(amplitudes)
    nv = graph.num_vertices
    labels = [f"s{s}:w{v}" for s in range(n) for v in range(nv)]
    keys = []
    amps = []
    for coloring, a in sorted(norm_amps.items()):
        keys.append(tuple(coloring) * n)
        amps.append(a)
    state = SparseState(labels, [3] * (n * nv), np.array(keys),
                        np.array(amps, dtype=complex))

    session_rngs = qsim.spawn_rngs(rng.integers(2 ** 63), n)
    for s in range(n):
        srng = session_rngs[s]
        keypair = tcf.setup(tcf.TcfMode.RECOVERY, "ideal", srng,
                            domain_bits=2, r_bits=2)
        tables = KeypairTables(keypair)
        pre = f"s{s}:"
        state = state.add_register(f"{pre}perm", 6,
                                   [(p, 1 / math.sqrt(6)) for p in range(6)])
        transcript = SpaTranscript("ideal")
        forced = None if forced_edges is None else forced_edges[s]
        opening, state = _session(state, graph, tables, pre, srng, forced,
                                  transcript, drop_rand=True)
        if opening is None:
            return "Reject", None

    def uncopy(cols):
        out = cols.copy()
        base = cols[:, :nv]
        for s in range(1, n):
            out[:, s * nv:(s + 1) * nv] = (cols[:, s * nv:(s + 1) * nv]
                                           - base) % 3
        return out

    state = state.map_basis(labels, uncopy, check=False)
    for s in range(1, n):
        for v in range(nv):
            state = state.remove_register(f"s{s}:w{v}", expected_value=0)
    rho_basis = state.reduced_density([f"s0:w{v}" for v in range(nv)])
    return "Accept", coloring_basis_distance(rho_basis, norm_amps)
