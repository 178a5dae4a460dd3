"""Coined discrete-time walks on graphs, marked-vertex search, and the
walk-based key agreement.

The walk state lives on directed arcs (tail vertex, neighbor slot), which is
the coin (x) position space: for a regular graph of degree d the dimension is
d * N. One step applies the coin - the degree-d diffusion operator
2/d * J - I at unmarked vertices, -I at marked ones - then the flip-flop
shift, which moves each arc onto its reversal. Both factors are involutions,
so the inverse step is shift-then-coin.

On a torus grid with a single marked vertex this walk finds the mark in
O(sqrt(N log N)) steps with success probability Omega(1/log N); the
`scaling_sweep` measures exactly that, and `keyspace_grid_attack` replays it
as an eavesdropper searching a key space arranged as a grid.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .broadcast import (
    BroadcastSource,
    KeyWindow,
    Receiver,
    aligned_start_time,
    extract_key,
)
from .errors import DomainError
from .keyexchange import run_clock_sync, teleport_secret_int
from .transcript import Transcript, text_payload


class Graph:
    """Undirected graph with binary vertex marks and a precomputed arc table."""

    def __init__(self, kind: str, adjacency, marked=()):
        self.kind = kind
        self.adjacency = tuple(tuple(nbrs) for nbrs in adjacency)
        self.n_vertices = len(self.adjacency)
        self.marked = frozenset(int(v) for v in marked)
        for v, nbrs in enumerate(self.adjacency):
            if len(set(nbrs)) != len(nbrs) or v in nbrs:
                raise DomainError(f"vertex {v}: self-loop or parallel edge")
            for u in nbrs:
                if not 0 <= u < self.n_vertices:
                    raise DomainError(f"vertex {v}: neighbor {u} out of range")
                if v not in self.adjacency[u]:
                    raise DomainError(f"edge {v}->{u} has no reverse")
        for v in self.marked:
            if not 0 <= v < self.n_vertices:
                raise DomainError(f"marked vertex {v} out of range")
        degrees = np.array([len(nbrs) for nbrs in self.adjacency], dtype=np.int64)
        if degrees.min(initial=1) < 1:
            raise DomainError("isolated vertex")
        self.arc_degrees = degrees
        self.arc_offsets = np.concatenate(([0], np.cumsum(degrees)[:-1]))
        self.n_arcs = int(degrees.sum())
        tails = np.repeat(np.arange(self.n_vertices), degrees)
        self.arc_tail = tails
        reversal = np.empty(self.n_arcs, dtype=np.int64)
        for v, nbrs in enumerate(self.adjacency):
            for j, u in enumerate(nbrs):
                reversal[self.arc_offsets[v] + j] = self.arc_offsets[u] + self.adjacency[u].index(v)
        self.arc_reversal = reversal


def cycle_graph(n: int, marked=()) -> Graph:
    if n < 3:
        raise DomainError(f"cycle needs >= 3 vertices, got {n}")
    adjacency = [((v + 1) % n, (v - 1) % n) for v in range(n)]
    return Graph("cycle", adjacency, marked)


def torus_graph(n: int, marked=()) -> Graph:
    """sqrt(n) x sqrt(n) grid with wraparound; neighbor order +x, -x, +y, -y."""
    side = math.isqrt(n)
    if side * side != n:
        raise DomainError(f"torus needs a perfect-square vertex count, got {n}")
    if side < 3:
        raise DomainError(f"torus side must be >= 3, got {side}")
    adjacency = []
    for v in range(n):
        y, x = divmod(v, side)
        adjacency.append(
            (
                y * side + (x + 1) % side,
                y * side + (x - 1) % side,
                ((y + 1) % side) * side + x,
                ((y - 1) % side) * side + x,
            )
        )
    return Graph("torus", adjacency, marked)


def binary_tree_graph(depth: int, marked=()) -> Graph:
    """Full binary tree with 2^(depth+1) - 1 vertices, root 0."""
    if depth < 1:
        raise DomainError(f"tree depth must be >= 1, got {depth}")
    n = (1 << (depth + 1)) - 1
    adjacency = []
    for v in range(n):
        nbrs = []
        if v > 0:
            nbrs.append((v - 1) // 2)
        if 2 * v + 1 < n:
            nbrs.extend((2 * v + 1, 2 * v + 2))
        adjacency.append(tuple(nbrs))
    return Graph("binary_tree", adjacency, marked)


@dataclass(frozen=True)
class CoinedWalkState:
    """Unit-norm amplitude vector over the graph's arcs."""

    amplitudes: np.ndarray

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=complex)
        object.__setattr__(self, "amplitudes", amps)
        norm = float(np.linalg.norm(amps))
        if abs(norm - 1.0) > 1e-9:
            raise DomainError(f"walk state norm {norm} deviates from 1")


@dataclass(frozen=True)
class WalkOperator:
    """One marked-walk step U' = shift o (conditional coin).

    coin: diffusion 2/d * J - I on each unmarked vertex's arc block, -I on
    marked blocks. shift: the flip-flop arc reversal permutation.
    """

    coin_factor: np.ndarray  # per-arc 2/deg(tail)
    marked_mask: np.ndarray  # per-arc: tail vertex is marked
    shift_perm: np.ndarray  # arc reversal


def marked_walk(graph: Graph) -> WalkOperator:
    degrees_per_arc = np.repeat(graph.arc_degrees, graph.arc_degrees)
    marked = np.zeros(graph.n_vertices, dtype=bool)
    for v in graph.marked:
        marked[v] = True
    return WalkOperator(
        coin_factor=2.0 / degrees_per_arc,
        marked_mask=marked[graph.arc_tail],
        shift_perm=graph.arc_reversal,
    )


def uniform_superposition(graph: Graph) -> CoinedWalkState:
    amps = np.full(graph.n_arcs, 1.0 / math.sqrt(graph.n_arcs), dtype=complex)
    return CoinedWalkState(amps)


def _apply_coin(amps: np.ndarray, graph: Graph, operator: WalkOperator) -> np.ndarray:
    block_sums = np.add.reduceat(amps, graph.arc_offsets)
    coined = operator.coin_factor * np.repeat(block_sums, graph.arc_degrees) - amps
    coined[operator.marked_mask] = -amps[operator.marked_mask]
    return coined


def step(state: CoinedWalkState, graph: Graph, operator: WalkOperator) -> CoinedWalkState:
    """Apply one walk step: conditional coin, then flip-flop shift."""
    amps = state.amplitudes
    if amps.shape != (graph.n_arcs,):
        raise DomainError(f"state has {amps.shape} amplitudes, graph has {graph.n_arcs} arcs")
    coined = _apply_coin(amps, graph, operator)
    return CoinedWalkState(coined[operator.shift_perm])


def step_inverse(state: CoinedWalkState, graph: Graph, operator: WalkOperator) -> CoinedWalkState:
    """Inverse step (coin and shift are involutions, so: shift then coin)."""
    amps = state.amplitudes
    if amps.shape != (graph.n_arcs,):
        raise DomainError(f"state has {amps.shape} amplitudes, graph has {graph.n_arcs} arcs")
    return CoinedWalkState(_apply_coin(amps[operator.shift_perm], graph, operator))


def position_probabilities(state: CoinedWalkState, graph: Graph) -> np.ndarray:
    weights = np.abs(state.amplitudes) ** 2
    return np.add.reduceat(weights, graph.arc_offsets)


@dataclass(frozen=True)
class SearchResult:
    measured_vertex: int
    success: bool
    steps_t: int
    exact_success_probability: float


def search(graph: Graph, t_steps: int, rng: np.random.Generator) -> SearchResult:
    """Run t_steps of the marked walk from the uniform state, then measure."""
    if not graph.marked:
        raise DomainError("search needs at least one marked vertex")
    if t_steps < 0:
        raise DomainError(f"step count must be >= 0, got {t_steps}")
    operator = marked_walk(graph)
    state = uniform_superposition(graph)
    for _ in range(t_steps):
        state = step(state, graph, operator)
    probs = position_probabilities(state, graph)
    exact = float(probs[sorted(graph.marked)].sum())
    probs = np.clip(probs.real, 0.0, None)
    vertex = int(rng.choice(graph.n_vertices, p=probs / probs.sum()))
    return SearchResult(
        measured_vertex=vertex,
        success=vertex in graph.marked,
        steps_t=t_steps,
        exact_success_probability=exact,
    )


def success_probability_trace(graph: Graph, t_limit: int) -> np.ndarray:
    """Exact success probability after t = 0..t_limit steps (no sampling)."""
    if not graph.marked:
        raise DomainError("trace needs at least one marked vertex")
    operator = marked_walk(graph)
    state = uniform_superposition(graph)
    marked = sorted(graph.marked)
    trace = np.empty(t_limit + 1)
    trace[0] = position_probabilities(state, graph)[marked].sum()
    for t in range(1, t_limit + 1):
        state = step(state, graph, operator)
        trace[t] = position_probabilities(state, graph)[marked].sum()
    return trace


@dataclass(frozen=True)
class SweepPoint:
    n_vertices: int
    t_star: int
    p_star: float


def sweep_step_cap(n: int, cap_factor: float = 4.0) -> int:
    return int(math.floor(cap_factor * math.sqrt(n * math.log2(n))))


def scaling_sweep(sizes, rng: np.random.Generator, cap_factor: float = 4.0) -> list[SweepPoint]:
    """Best single-marked-vertex search on torus grids of the given sizes.

    For each N the sweep scans t <= cap_factor * sqrt(N log2 N) exactly and
    records the argmax step count t* and its success probability p*.
    """
    points = []
    for n in sizes:
        marked_vertex = int(rng.integers(n))
        graph = torus_graph(n, marked={marked_vertex})
        trace = success_probability_trace(graph, sweep_step_cap(n, cap_factor))
        t_star = int(np.argmax(trace))
        points.append(SweepPoint(n_vertices=n, t_star=t_star, p_star=float(trace[t_star])))
    return points


# -- classical tree walking and the agreement protocol ------------------------


def tree_walk_key(stream_bits: np.ndarray, operator_seed: int, depth: int) -> np.ndarray:
    """Descend a depth-`depth` binary tree; the level-i branch is stream bit i
    XOR seed bit i (seed expanded MSB-first over `depth` bits). Returns the
    root-to-leaf path, which labels the reached leaf. O(depth) work."""
    if depth < 1:
        raise DomainError(f"depth must be >= 1, got {depth}")
    stream_bits = np.asarray(stream_bits, dtype=np.uint8)
    if stream_bits.size < depth:
        raise DomainError(f"stream exhausted: need {depth} bits, have {stream_bits.size}")
    if not 0 <= operator_seed < (1 << depth):
        raise DomainError(f"operator seed {operator_seed} does not fit in {depth} bits")
    seed_bits = np.array(
        [(operator_seed >> (depth - 1 - i)) & 1 for i in range(depth)], dtype=np.uint8
    )
    return stream_bits[:depth] ^ seed_bits


@dataclass(frozen=True)
class WalkAgreementResult:
    key_alice: np.ndarray
    key_bob: np.ndarray
    agreed: bool
    transcript: Transcript
    operator_seed: int
    sync_error_ns: float


def walk_agreement(
    alice: Receiver,
    bob: Receiver,
    source: BroadcastSource,
    window: KeyWindow,
    rng: np.random.Generator,
    sync_n_bits: int = 14,
    sync_t_max_ns: float = 1.6384e6,
    sync_shots_per_bit: int = 100,
) -> WalkAgreementResult:
    """Both parties tree-walk the same broadcast window with a teleported seed.

    The walk depth equals the window length; the start time and depth are
    public, the operator seed rides the teleportation channel only.
    """
    depth = window.length
    transcript = Transcript()
    sync = run_clock_sync(
        alice, bob, rng, transcript, sync_n_bits, sync_t_max_ns, sync_shots_per_bit
    )
    delay_gap_ns = bob.propagation_delay_ns - alice.propagation_delay_ns
    t_alice = aligned_start_time(source, alice, window.start_local_time_ns)
    transcript.add(
        "walk-window", "alice", "bob", "public", text_payload(f"{t_alice:.3f},{depth}")
    )
    operator_seed = int.from_bytes(rng.bytes((depth + 7) // 8), "big") & ((1 << depth) - 1)
    received_seed = teleport_secret_int(
        operator_seed, depth, rng, transcript, "operator"
    )
    t_bob = t_alice + delay_gap_ns + sync.estimate_ns
    bits_alice = extract_key(source, alice, KeyWindow(t_alice, depth))
    bits_bob = extract_key(source, bob, KeyWindow(t_bob, depth))
    transcript.add("walk.read", "satellite", "alice", "broadcast", b"")
    transcript.add("walk.read", "satellite", "bob", "broadcast", b"")
    key_alice = tree_walk_key(bits_alice, operator_seed, depth)
    key_bob = tree_walk_key(bits_bob, received_seed, depth)
    agreed = bool(np.array_equal(key_alice, key_bob))
    if not agreed:
        transcript.add("key.mismatch", "bob", "alice", "public", b"")
    return WalkAgreementResult(
        key_alice=key_alice,
        key_bob=key_bob,
        agreed=agreed,
        transcript=transcript,
        operator_seed=operator_seed,
        sync_error_ns=sync.error_ns,
    )


@dataclass(frozen=True)
class GridAttackReport:
    keyspace_size: int
    t_star: int
    p_star: float
    shortfall: float  # 1 - p_star: how far one sweep falls short of certainty


def keyspace_grid_attack(
    true_key: int, key_bits: int, cap_factor: float = 4.0
) -> GridAttackReport:
    """Eavesdropper's walk search over a key space arranged as a torus grid.

    The 2**key_bits keys become grid vertices with the true key marked; one
    search pass succeeds with the sweep's p*, which decays like 1/log N, and
    the report carries the gap to certainty alongside it.
    """
    if key_bits < 4 or key_bits % 2:
        raise DomainError("keyspace grid needs an even key width >= 4")
    n = 1 << key_bits
    if not 0 <= true_key < n:
        raise DomainError(f"true key {true_key} outside the {key_bits}-bit space")
    graph = torus_graph(n, marked={true_key})
    trace = success_probability_trace(graph, sweep_step_cap(n, cap_factor))
    t_star = int(np.argmax(trace))
    p_star = float(trace[t_star])
    return GridAttackReport(
        keyspace_size=n, t_star=t_star, p_star=p_star, shortfall=1.0 - p_star
    )
