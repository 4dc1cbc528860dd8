"""Deterministic synchronous-round gossip simulator.

Every round, each node announces a filter to each of its out-neighbours in
a fixed order. The receiver builds its own filter under the same mapping,
requests the indices only the announcer has set, and the announcer answers
with every element covering those indices. Optionally the receiver also
pushes the elements covering the bits only it has set. Transfers are either
applied after all edges are processed or become visible immediately.

Element sets are held as boolean masks over the universe; the per-element
work is vectorised with numpy.
"""

from __future__ import annotations

import copy
import enum
import logging
from dataclasses import asdict, dataclass, field
from typing import BinaryIO

import numpy as np

from . import wire
from .bloom import FilterParams, base_hashes, derive_params, standard_index_matrix
from .hashing import Digest, digest, low64_array
from .mapping import derive_mapping, dbf_index_matrix, interaction_seed, pair_seed
from .reconcile import negotiate_params

log = logging.getLogger(__name__)

# Global salt of the standard filter; every pair shares this mapping.
SBF_SALT = 0x5EED_B10F


class FilterKind(str, enum.Enum):
    SBF = "sbf"
    DBF = "dbf"


class Sizing(str, enum.Enum):
    FIXED_UNIVERSE = "fixed"
    ADAPTIVE = "adaptive"


class SeedModeName(str, enum.Enum):
    PAIR_STATIC = "pair_static"
    PER_INTERACTION = "per_interaction"


class Delivery(str, enum.Enum):
    """When transferred elements become visible to the receiver's later filters."""

    END_OF_ROUND = "end_of_round"
    IMMEDIATE = "immediate"


@dataclass
class SimConfig:
    num_nodes: int = 50
    out_degree: int = 10
    universe_size: int = 1000
    initial_subset_size: int = 200
    p_target: float = 0.5
    filter_kind: FilterKind = FilterKind.DBF
    sizing: Sizing = Sizing.FIXED_UNIVERSE
    seed_mode: SeedModeName = SeedModeName.PAIR_STATIC
    rng_seed: int = 0
    max_rounds: int = 50
    push_surplus: bool = False
    delivery: Delivery = Delivery.END_OF_ROUND

    def __post_init__(self):
        self.delivery = Delivery(self.delivery)
        self.filter_kind = FilterKind(self.filter_kind)
        self.sizing = Sizing(self.sizing)
        self.seed_mode = SeedModeName(self.seed_mode)
        if self.num_nodes < 1 or self.universe_size < 1:
            raise ValueError("num_nodes and universe_size must be >= 1")
        if not 0 <= self.out_degree < self.num_nodes:
            raise ValueError(f"out_degree must be in [0, num_nodes), got {self.out_degree}")
        if not 0 <= self.initial_subset_size <= self.universe_size:
            raise ValueError("initial_subset_size must be in [0, universe_size]")
        if not 0.0 < self.p_target < 1.0:
            raise ValueError("p_target must be in (0, 1)")
        if self.max_rounds < 0:
            raise ValueError("max_rounds must be >= 0")
        if not 0 <= self.rng_seed < 2**64:
            raise ValueError("rng_seed must fit in 64 bits")

    def to_dict(self) -> dict:
        d = asdict(self)
        for key in ("filter_kind", "sizing", "seed_mode", "delivery"):
            d[key] = d[key].value
        return d


@dataclass
class NodeState:
    id: Digest
    held: np.ndarray
    hash_invocations: int = 0
    bits_sent: int = 0
    bits_received: int = 0
    elements_received: int = 0
    # one-slot cache of the last standard filter: (m, k, covered mask, bits)
    sbf_cache: tuple | None = field(default=None, repr=False)

    @property
    def size(self) -> int:
        return int(self.held.sum())


@dataclass(frozen=True)
class RoundMetrics:
    round: int
    converged_nodes: int
    median_set_size: int
    total_bits_sent: int
    hash_invocations: int
    elements_transferred: int


@dataclass
class SimState:
    config: SimConfig
    universe: list[Digest]
    nodes: list[NodeState]
    neighbors: list[list[int]]
    round: int = 0
    element_low64: np.ndarray = field(default=None, repr=False)
    sbf_h1: np.ndarray = field(default=None, repr=False)
    sbf_h2: np.ndarray = field(default=None, repr=False)

    def __post_init__(self):
        if self.element_low64 is None:
            self.element_low64 = low64_array(self.universe)
        if self.sbf_h1 is None:
            pairs = [base_hashes(e, SBF_SALT) for e in self.universe]
            self.sbf_h1 = np.array([p[0] for p in pairs], dtype=np.uint64)
            self.sbf_h2 = np.array([p[1] for p in pairs], dtype=np.uint64)

    def elements(self, node: int) -> set[Digest]:
        return {self.universe[i] for i in np.flatnonzero(self.nodes[node].held)}

    def sizes(self) -> list[int]:
        return [n.size for n in self.nodes]

    def copy(self) -> SimState:
        nodes = [copy.copy(n) for n in self.nodes]
        for n in nodes:
            n.held = n.held.copy()
        return SimState(
            self.config, self.universe, nodes, self.neighbors, self.round,
            self.element_low64, self.sbf_h1, self.sbf_h2,
        )


def build_universe(universe_size: int, rng: np.random.Generator) -> list[Digest]:
    if universe_size < 1:
        raise ValueError("universe_size must be >= 1")
    while True:
        raw = rng.bytes(32 * universe_size)
        universe = [raw[i * 32:(i + 1) * 32] for i in range(universe_size)]
        if len(set(universe)) == universe_size:
            return universe


def node_id(index: int) -> Digest:
    return digest(index.to_bytes(8, "big"))


def assign_subsets(universe: list[Digest], num_nodes: int, subset_size: int, rng: np.random.Generator) -> list[NodeState]:
    if subset_size > len(universe):
        raise ValueError("subset larger than universe")
    nodes = []
    for i in range(num_nodes):
        held = np.zeros(len(universe), dtype=bool)
        held[rng.choice(len(universe), size=subset_size, replace=False)] = True
        nodes.append(NodeState(node_id(i), held))
    return nodes


def build_topology(num_nodes: int, out_degree: int, rng: np.random.Generator) -> list[list[int]]:
    """Directed graph; each node gets ``out_degree`` distinct out-neighbours other than itself."""
    if not 0 <= out_degree < num_nodes:
        raise ValueError("out_degree must be < num_nodes")
    topology = []
    for u in range(num_nodes):
        others = np.array([v for v in range(num_nodes) if v != u])
        picked = rng.choice(others, size=out_degree, replace=False)
        topology.append(sorted(int(v) for v in picked))
    return topology


def init_state(config: SimConfig) -> SimState:
    rng = np.random.default_rng(config.rng_seed)
    universe = build_universe(config.universe_size, rng)
    nodes = assign_subsets(universe, config.num_nodes, config.initial_subset_size, rng)
    neighbors = build_topology(config.num_nodes, config.out_degree, rng)
    return SimState(config, universe, nodes, neighbors)


def lower_median(values) -> int:
    s = sorted(values)
    return int(s[(len(s) - 1) // 2]) if s else 0


def measure(state: SimState, bits_sent: int = 0, hashes: int = 0, transferred: int = 0) -> RoundMetrics:
    sizes = state.sizes()
    return RoundMetrics(
        round=state.round,
        converged_nodes=sum(s == state.config.universe_size for s in sizes),
        median_set_size=lower_median(sizes),
        total_bits_sent=bits_sent,
        hash_invocations=hashes,
        elements_transferred=transferred,
    )


class _Round:
    """Bookkeeping for one round.

    ``view`` is each node's element set as used for building filters: the
    start-of-round snapshot under end-of-round delivery, updated after every
    transfer under immediate delivery.
    """

    def __init__(self, state: SimState, trace: BinaryIO | None):
        self.state = state
        self.cfg = state.config
        self.trace = trace
        self.immediate = self.cfg.delivery is Delivery.IMMEDIATE
        self.view = [n.held.copy() for n in state.nodes]
        self.members = [np.flatnonzero(h) for h in self.view]
        self.inbox = [np.zeros(len(state.universe), dtype=bool) for _ in state.nodes]
        self.bits_sent = 0
        self.hashes = 0
        self.transferred = 0
        if self.cfg.sizing is Sizing.FIXED_UNIVERSE:
            self.fixed_params = derive_params(self.cfg.universe_size, self.cfg.p_target)

    def send(self, src: int, dst: int, msg_size: int, msg=None):
        if self.trace is not None:
            if wire.encoded_size(msg) != msg_size:
                raise AssertionError("bandwidth accounting disagrees with the codec")
            wire.write_trace(self.trace, msg)
        bits = 8 * msg_size
        self.state.nodes[src].bits_sent += bits
        self.state.nodes[dst].bits_received += bits
        self.bits_sent += bits

    def charge(self, node: int, calls: int):
        self.state.nodes[node].hash_invocations += calls
        self.hashes += calls

    def sbf_filter(self, node: int, params: FilterParams) -> tuple[np.ndarray, np.ndarray]:
        """Index matrix and bits of a node's standard filter.

        The previous filter is extended in place (two hashes per new element)
        when m and k are unchanged; otherwise the whole set is rehashed.
        """
        st = self.state
        ns = st.nodes[node]
        held, mem = self.view[node], self.members[node]
        idx = standard_index_matrix(st.sbf_h1[mem], st.sbf_h2[mem], params)
        cache = ns.sbf_cache
        if cache is not None and cache[:2] == (params.m, params.k) and not (cache[2] & ~held).any():
            fresh = held & ~cache[2]
            self.charge(node, 2 * int(fresh.sum()))
            bits = cache[3].copy()
            bits[standard_index_matrix(st.sbf_h1[fresh], st.sbf_h2[fresh], params).ravel()] = 1
        else:
            self.charge(node, 2 * len(mem))
            bits = np.zeros(params.m, dtype=np.uint8)
            bits[idx.ravel()] = 1
        ns.sbf_cache = (params.m, params.k, held.copy(), bits)
        return idx, bits

    def dbf_filter(self, node: int, mapping_low64: np.ndarray, params: FilterParams) -> tuple[np.ndarray, np.ndarray]:
        idx = dbf_index_matrix(self.state.element_low64[self.members[node]], mapping_low64, params.m)
        bits = np.zeros(params.m, dtype=np.uint8)
        bits[idx.ravel()] = 1
        return idx, bits

    def edge(self, u: int, v: int):
        st, cfg = self.state, self.cfg
        mem_u, mem_v = self.members[u], self.members[v]
        n_u, n_v = len(mem_u), len(mem_v)
        if cfg.sizing is Sizing.ADAPTIVE:
            for src, dst, n in ((u, v, n_u), (v, u, n_v)):
                probe = wire.SizeProbe(n)
                self.send(src, dst, wire.encoded_size(probe), probe)
            if n_u == 0 and n_v == 0:
                return
            params = negotiate_params(n_u, n_v, cfg.p_target)
        else:
            params = self.fixed_params

        if cfg.filter_kind is FilterKind.DBF:
            id_u, id_v = st.nodes[u].id, st.nodes[v].id
            if cfg.seed_mode is SeedModeName.PER_INTERACTION:
                seed = interaction_seed(id_u, id_v, st.round)
            else:
                seed = pair_seed(id_u, id_v)
            mapping = derive_mapping(seed, params.k)
            # both endpoints derive the chain
            self.charge(u, mapping.hash_calls)
            self.charge(v, mapping.hash_calls)
            m_low = mapping.low64()
            idx_u, bits_u = self.dbf_filter(u, m_low, params)
            idx_v, bits_v = self.dbf_filter(v, m_low, params)
            mode, counter = int(seed.mode), seed.counter
        else:
            idx_u, bits_u = self.sbf_filter(u, params)
            idx_v, bits_v = self.sbf_filter(v, params)
            mode, counter = wire.MODE_STANDARD, SBF_SALT

        announce = None
        if self.trace is not None:
            announce = wire.FilterAnnounce.from_bits(st.nodes[u].id, mode, counter, params.k, n_u, bits_u)
        self.send(u, v, wire.announce_size(params.m), announce)

        missing = (bits_u == 1) & (bits_v == 0)
        if missing.any():
            request = None
            if self.trace is not None:
                request = wire.IndexRequest(tuple(np.flatnonzero(missing).tolist()))
            self.send(v, u, wire.request_size(int(missing.sum())), request)
            self.transfer(u, v, mem_u[missing[idx_u].any(axis=1)])
        if cfg.push_surplus:
            surplus = (bits_v == 1) & (bits_u == 0)
            if surplus.any():
                self.transfer(v, u, mem_v[surplus[idx_v].any(axis=1)])

    def transfer(self, src: int, dst: int, elems: np.ndarray):
        msg = None
        if self.trace is not None:
            msg = wire.ElementTransfer(tuple(self.state.universe[i] for i in elems))
        self.send(src, dst, wire.transfer_size(len(elems)), msg)
        self.inbox[dst][elems] = True
        self.transferred += len(elems)
        if self.immediate:
            self.view[dst][elems] = True
            self.members[dst] = np.flatnonzero(self.view[dst])

    def finish(self) -> RoundMetrics:
        for node, incoming in zip(self.state.nodes, self.inbox):
            gained = incoming & ~node.held
            node.elements_received += int(gained.sum())
            node.held |= incoming
        return measure(self.state, self.bits_sent, self.hashes, self.transferred)


def run_round(state: SimState, config: SimConfig | None = None, trace: BinaryIO | None = None) -> tuple[SimState, RoundMetrics]:
    """Advance one round; ``state`` itself is left untouched."""
    new = state.copy()
    if config is not None:
        new.config = config
    new.round = state.round + 1
    rnd = _Round(new, trace)
    for u, outs in enumerate(new.neighbors):
        for v in outs:
            rnd.edge(u, v)
    return new, rnd.finish()


@dataclass
class ExperimentResult:
    config: SimConfig
    metrics: list[RoundMetrics]
    state: SimState

    @property
    def final(self) -> RoundMetrics:
        return self.metrics[-1]


def run_experiment(config: SimConfig, trace: BinaryIO | None = None) -> ExperimentResult:
    """Run rounds until every node holds the universe or ``max_rounds`` is reached."""
    state = init_state(config)
    metrics = [measure(state)]
    while metrics[-1].converged_nodes < config.num_nodes and state.round < config.max_rounds:
        state, m = run_round(state, trace=trace)
        metrics.append(m)
        log.debug("round %d: converged=%d median=%d", m.round, m.converged_nodes, m.median_set_size)
    return ExperimentResult(config, metrics, state)
