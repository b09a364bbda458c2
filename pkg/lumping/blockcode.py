"""
Blocked lumping of K consecutive states and the characteristic graph of a
blocked source observed through a memoryless channel.
"""
import logging
from dataclasses import dataclass
from functools import reduce
from math import log
from typing import Iterator, List, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from config.settings import DEFAULT_CONFIG
from graphs.graph import (
    Graph,
    characteristic_graph_pair,
    confusion_graph,
    conormal_product,
    normal_product,
)
from graphs.partition import CliquePartition, independence_number, solve_clique_partition
from lumping.lump import LumpingFunction
from markov.chain import BlockedChain, ChainLike, TransitionMatrix, adjacency, as_chain, block, spectral_radius, stationary
from utils.errors import BoundViolationError, ResourceCapError, ValidationError

logger = logging.getLogger(__name__)

RATE_SLACK = 1e-9


class BlockAnalysis(BaseModel):
    model_config = ConfigDict(populate_by_name=True)

    K: int
    M_K: int
    S_K_size: int = Field(alias="S_K")
    rate_nats: float
    log_lambda_nats: float
    exact: bool


def _realizable_masks(B: BlockedChain) -> Tuple[int, List[int]]:
    """Bitset of realizable blocks and, per first symbol, the realizable blocks starting with it"""
    by_first = [0] * B.base.n_states
    realizable = 0
    for index, sequence in zip(B.realizable_indices().tolist(), B.realizable):
        bit = 1 << index
        realizable |= bit
        by_first[sequence[0]] |= bit
    return realizable, by_first


def _first_symbol_separation(B: BlockedChain) -> np.ndarray:
    # a, a' separated iff no last symbol of a realizable block leads to both
    last = np.zeros(B.base.n_states, dtype=bool)
    last[[sequence[-1] for sequence in B.realizable]] = True
    bits = B.base_adjacency.bits[last].astype(np.int64)
    return bits.T @ bits == 0


def blocked_characteristic_graph(B: BlockedChain) -> Graph:
    """
    Characteristic graph of the blocked chain over all N^K blocks.

    Unrealizable blocks are never accessed, so each is adjacent to every
    other block.
    """
    realizable, by_first = _realizable_masks(B)
    separated = _first_symbol_separation(B)
    full = (1 << B.n_blocks) - 1
    unrealizable = full & ~realizable

    reach = [
        reduce(lambda acc, b: acc | by_first[b], np.flatnonzero(separated[a]).tolist(), 0)
        for a in range(B.base.n_states)
    ]
    rows = []
    for index in range(B.n_blocks):
        if unrealizable >> index & 1:
            rows.append(full & ~(1 << index))
        else:
            first = B.sequence(index)[0]
            rows.append((unrealizable | reach[first]) & ~(1 << index))
    return Graph(B.n_blocks, tuple(rows))


def realizable_characteristic_graph(B: BlockedChain) -> Graph:
    """Blocked characteristic graph induced on S_K, vertices in S_K order"""
    separated = _first_symbol_separation(B)
    firsts = [sequence[0] for sequence in B.realizable]
    matrix = separated[np.ix_(firsts, firsts)].copy()
    np.fill_diagonal(matrix, False)
    return Graph.from_matrix(matrix)


def _blocked_partition(B: BlockedChain, solver: str, exact_cap: int) -> Tuple[CliquePartition, bool]:
    # unrealizable blocks are universal, so they join any block without changing γ;
    # the exact solver still sees them as one extra vertex
    graph = realizable_characteristic_graph(B)
    effective = graph.n_vertices + (1 if len(B.realizable) < B.n_blocks else 0)
    if solver == "exact" and effective > exact_cap:
        raise ResourceCapError("blocked clique partition exceeds the exact solver cap; use the greedy solver",
                               exact_cap, effective)
    if solver == "auto" and effective > exact_cap:
        solver = "greedy"
        logger.warning(f"K={B.block_len}: {effective} effective vertices exceed the exact cap, using greedy")
    return solve_clique_partition(graph, solver=solver, exact_cap=exact_cap)


def block_analysis(P: ChainLike, K: int, solver: str = "auto",
                   exact_cap: int = DEFAULT_CONFIG.exact_solver_cap,
                   enumeration_cap: int = DEFAULT_CONFIG.enumeration_cap,
                   positivity: float = DEFAULT_CONFIG.positivity_threshold) -> BlockAnalysis:
    """M_K, |S_K| and log M_K / K against log λ"""
    P = as_chain(P)
    B = block(P, K, enumeration_cap=enumeration_cap, positivity=positivity)
    partition, exact = _blocked_partition(B, solver, exact_cap)
    log_lambda = log(spectral_radius(adjacency(P, positivity=positivity)))

    analysis = BlockAnalysis(
        K=K,
        M_K=partition.size,
        S_K=len(B.realizable),
        rate_nats=log(partition.size) / K,
        log_lambda_nats=log_lambda,
        exact=exact,
    )
    if analysis.M_K > analysis.S_K_size:
        raise BoundViolationError(f"M_K={analysis.M_K} exceeds |S_K|={analysis.S_K_size}")
    if exact and analysis.rate_nats < log_lambda - RATE_SLACK:
        raise BoundViolationError(f"rate {analysis.rate_nats:.6g} below log λ = {log_lambda:.6g}")
    logger.info(f"K={K}: M_K={analysis.M_K}, |S_K|={analysis.S_K_size}, exact={exact}")
    return analysis


def blocked_lumping(P: ChainLike, K: int, solver: str = "auto",
                    exact_cap: int = DEFAULT_CONFIG.exact_solver_cap,
                    enumeration_cap: int = DEFAULT_CONFIG.enumeration_cap,
                    positivity: float = DEFAULT_CONFIG.positivity_threshold) -> Tuple[LumpingFunction, bool]:
    """g_K over all N^K blocks; unrealizable blocks share symbol 0"""
    B = block(as_chain(P), K, enumeration_cap=enumeration_cap, positivity=positivity)
    partition, exact = _blocked_partition(B, solver, exact_cap)
    mapping = [0] * B.n_blocks
    for position, symbol in zip(B.realizable_indices().tolist(), partition.lumping_map()):
        mapping[position] = symbol
    return LumpingFunction(B.n_blocks, partition.size, tuple(mapping)), exact


def block_sweep(P: ChainLike, K_max: int, **kwargs) -> Iterator[BlockAnalysis]:
    """BlockAnalysis for K = 1..K_max; stops at the first K over a cap"""
    if K_max < 1:
        raise ValidationError(f"K must be ≥ 1, got {K_max}")
    P = as_chain(P)
    for K in range(1, K_max + 1):
        yield block_analysis(P, K, **kwargs)


@dataclass(frozen=True, eq=False)
class JointBlockSource:
    """Sumber ter-blok X_1^K dengan informasi sisi Z_1^K lewat DMC W"""
    base: TransitionMatrix
    W: np.ndarray
    K: int
    tolerance: float = DEFAULT_CONFIG.stochastic_tolerance

    def __post_init__(self):
        object.__setattr__(self, "base", as_chain(self.base))
        W = np.array(self.W, dtype=float)
        if W.ndim != 2 or W.shape[0] != self.base.n_states:
            raise ValidationError(f"channel needs {self.base.n_states} rows, got shape {W.shape}")
        if np.any(W < 0) or np.any(np.abs(W.sum(axis=1) - 1.0) > self.tolerance):
            raise ValidationError("channel matrix must be row-stochastic")
        if self.K < 1:
            raise ValidationError(f"K must be ≥ 1, got {self.K}")
        W.setflags(write=False)
        object.__setattr__(self, "W", W)

    @property
    def n_inputs(self) -> int:
        return self.base.n_states

    @property
    def n_outputs(self) -> int:
        return self.W.shape[1]

    def single_letter_joint(self, **kwargs) -> np.ndarray:
        """Q[x, z] = μ_x W[x, z]"""
        return stationary(self.base, **kwargs).mu[:, None] * self.W

    def _check_cells(self, enumeration_cap: int):
        cells = (self.n_inputs * self.n_outputs) ** self.K
        if cells > enumeration_cap:
            raise ResourceCapError("joint block distribution exceeds the enumeration cap", enumeration_cap, cells)

    def joint_support(self, enumeration_cap: int = DEFAULT_CONFIG.enumeration_cap,
                      positivity: float = DEFAULT_CONFIG.positivity_threshold) -> np.ndarray:
        """(x, z) with positive joint mass: x realizable and every W[x_i, z_i] positive"""
        self._check_cells(enumeration_cap)
        B = block(self.base, self.K, enumeration_cap=enumeration_cap, positivity=positivity)
        channel = reduce(np.kron, [(self.W > positivity).astype(np.int64)] * self.K) > 0
        return B.realizable_mask()[:, None] & channel

    def joint(self, enumeration_cap: int = DEFAULT_CONFIG.enumeration_cap,
              positivity: float = DEFAULT_CONFIG.positivity_threshold) -> np.ndarray:
        """Joint mass of (X_1^K, Z_1^K) over N^K × |Z|^K, mixed radix"""
        self._check_cells(enumeration_cap)
        B = block(self.base, self.K, enumeration_cap=enumeration_cap, positivity=positivity)
        mu = stationary(self.base, positivity=positivity).mu
        rows = self.base.rows

        p = np.zeros(B.n_blocks)
        for index, sequence in zip(B.realizable_indices().tolist(), B.realizable):
            p[index] = mu[sequence[0]] * np.prod([rows[a, b] for a, b in zip(sequence, sequence[1:])])
        channel = reduce(np.kron, [self.W] * self.K)
        return p[:, None] * channel


def sideinfo_characteristic_graph_direct(J: JointBlockSource,
                                         enumeration_cap: int = DEFAULT_CONFIG.enumeration_cap,
                                         positivity: float = DEFAULT_CONFIG.positivity_threshold) -> Graph:
    """Pairs of blocks that no side-information word can both produce"""
    support = J.joint_support(enumeration_cap=enumeration_cap, positivity=positivity)
    # the graph depends on the support only, so mass is spread uniformly over it
    return characteristic_graph_pair(support / support.sum(), positivity=positivity)


def sideinfo_characteristic_graph_formula(J: JointBlockSource,
                                          enumeration_cap: int = DEFAULT_CONFIG.enumeration_cap,
                                          positivity: float = DEFAULT_CONFIG.positivity_threshold) -> Graph:
    """Co-normal power of the single-letter graph plus every pair touching an unrealizable block"""
    single = characteristic_graph_pair(J.single_letter_joint(positivity=positivity), positivity=positivity)
    product = conormal_product(single, J.K, enumeration_cap=enumeration_cap)
    B = block(J.base, J.K, enumeration_cap=enumeration_cap, positivity=positivity)

    full = (1 << B.n_blocks) - 1
    realizable, _ = _realizable_masks(B)
    unrealizable = full & ~realizable
    rows = [
        (full if unrealizable >> v & 1 else row | unrealizable) & ~(1 << v)
        for v, row in enumerate(product.rows)
    ]
    return Graph(B.n_blocks, tuple(rows))


def channel_message_count(W: np.ndarray, K: int,
                          exact_cap: int = DEFAULT_CONFIG.exact_solver_cap,
                          enumeration_cap: int = DEFAULT_CONFIG.enumeration_cap,
                          positivity: float = DEFAULT_CONFIG.positivity_threshold) -> int:
    """α of the K-fold normal power of the confusion graph"""
    product = normal_product(confusion_graph(W, positivity=positivity), K, enumeration_cap=enumeration_cap)
    return independence_number(product, exact_cap=exact_cap)
