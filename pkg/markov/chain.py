"""
Markov chain representation, structural checks, stationary analysis,
entropy rates and K-fold blocking.

States are 0-based throughout; human-readable names only show up
through the optional ``labels`` field of a chain file.
"""
import logging
from collections import deque
from dataclasses import dataclass
from functools import reduce
from math import gcd, log
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import breadth_first_order, connected_components
from scipy.stats import entropy

from config.settings import DEFAULT_CONFIG
from utils.errors import (
    ChainValidationError,
    ConvergenceError,
    NotIrreducibleError,
    ResourceCapError,
    ValidationError,
)

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class TransitionMatrix:
    """Matriks transisi P (row-stochastic) dari rantai Markov"""
    rows: np.ndarray
    labels: Optional[Tuple[str, ...]] = None
    tolerance: float = DEFAULT_CONFIG.stochastic_tolerance

    def __post_init__(self):
        try:
            rows = np.array(self.rows, dtype=float)
        except (TypeError, ValueError) as e:
            raise ChainValidationError(f"transition matrix is not numeric: {e}") from e
        if rows.ndim != 2 or rows.shape[0] != rows.shape[1] or rows.shape[0] < 1:
            raise ChainValidationError(f"transition matrix must be N×N with N ≥ 1, got shape {rows.shape}")

        for x, row in enumerate(rows):
            if not np.all(np.isfinite(row)):
                raise ChainValidationError(f"row {x} contains a non-finite entry", row=x)
            if np.any(row < 0.0):
                raise ChainValidationError(f"row {x} contains a negative entry", row=x)
            if np.any(row > 1.0 + self.tolerance):
                raise ChainValidationError(f"row {x} contains an entry above 1", row=x)
            if abs(row.sum() - 1.0) > self.tolerance:
                raise ChainValidationError(f"row {x} sums to {row.sum():.12g}, not 1", row=x)

        rows.setflags(write=False)
        object.__setattr__(self, "rows", rows)

        if self.labels is not None:
            labels = tuple(str(label) for label in self.labels)
            if len(labels) != rows.shape[0]:
                raise ChainValidationError(f"expected {rows.shape[0]} labels, got {len(labels)}")
            object.__setattr__(self, "labels", labels)

    @property
    def n_states(self) -> int:
        return self.rows.shape[0]

    def label(self, x: int) -> str:
        return self.labels[x] if self.labels else str(x)


ChainLike = Union[TransitionMatrix, Sequence[Sequence[float]], np.ndarray]


def as_chain(P: ChainLike) -> TransitionMatrix:
    return P if isinstance(P, TransitionMatrix) else TransitionMatrix(P)


@dataclass(frozen=True, eq=False)
class AdjacencyMatrix:
    """A[x, x'] = 1 iff P[x, x'] exceeds the threshold"""
    bits: np.ndarray
    threshold: float = 0.0

    def __post_init__(self):
        bits = np.array(self.bits, dtype=bool)
        if bits.ndim != 2 or bits.shape[0] != bits.shape[1]:
            raise ValidationError(f"adjacency must be square, got shape {bits.shape}")
        bits.setflags(write=False)
        object.__setattr__(self, "bits", bits)

    @property
    def n_states(self) -> int:
        return self.bits.shape[0]

    def successors(self, x: int) -> List[int]:
        return [int(v) for v in np.flatnonzero(self.bits[x])]

    def out_degrees(self) -> np.ndarray:
        return self.bits.sum(axis=1)

    def n_ones(self) -> int:
        return int(self.bits.sum())


@dataclass(frozen=True)
class StructureReport:
    irreducible: bool
    aperiodic: bool
    period: int


@dataclass(frozen=True, eq=False)
class StationaryDistribution:
    mu: np.ndarray
    residual: float


def adjacency(P: ChainLike, threshold: float = 0.0,
              positivity: float = DEFAULT_CONFIG.positivity_threshold) -> AdjacencyMatrix:
    """Threshold P into its access relation; threshold 0 gives the plain ceiling"""
    if not 0.0 <= threshold < 1.0:
        raise ValidationError(f"threshold must be in [0, 1), got {threshold}")
    P = as_chain(P)
    return AdjacencyMatrix(P.rows > max(threshold, positivity), threshold=threshold)


def _strong_components(bits: np.ndarray) -> Tuple[int, np.ndarray]:
    return connected_components(csr_matrix(bits), directed=True, connection="strong")


def _component_period(bits: np.ndarray, labels: np.ndarray, root: int) -> int:
    # gcd of level(u) + 1 - level(v) over edges inside root's component
    component = labels == labels[root]
    level = np.full(bits.shape[0], -1, dtype=int)
    level[root] = 0
    queue = deque([root])
    while queue:
        u = queue.popleft()
        for v in np.flatnonzero(bits[u] & component):
            if level[v] < 0:
                level[v] = level[u] + 1
                queue.append(v)

    diffs = [
        int(level[u] + 1 - level[v])
        for u in np.flatnonzero(component)
        for v in np.flatnonzero(bits[u] & component)
    ]
    # 0 for a component without cycles (single state, no self-loop)
    return reduce(gcd, (abs(d) for d in diffs), 0)


def _period(bits: np.ndarray, labels: np.ndarray, root: int = 0) -> int:
    """gcd of the cycle lengths over every component reachable from root"""
    reachable = breadth_first_order(csr_matrix(bits), root, directed=True, return_predecessors=False)
    roots = {int(labels[v]): int(v) for v in reachable}
    return reduce(gcd, (_component_period(bits, labels, r) for r in roots.values()), 0)


def validate_chain(P: ChainLike,
                   positivity: float = DEFAULT_CONFIG.positivity_threshold) -> StructureReport:
    """Report irreducibility and the period of the transition graph"""
    P = as_chain(P)
    bits = adjacency(P, positivity=positivity).bits
    n_components, labels = _strong_components(bits)
    period = _period(bits, labels)
    report = StructureReport(irreducible=n_components == 1, aperiodic=period == 1, period=period)
    if report.irreducible and not report.aperiodic:
        logger.warning(f"Chain is periodic with period {period}; graph constructions only need irreducibility")
    return report


def _require_irreducible(P: TransitionMatrix, positivity: float) -> AdjacencyMatrix:
    A = adjacency(P, positivity=positivity)
    n_components, _ = _strong_components(A.bits)
    if n_components != 1:
        raise NotIrreducibleError(
            f"chain has {n_components} strongly connected components; stationary distribution is not unique"
        )
    return A


def stationary(P: ChainLike,
               positivity: float = DEFAULT_CONFIG.positivity_threshold,
               direct_solve_max_states: int = DEFAULT_CONFIG.direct_solve_max_states,
               tolerance: float = DEFAULT_CONFIG.stochastic_tolerance,
               max_iter: int = DEFAULT_CONFIG.power_iteration_max_iter) -> StationaryDistribution:
    """Invariant distribution of an irreducible chain"""
    P = as_chain(P)
    _require_irreducible(P, positivity)
    n = P.n_states
    rows = P.rows

    if n <= direct_solve_max_states:
        system = np.vstack([rows.T - np.eye(n), np.ones((1, n))])
        rhs = np.zeros(n + 1)
        rhs[-1] = 1.0
        mu, *_ = np.linalg.lstsq(system, rhs, rcond=None)
    else:
        # lazy chain (P + I) / 2 has the same μ and is aperiodic
        lazy = 0.5 * (rows + np.eye(n))
        mu = np.full(n, 1.0 / n)
        for _ in range(max_iter):
            nxt = mu @ lazy
            if np.max(np.abs(nxt - mu)) <= tolerance * 1e-2:
                mu = nxt
                break
            mu = nxt
        logger.debug(f"Stationary distribution by power iteration for N={n}")

    mu = np.clip(mu, 0.0, None)
    mu = mu / mu.sum()
    residual = float(np.max(np.abs(mu @ rows - mu)))
    if residual > tolerance:
        raise ConvergenceError("stationary distribution did not reach the residual tolerance", mu, residual)
    mu.setflags(write=False)
    return StationaryDistribution(mu=mu, residual=residual)


def entropy_rate(P: ChainLike, **kwargs) -> float:
    """H̄(X) = -Σ_x μ_x Σ_x' P[x,x'] log P[x,x'] in nats"""
    P = as_chain(P)
    mu = stationary(P, **kwargs).mu
    return float(mu @ entropy(P.rows, axis=1))


def marginal_entropy(P: ChainLike, **kwargs) -> float:
    return float(entropy(stationary(P, **kwargs).mu))


def spectral_radius(A: AdjacencyMatrix,
                    tolerance: float = DEFAULT_CONFIG.power_iteration_tolerance,
                    max_iter: int = DEFAULT_CONFIG.power_iteration_max_iter) -> float:
    """
    Perron root of A by power iteration.

    Iterates on A + I, which is primitive whenever A is irreducible, and stops
    once the Collatz-Wielandt bounds min/max (Bx)_i / x_i agree to the relative
    tolerance.
    """
    B = A.bits.astype(float) + np.eye(A.n_states)
    x = np.ones(A.n_states)
    lo, hi = 0.0, np.inf
    for _ in range(max_iter):
        y = B @ x
        ratios = y / x
        lo, hi = float(ratios.min()), float(ratios.max())
        if hi - lo <= tolerance * hi:
            return 0.5 * (lo + hi) - 1.0
        x = y / y.max()
    raise ConvergenceError(f"power iteration did not converge in {max_iter} iterations", x, hi - lo)


def dmax(A: AdjacencyMatrix) -> int:
    return int(A.out_degrees().max())


@dataclass(frozen=True, eq=False)
class BlockedChain:
    """Rantai ter-blok X^(K) dengan himpunan urutan realizable S_K"""
    base: TransitionMatrix
    block_len: int
    realizable: Tuple[Tuple[int, ...], ...]
    base_adjacency: AdjacencyMatrix

    @property
    def n_blocks(self) -> int:
        return self.base.n_states ** self.block_len

    @property
    def shape(self) -> Tuple[int, ...]:
        return (self.base.n_states,) * self.block_len

    def index(self, sequence: Sequence[int]) -> int:
        return int(np.ravel_multi_index(tuple(sequence), self.shape))

    def sequence(self, index: int) -> Tuple[int, ...]:
        return tuple(int(s) for s in np.unravel_index(index, self.shape))

    def realizable_indices(self) -> np.ndarray:
        if not self.realizable:
            return np.zeros(0, dtype=int)
        return np.ravel_multi_index(tuple(np.array(self.realizable).T), self.shape)

    def realizable_mask(self) -> np.ndarray:
        mask = np.zeros(self.n_blocks, dtype=bool)
        mask[self.realizable_indices()] = True
        return mask

    def accesses(self, x: Sequence[int], x_next: Sequence[int]) -> bool:
        realizable = set(self.realizable)
        return (tuple(x) in realizable and tuple(x_next) in realizable
                and bool(self.base_adjacency.bits[x[-1], x_next[0]]))

    def adjacency_matrix(self, dense_cap: int = 4096) -> np.ndarray:
        """Dense blocked adjacency over 𝒳^K; unrealizable rows and columns are zero"""
        if self.n_blocks > dense_cap:
            raise ResourceCapError("dense blocked adjacency too large", dense_cap, self.n_blocks)
        idx = self.realizable_indices()
        seqs = np.array(self.realizable, dtype=int).reshape(len(idx), self.block_len)
        out = np.zeros((self.n_blocks, self.n_blocks), dtype=bool)
        sub = self.base_adjacency.bits[np.ix_(seqs[:, -1], seqs[:, 0])]
        out[np.ix_(idx, idx)] = sub
        return out


def _realizable_sequences(A: AdjacencyMatrix, starts: Sequence[int], K: int) -> List[Tuple[int, ...]]:
    sequences = [(a,) for a in starts]
    successors = [A.successors(x) for x in range(A.n_states)]
    for _ in range(K - 1):
        sequences = [s + (b,) for s in sequences for b in successors[s[-1]]]
    return sequences


def block(P: ChainLike, K: int,
          enumeration_cap: int = DEFAULT_CONFIG.enumeration_cap,
          positivity: float = DEFAULT_CONFIG.positivity_threshold) -> BlockedChain:
    """K-fold blocked chain with S_K listed in lexicographic order"""
    if K < 1:
        raise ValidationError(f"block length must be ≥ 1, got {K}")
    P = as_chain(P)
    n_blocks = P.n_states ** K
    if n_blocks > enumeration_cap:
        raise ResourceCapError(f"blocked alphabet of N^K for K={K} exceeds the enumeration cap",
                               enumeration_cap, n_blocks)

    mu = stationary(P, positivity=positivity).mu
    A = adjacency(P, positivity=positivity)
    starts = [x for x in range(P.n_states) if mu[x] > positivity]
    realizable = _realizable_sequences(A, starts, K)
    logger.debug(f"Blocked chain K={K}: |S_K|={len(realizable)} of {n_blocks}")
    return BlockedChain(base=P, block_len=K, realizable=tuple(realizable), base_adjacency=A)


def realizable_count(P: ChainLike, K: int,
                     positivity: float = DEFAULT_CONFIG.positivity_threshold) -> int:
    """|S_K| = Σ_{x: μ_x > 0} (A^(K-1) 1)_x, exact in Python integers"""
    if K < 1:
        raise ValidationError(f"block length must be ≥ 1, got {K}")
    P = as_chain(P)
    mu = stationary(P, positivity=positivity).mu
    A = adjacency(P, positivity=positivity).bits.astype(object)
    counts = np.ones(P.n_states, dtype=object)
    for _ in range(K - 1):
        counts = A.dot(counts)
    return int(sum(counts[x] for x in range(P.n_states) if mu[x] > positivity))


@dataclass(frozen=True)
class GrowthRecord:
    K: int
    realizable: int
    rate: float


def realizable_growth(P: ChainLike, K_max: int, **kwargs) -> List[GrowthRecord]:
    records = []
    for K in range(1, K_max + 1):
        count = realizable_count(P, K, **kwargs)
        records.append(GrowthRecord(K=K, realizable=count, rate=log(count) / K))
    return records


def _normalise(weights: np.ndarray) -> np.ndarray:
    return weights / weights.sum(axis=1, keepdims=True)


def random_chain(n: int, rng: np.random.Generator, density: float = 0.5,
                 max_out_degree: Optional[int] = None) -> TransitionMatrix:
    """
    Random irreducible chain.

    A random cyclic permutation is always part of the support, so every
    sample is irreducible. ``max_out_degree`` caps the row supports.
    """
    if n < 1:
        raise ValidationError(f"need at least one state, got {n}")
    order = rng.permutation(n)
    support = np.zeros((n, n), dtype=bool)
    for i in range(n):
        support[order[i], order[(i + 1) % n]] = True

    extra = rng.random((n, n)) < density
    for x in range(n):
        candidates = [v for v in np.flatnonzero(extra[x]) if not support[x, v]]
        if max_out_degree is not None:
            rng.shuffle(candidates)
            candidates = candidates[:max(0, max_out_degree - 1)]
        support[x, candidates] = True

    weights = (rng.random((n, n)) + 0.05) * support
    return TransitionMatrix(_normalise(weights))


def random_chain_with_adjacency(A: AdjacencyMatrix, rng: np.random.Generator) -> TransitionMatrix:
    """New chain sharing the support pattern of A"""
    if np.any(A.out_degrees() == 0):
        raise ValidationError("every state needs at least one successor")
    weights = (rng.random(A.bits.shape) + 0.05) * A.bits
    return TransitionMatrix(_normalise(weights))
