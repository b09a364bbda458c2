"""
Lumping functions, losslessness certificates, lossy ε-lumping and the
side-information decoder.
"""
import bisect
import logging
from dataclasses import dataclass
from math import e as EULER
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from pydantic import BaseModel
from scipy.special import xlogy
from scipy.stats import entropy
from tqdm import tqdm

from config.settings import DEFAULT_CONFIG
from graphs.graph import (
    Graph,
    VertexSetLike,
    as_bits,
    characteristic_graph_chain,
    confusion_graph,
    edge_difference,
    epsilon_characteristic_graph,
    is_clique,
    members,
)
from graphs.partition import CliquePartition, solve_clique_partition
from markov.chain import AdjacencyMatrix, ChainLike, adjacency, as_chain, dmax, stationary
from utils.errors import (
    AmbiguityError,
    BoundViolationError,
    ImpossibleObservationError,
    ResourceCapError,
    ValidationError,
)

logger = logging.getLogger(__name__)

BOUND_SLACK = 1e-12


@dataclass(frozen=True)
class LumpingFunction:
    """Fungsi lumping g: X -> Y yang surjektif"""
    n_in: int
    n_out: int
    map: Tuple[int, ...]

    def __post_init__(self):
        mapping = tuple(int(y) for y in self.map)
        if len(mapping) != self.n_in:
            raise ValidationError(f"lumping map has {len(mapping)} entries, expected {self.n_in}")
        if not 1 <= self.n_out <= self.n_in:
            raise ValidationError(f"output alphabet size {self.n_out} must lie in [1, {self.n_in}]")
        if any(not 0 <= y < self.n_out for y in mapping):
            raise ValidationError(f"lumping map values must lie in [0, {self.n_out})")
        if len(set(mapping)) != self.n_out:
            raise ValidationError("lumping map is not surjective")
        object.__setattr__(self, "map", mapping)

    @classmethod
    def from_map(cls, mapping: Sequence[int]) -> 'LumpingFunction':
        mapping = tuple(int(y) for y in mapping)
        return cls(len(mapping), max(mapping) + 1 if mapping else 0, mapping)

    def preimage(self, y: int) -> List[int]:
        return [x for x, image in enumerate(self.map) if image == y]

    def preimages(self) -> List[List[int]]:
        out: List[List[int]] = [[] for _ in range(self.n_out)]
        for x, y in enumerate(self.map):
            out[y].append(x)
        return out

    def as_channel(self) -> np.ndarray:
        """Deterministic channel matrix W[x, g(x)] = 1"""
        W = np.zeros((self.n_in, self.n_out))
        W[np.arange(self.n_in), self.map] = 1.0
        return W

    def confusion_graph(self) -> Graph:
        return confusion_graph(self.as_channel())

    def apply(self, states: Sequence[int]) -> List[int]:
        return [self.map[x] for x in states]


class LossReport(BaseModel):
    n_in: int
    n_out: int
    epsilon: float
    conditional_entropy_nats: float
    bound_first_nats: Optional[float] = None
    bound_second_nats: Optional[float] = None
    lossless: bool
    exact: bool = True
    units: str = "nats"


@dataclass(frozen=True)
class LosslessCertificate:
    lossless: bool
    conditional_entropy: float
    witness_edge: Optional[Tuple[int, int]] = None
    accessor: Optional[int] = None


def _check_sizes(P, g: LumpingFunction):
    if g.n_in != P.n_states:
        raise ValidationError(f"lumping is defined on {g.n_in} states, chain has {P.n_states}")


def binary_entropy(p: float) -> float:
    """h_b(p) in nats, 0 log 0 = 0"""
    if not 0.0 <= p <= 1.0:
        raise ValidationError(f"probability must be in [0, 1], got {p}")
    return float(entropy([p, 1.0 - p]))


def lumping_from_partition(partition: CliquePartition) -> LumpingFunction:
    return LumpingFunction(partition.graph.n_vertices, partition.size, tuple(partition.lumping_map()))


def _loss_per_state(rows: np.ndarray, g: LumpingFunction) -> np.ndarray:
    # H(X2 | Y2, X1 = x) with R[x, y] the mass of P[x, .] on g^-1(y)
    R = rows @ g.as_channel()
    R_at = R[:, list(g.map)]
    return np.clip(-(xlogy(rows, rows) - xlogy(rows, R_at)).sum(axis=1), 0.0, None)


def conditional_entropy_given_lump_and_prev(P: ChainLike, g: LumpingFunction,
                                            positivity: float = DEFAULT_CONFIG.positivity_threshold,
                                            **kwargs) -> float:
    """H(X2 | Y2, X1) in nats, on the same support as the characteristic graph"""
    P = as_chain(P)
    _check_sizes(P, g)
    mu = stationary(P, positivity=positivity, **kwargs).mu
    # entries at or below the positivity threshold count as zero, as in adjacency()
    rows = np.where(P.rows > positivity, P.rows, 0.0)
    return float(mu @ _loss_per_state(rows, g))


def certify_lossless(P: ChainLike, g: LumpingFunction,
                     positivity: float = DEFAULT_CONFIG.positivity_threshold,
                     lossless_tolerance: float = DEFAULT_CONFIG.lossless_tolerance) -> LosslessCertificate:
    """E_g ⊆ E_X, or the first confusable pair with a state accessing both"""
    P = as_chain(P)
    _check_sizes(P, g)
    A = adjacency(P, positivity=positivity)
    loss = conditional_entropy_given_lump_and_prev(P, g, positivity=positivity)

    violations = edge_difference(g.confusion_graph(), characteristic_graph_chain(A))
    if not violations:
        if loss > lossless_tolerance:
            raise BoundViolationError(f"certified lumping loses {loss:.3e} nats")
        return LosslessCertificate(lossless=True, conditional_entropy=loss)

    x1, x2 = violations[0]
    accessor = int(np.flatnonzero(A.bits[:, x1] & A.bits[:, x2])[0])
    logger.info(f"Lumping is not certified: states {x1} and {x2} are both reachable from {accessor}")
    return LosslessCertificate(lossless=False, conditional_entropy=loss,
                               witness_edge=(x1, x2), accessor=accessor)


def dmax_lower_bound(A: AdjacencyMatrix) -> int:
    """Every lossless lumping needs at least d_max output symbols"""
    return dmax(A)


def loss_bounds(n_in: int, n_out: int, epsilon: float) -> Tuple[Optional[float], Optional[float]]:
    """(N−M)ε(1−log ε) for ε < 1/e and N·h_b(ε) for ε < 1/N, None outside"""
    first = (n_in - n_out) * (epsilon - float(xlogy(epsilon, epsilon))) if epsilon < 1.0 / EULER else None
    second = n_in * binary_entropy(epsilon) if epsilon < 1.0 / n_in else None
    return first, second


def lossy_lump(P: ChainLike, epsilon: float, solver: str = "auto",
               exact_cap: int = DEFAULT_CONFIG.exact_solver_cap,
               positivity: float = DEFAULT_CONFIG.positivity_threshold,
               lossless_tolerance: float = DEFAULT_CONFIG.lossless_tolerance) -> Tuple[LumpingFunction, LossReport]:
    """Lump by a clique partition of the ε-characteristic graph and bound the loss"""
    P = as_chain(P)
    graph = epsilon_characteristic_graph(P, epsilon, positivity=positivity)
    partition, exact = solve_clique_partition(graph, solver=solver, exact_cap=exact_cap)
    g = lumping_from_partition(partition)
    loss = conditional_entropy_given_lump_and_prev(P, g, positivity=positivity)
    first, second = loss_bounds(g.n_in, g.n_out, epsilon)

    if first is not None and loss > first + BOUND_SLACK:
        raise BoundViolationError(f"loss {loss:.6g} exceeds (N-M)ε(1-log ε) = {first:.6g}")
    if first is not None and second is not None and first > second + BOUND_SLACK:
        raise BoundViolationError(f"(N-M)ε(1-log ε) = {first:.6g} exceeds N h_b(ε) = {second:.6g}")

    logger.info(f"ε={epsilon}: M={g.n_out} of N={g.n_in}, loss {loss:.6g} nats")
    return g, LossReport(
        n_in=g.n_in,
        n_out=g.n_out,
        epsilon=epsilon,
        conditional_entropy_nats=loss,
        bound_first_nats=first,
        bound_second_nats=second,
        lossless=loss <= lossless_tolerance,
        exact=exact,
    )


def stochastic_lumping_from_cover(G: Graph, cover: Sequence[VertexSetLike]) -> np.ndarray:
    """Row x spreads its mass evenly over the covering cliques containing x"""
    sets = [as_bits(S) for S in cover]
    W = np.zeros((G.n_vertices, len(sets)))
    for j, bits in enumerate(sets):
        if not is_clique(G, bits):
            raise ValidationError(f"cover member {list(members(bits))} is not a clique")
        W[list(members(bits)), j] = 1.0
    counts = W.sum(axis=1)
    if np.any(counts == 0):
        raise ValidationError(f"cover misses vertices {np.flatnonzero(counts == 0).tolist()}")
    return W / counts[:, None]


def reconstruct(A: AdjacencyMatrix, g: LumpingFunction, x1: int, y: Sequence[int]) -> List[int]:
    """
    Recover x_1..x_L from x_1 and y_2..y_L.

    Position i of an error refers to x_i in the returned sequence, with x_1
    at position 0.
    """
    if not 0 <= x1 < g.n_in:
        raise ValidationError(f"initial state {x1} outside [0, {g.n_in})")
    if A.n_states != g.n_in:
        raise ValidationError(f"lumping is defined on {g.n_in} states, adjacency has {A.n_states}")
    preimages = g.preimages()
    states = [int(x1)]
    for position, symbol in enumerate(y, start=1):
        if not 0 <= symbol < g.n_out:
            raise ValidationError(f"symbol {symbol} at position {position} outside [0, {g.n_out})")
        previous = states[-1]
        candidates = [x for x in preimages[symbol] if A.bits[previous, x]]
        if not candidates:
            raise ImpossibleObservationError(position, previous, int(symbol))
        if len(candidates) > 1:
            raise AmbiguityError(position, candidates)
        states.append(candidates[0])
    return states


def reconstruct_lossy(P: ChainLike, g: LumpingFunction, x1: int, y: Sequence[int]) -> List[int]:
    """Decoder that resolves every symbol by the most likely transition, ties to the lowest index"""
    P = as_chain(P)
    _check_sizes(P, g)
    # argmax returns the first maximum, so ties go to the lowest state in the preimage
    choice = [
        [preimage[int(np.argmax(P.rows[previous, preimage]))] for preimage in g.preimages()]
        for previous in range(P.n_states)
    ]
    states = [int(x1)]
    for symbol in y:
        states.append(choice[states[-1]][symbol])
    return states


Seed = Union[int, Sequence[int]]


def simulate_chain(P: ChainLike, length: int, seed: Seed = DEFAULT_CONFIG.default_seed,
                   **kwargs) -> List[int]:
    """X_1 ~ μ, then steps by P with a seeded generator"""
    if length < 1:
        raise ValidationError(f"trajectory length must be ≥ 1, got {length}")
    P = as_chain(P)
    mu = stationary(P, **kwargs).mu
    rng = np.random.default_rng(seed)
    cumulative = [np.cumsum(row).tolist() for row in P.rows]
    initial = np.cumsum(mu).tolist()

    draws = rng.random(length).tolist()
    x = bisect.bisect_right(initial, draws[0] * initial[-1])
    states = [x]
    for u in draws[1:]:
        row = cumulative[x]
        x = bisect.bisect_right(row, u * row[-1])
        states.append(x)
    return states


def error_propagation(P: ChainLike, g: LumpingFunction, trials: int, length: int,
                      seed: int = DEFAULT_CONFIG.default_seed, show_progress: bool = False) -> float:
    """Fraction of x_2..x_L the lossy decoder gets wrong"""
    if trials < 1 or length < 2:
        raise ValidationError(f"need trials ≥ 1 and length ≥ 2, got {trials} and {length}")
    P = as_chain(P)
    errors = 0
    for trial in tqdm(range(trials), desc="Error propagation", disable=not show_progress):
        states = simulate_chain(P, length, seed=[seed, trial])
        decoded = reconstruct_lossy(P, g, states[0], g.apply(states[1:]))
        errors += sum(a != b for a, b in zip(states[1:], decoded[1:]))
    rate = errors / (trials * (length - 1))
    logger.info(f"Symbol error rate {rate:.6f} over {trials} trials of length {length}")
    return rate


def lumped_marginal_entropy(P: ChainLike, g: LumpingFunction, **kwargs) -> float:
    """H(Y_n) in nats"""
    P = as_chain(P)
    _check_sizes(P, g)
    return float(entropy(stationary(P, **kwargs).mu @ g.as_channel()))


def information_loss_profile(P: ChainLike, g: LumpingFunction, n: int,
                             enumeration_cap: int = DEFAULT_CONFIG.enumeration_cap,
                             **kwargs) -> List[float]:
    """
    H(X_1^k | Y_1^k) for k = 1..n, exact.

    H(Y_1^k) sums over every lumped word of positive probability with the
    forward recursion α' = (α P) restricted to g^-1(y').
    """
    if n < 1:
        raise ValidationError(f"horizon must be ≥ 1, got {n}")
    P = as_chain(P)
    _check_sizes(P, g)
    mu = stationary(P, **kwargs).mu
    rate = float(mu @ entropy(P.rows, axis=1))
    h_first = float(entropy(mu))
    masks = g.as_channel().T

    forward: Dict[Tuple[int, ...], np.ndarray] = {}
    for y in range(g.n_out):
        alpha = mu * masks[y]
        if alpha.sum() > 0:
            forward[(y,)] = alpha

    profile = []
    for k in range(1, n + 1):
        if k > 1:
            nxt = {}
            for word, alpha in forward.items():
                step = alpha @ P.rows
                for y in range(g.n_out):
                    beta = step * masks[y]
                    if beta.sum() > 0:
                        nxt[word + (y,)] = beta
            if len(nxt) > enumeration_cap:
                raise ResourceCapError(f"lumped words of length {k} exceed the enumeration cap",
                                       enumeration_cap, len(nxt))
            forward = nxt
        h_words = float(entropy([alpha.sum() for alpha in forward.values()]))
        h_states = h_first + (k - 1) * rate
        profile.append(max(h_states - h_words, 0.0))
    return profile
