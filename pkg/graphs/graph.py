"""
Undirected simple graphs on bit-set rows, complements, products, and the
three graph families of zero-error lumping: confusion graphs of channels,
characteristic graphs of (X, Z) pairs and characteristic graphs of chains.
"""
import logging
from dataclasses import dataclass
from typing import Iterable, Iterator, List, Sequence, Tuple, Union

import networkx as nx
import numpy as np

from config.settings import DEFAULT_CONFIG
from markov.chain import AdjacencyMatrix, ChainLike, adjacency
from utils.errors import ResourceCapError, ValidationError

logger = logging.getLogger(__name__)


def members(bits: int) -> Iterator[int]:
    """Indices of the set bits, lowest first"""
    while bits:
        low = bits & -bits
        yield low.bit_length() - 1
        bits ^= low


def popcount(bits: int) -> int:
    return bin(bits).count("1")


def _pack(row: np.ndarray) -> int:
    return int.from_bytes(np.packbits(row.astype(bool), bitorder="little").tobytes(), "little")


def _unpack(bits: int, n: int) -> np.ndarray:
    raw = np.frombuffer(bits.to_bytes((n + 7) // 8, "little"), dtype=np.uint8)
    return np.unpackbits(raw, bitorder="little")[:n].astype(bool)


@dataclass(frozen=True)
class VertexSet:
    bits: int = 0

    @classmethod
    def of(cls, vertices: Iterable[int]) -> 'VertexSet':
        bits = 0
        for v in vertices:
            if v < 0:
                raise ValidationError(f"negative vertex index {v}")
            bits |= 1 << int(v)
        return cls(bits)

    def __iter__(self) -> Iterator[int]:
        return members(self.bits)

    def __len__(self) -> int:
        return popcount(self.bits)

    def __contains__(self, v: int) -> bool:
        return bool(self.bits >> v & 1)


VertexSetLike = Union[VertexSet, int, Iterable[int]]


def as_bits(S: VertexSetLike) -> int:
    if isinstance(S, VertexSet):
        return S.bits
    if isinstance(S, (int, np.integer)):
        return int(S)
    return VertexSet.of(S).bits


@dataclass(frozen=True)
class Graph:
    """Graf sederhana tak berarah; rows[v] adalah bitset tetangga v"""
    n_vertices: int
    rows: Tuple[int, ...]

    def __post_init__(self):
        if self.n_vertices < 0:
            raise ValidationError(f"vertex count must be non-negative, got {self.n_vertices}")
        rows = tuple(int(r) for r in self.rows)
        if len(rows) != self.n_vertices:
            raise ValidationError(f"expected {self.n_vertices} adjacency rows, got {len(rows)}")
        full = (1 << self.n_vertices) - 1
        for v, row in enumerate(rows):
            if row & ~full:
                raise ValidationError(f"row {v} references a vertex outside [0, {self.n_vertices})")
            if row >> v & 1:
                raise ValidationError(f"self-loop at vertex {v}")
            for u in members(row):
                if not rows[u] >> v & 1:
                    raise ValidationError(f"asymmetric adjacency between {v} and {u}")
        object.__setattr__(self, "rows", rows)

    @classmethod
    def from_matrix(cls, matrix: np.ndarray) -> 'Graph':
        matrix = np.asarray(matrix, dtype=bool)
        if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
            raise ValidationError(f"adjacency must be square, got shape {matrix.shape}")
        return cls(matrix.shape[0], tuple(_pack(row) for row in matrix))

    @classmethod
    def from_edges(cls, n_vertices: int, edges: Iterable[Tuple[int, int]]) -> 'Graph':
        rows = [0] * n_vertices
        for u, v in edges:
            if not (0 <= u < n_vertices and 0 <= v < n_vertices):
                raise ValidationError(f"edge ({u}, {v}) outside [0, {n_vertices})")
            if u == v:
                raise ValidationError(f"self-loop at vertex {u}")
            rows[u] |= 1 << v
            rows[v] |= 1 << u
        return cls(n_vertices, tuple(rows))

    @property
    def full_mask(self) -> int:
        return (1 << self.n_vertices) - 1

    @property
    def n_edges(self) -> int:
        return sum(popcount(row) for row in self.rows) // 2

    def to_matrix(self) -> np.ndarray:
        if self.n_vertices == 0:
            return np.zeros((0, 0), dtype=bool)
        return np.vstack([_unpack(row, self.n_vertices) for row in self.rows])

    def has_edge(self, u: int, v: int) -> bool:
        return bool(self.rows[u] >> v & 1)

    def neighbors(self, v: int) -> List[int]:
        return list(members(self.rows[v]))

    def degree(self, v: int) -> int:
        return popcount(self.rows[v])

    def edges(self) -> List[Tuple[int, int]]:
        return [(u, v) for u in range(self.n_vertices) for v in members(self.rows[u] >> (u + 1) << (u + 1))]


def complete_graph(n: int) -> Graph:
    full = (1 << n) - 1
    return Graph(n, tuple(full & ~(1 << v) for v in range(n)))


def empty_graph(n: int) -> Graph:
    return Graph(n, (0,) * n)


def complement(G: Graph) -> Graph:
    full = G.full_mask
    return Graph(G.n_vertices, tuple(~row & full & ~(1 << v) for v, row in enumerate(G.rows)))


def _check_range(G: Graph, bits: int):
    if bits & ~G.full_mask:
        raise ValidationError(f"vertex set exceeds the vertex range [0, {G.n_vertices})")


def is_clique(G: Graph, S: VertexSetLike) -> bool:
    bits = as_bits(S)
    _check_range(G, bits)
    return all(bits & ~(1 << v) & ~G.rows[v] == 0 for v in members(bits))


def is_independent(G: Graph, S: VertexSetLike) -> bool:
    bits = as_bits(S)
    _check_range(G, bits)
    return all(bits & G.rows[v] == 0 for v in members(bits))


def induced_subgraph(G: Graph, vertices: Sequence[int]) -> Graph:
    """Subgraph on ``vertices``, relabelled 0..len-1 in the given order"""
    vertices = [int(v) for v in vertices]
    position = {v: i for i, v in enumerate(vertices)}
    rows = []
    for v in vertices:
        row = 0
        for u in members(G.rows[v]):
            if u in position:
                row |= 1 << position[u]
        rows.append(row)
    return Graph(len(vertices), tuple(rows))


def is_edge_subset(G: Graph, H: Graph) -> bool:
    """E(G) ⊆ E(H) on a common vertex set"""
    if G.n_vertices != H.n_vertices:
        raise ValidationError(f"vertex counts differ: {G.n_vertices} vs {H.n_vertices}")
    return all(g & ~h == 0 for g, h in zip(G.rows, H.rows))


def edge_difference(G: Graph, H: Graph) -> List[Tuple[int, int]]:
    """Edges of G missing from H"""
    if G.n_vertices != H.n_vertices:
        raise ValidationError(f"vertex counts differ: {G.n_vertices} vs {H.n_vertices}")
    return [(u, v) for u, v in G.edges() if not H.has_edge(u, v)]


def _no_loops(shared: np.ndarray) -> np.ndarray:
    np.fill_diagonal(shared, False)
    return shared


def confusion_graph(W: np.ndarray,
                    positivity: float = DEFAULT_CONFIG.positivity_threshold) -> Graph:
    """Inputs x1, x2 are adjacent iff some output column is positive for both"""
    W = np.asarray(W, dtype=float)
    if W.ndim != 2:
        raise ValidationError(f"channel matrix must be 2-D, got shape {W.shape}")
    support = (W > positivity).astype(np.int64)
    return Graph.from_matrix(_no_loops(support @ support.T > 0))


def characteristic_graph_pair(Q, positivity: float = DEFAULT_CONFIG.positivity_threshold,
                              tolerance: float = DEFAULT_CONFIG.stochastic_tolerance) -> Graph:
    """x, x' are adjacent iff no z has Q[x,z] Q[x',z] > 0"""
    q = np.asarray(getattr(Q, "q", Q), dtype=float)
    if q.ndim != 2 or np.any(q < 0) or abs(q.sum() - 1.0) > tolerance:
        raise ValidationError("joint distribution must be a non-negative matrix summing to 1")
    support = (q > positivity).astype(np.int64)
    return Graph.from_matrix(_no_loops(support @ support.T == 0))


def characteristic_graph_chain(A: AdjacencyMatrix) -> Graph:
    """x1, x2 are adjacent iff no state accesses both"""
    bits = A.bits.astype(np.int64)
    return Graph.from_matrix(_no_loops(bits.T @ bits == 0))


def epsilon_characteristic_graph(P: ChainLike, epsilon: float,
                                 positivity: float = DEFAULT_CONFIG.positivity_threshold) -> Graph:
    return characteristic_graph_chain(adjacency(P, epsilon, positivity=positivity))


def _check_product_size(n: int, K: int, enumeration_cap: int) -> int:
    if K < 1:
        raise ValidationError(f"product power must be ≥ 1, got {K}")
    size = n ** K
    if size > enumeration_cap:
        raise ResourceCapError(f"graph product of {n}^{K} vertices exceeds the enumeration cap",
                               enumeration_cap, size)
    return size


def to_networkx(G: Graph) -> nx.Graph:
    H = nx.Graph()
    H.add_nodes_from(range(G.n_vertices))
    H.add_edges_from(G.edges())
    return H


def from_networkx(H: nx.Graph, nodelist: Sequence) -> Graph:
    """Bitset graph with vertex i standing for nodelist[i]"""
    index = {node: i for i, node in enumerate(nodelist)}
    if len(index) != H.number_of_nodes():
        raise ValidationError(f"nodelist covers {len(index)} of {H.number_of_nodes()} nodes")
    return Graph.from_edges(len(index), ((index[u], index[v]) for u, v in H.edges() if u != v))


def normal_product(G: Graph, K: int,
                   enumeration_cap: int = DEFAULT_CONFIG.enumeration_cap) -> Graph:
    """
    K-fold normal (strong) product.

    Tuples are indexed in mixed radix with the first coordinate most
    significant; distinct tuples are adjacent iff every coordinate pair is
    equal or adjacent.
    """
    size = _check_product_size(G.n_vertices, K, enumeration_cap)
    n = G.n_vertices
    base = to_networkx(G)

    product = base
    width = n
    for _ in range(K - 1):
        # (head, tail) -> head * width + tail keeps the mixed-radix order
        product = nx.relabel_nodes(nx.strong_product(base, product),
                                   lambda node, width=width: node[0] * width + node[1])
        width *= n

    logger.debug(f"Normal product: {n}^{K} = {size} vertices")
    return from_networkx(product, range(size))


def conormal_product(G: Graph, K: int,
                     enumeration_cap: int = DEFAULT_CONFIG.enumeration_cap) -> Graph:
    """Distinct tuples are adjacent iff some coordinate pair is adjacent"""
    # non-adjacent in every coordinate = normal product of the complement
    return complement(normal_product(complement(G), K, enumeration_cap=enumeration_cap))
