"""
Clique partitions: exact (coloring of the complement), greedy, brute force
"""
import logging
from dataclasses import dataclass
from typing import Iterable, List, Optional, Sequence, Tuple

from config.settings import DEFAULT_CONFIG
from graphs.graph import Graph, VertexSetLike, as_bits, complement, is_clique, members, popcount
from utils.errors import ResourceCapError, ValidationError

logger = logging.getLogger(__name__)

SOLVERS = ("exact", "greedy", "auto")


@dataclass(frozen=True)
class CliquePartition:
    """Partisi himpunan simpul menjadi klik, dalam urutan kanonik"""
    graph: Graph
    blocks: Tuple[Tuple[int, ...], ...]

    def __post_init__(self):
        blocks = [tuple(sorted(int(v) for v in block)) for block in self.blocks]
        if any(not block for block in blocks):
            raise ValidationError("partition contains an empty block")
        blocks.sort(key=lambda block: block[0])

        seen = 0
        for block in blocks:
            bits = as_bits(block)
            if bits & seen:
                raise ValidationError(f"block {list(block)} overlaps an earlier block")
            if not is_clique(self.graph, bits):
                raise ValidationError(f"block {list(block)} is not a clique")
            seen |= bits
        if seen != self.graph.full_mask:
            missing = list(members(self.graph.full_mask & ~seen))
            raise ValidationError(f"partition does not cover vertices {missing}")
        object.__setattr__(self, "blocks", tuple(blocks))

    @property
    def size(self) -> int:
        return len(self.blocks)

    def lumping_map(self) -> List[int]:
        """Block index of every vertex"""
        out = [0] * self.graph.n_vertices
        for index, block in enumerate(self.blocks):
            for v in block:
                out[v] = index
        return out


def _from_bitsets(G: Graph, blocks: Iterable[int]) -> CliquePartition:
    return CliquePartition(G, tuple(tuple(members(b)) for b in blocks))


def _check_cap(G: Graph, cap: int, what: str, hint: str = ""):
    if G.n_vertices > cap:
        raise ResourceCapError(f"{what} on {G.n_vertices} vertices exceeds the solver cap{hint}",
                               cap, G.n_vertices)


def clique_partition_greedy(G: Graph) -> CliquePartition:
    """Index order; each vertex joins the first block it is fully adjacent to"""
    blocks: List[int] = []
    for v in range(G.n_vertices):
        for i, block in enumerate(blocks):
            if block & ~G.rows[v] == 0:
                blocks[i] = block | 1 << v
                break
        else:
            blocks.append(1 << v)
    return _from_bitsets(G, blocks)


def _color_classes(G: Graph, P: int) -> Tuple[List[int], List[int]]:
    # sequential coloring of P into independent sets; bound[i] = color of order[i]
    order, bounds = [], []
    uncolored = P
    color = 0
    while uncolored:
        color += 1
        candidates = uncolored
        while candidates:
            v = (candidates & -candidates).bit_length() - 1
            candidates &= ~G.rows[v] & ~(1 << v)
            uncolored &= ~(1 << v)
            order.append(v)
            bounds.append(color)
    return order, bounds


def max_clique(G: Graph) -> List[int]:
    """A maximum clique, found by branch and bound with coloring bounds"""
    best: List[int] = []

    def expand(R: List[int], P: int):
        nonlocal best
        order, bounds = _color_classes(G, P)
        for v, bound in zip(reversed(order), reversed(bounds)):
            if len(R) + bound <= len(best):
                return
            R.append(v)
            candidates = P & G.rows[v]
            if candidates:
                expand(R, candidates)
            elif len(R) > len(best):
                best = list(R)
            R.pop()
            P &= ~(1 << v)

    expand([], G.full_mask)
    return sorted(best)


def _dsatur_select(G: Graph, uncolored: int, saturation: List[int]) -> int:
    best_v, best_sat = -1, -1
    for v in members(uncolored):
        sat = popcount(saturation[v])
        if sat > best_sat:
            best_v, best_sat = v, sat
    return best_v


def _dsatur_greedy(G: Graph) -> List[int]:
    colors = [-1] * G.n_vertices
    saturation = [0] * G.n_vertices
    uncolored = G.full_mask
    while uncolored:
        v = _dsatur_select(G, uncolored, saturation)
        used = saturation[v]
        c = 0
        while used >> c & 1:
            c += 1
        colors[v] = c
        uncolored &= ~(1 << v)
        for u in members(G.rows[v] & uncolored):
            saturation[u] |= 1 << c
    return colors


def _exact_coloring(G: Graph) -> List[int]:
    """
    Minimum coloring by DSATUR branch and bound.

    Starts from the greedy DSATUR coloring as upper bound and pins a maximum
    clique to colors 0..ω-1, which is also the lower bound.
    """
    n = G.n_vertices
    if n == 0:
        return []

    clique = max_clique(G)
    lower = len(clique)
    best = _dsatur_greedy(G)
    best_k = max(best) + 1
    if best_k == lower:
        return best

    colors = [-1] * n
    saturation = [0] * n
    uncolored = G.full_mask
    for c, v in enumerate(clique):
        colors[v] = c
        uncolored &= ~(1 << v)
    for c, v in enumerate(clique):
        for u in members(G.rows[v] & uncolored):
            saturation[u] |= 1 << c

    def backtrack(uncolored: int, k: int):
        nonlocal best, best_k
        if best_k == lower:
            return
        if not uncolored:
            if k < best_k:
                best_k = k
                best = list(colors)
            return

        v = _dsatur_select(G, uncolored, saturation)
        rest = uncolored & ~(1 << v)
        for c in range(min(k + 1, best_k - 1)):
            if saturation[v] >> c & 1:
                continue
            colors[v] = c
            changed = [u for u in members(G.rows[v] & rest) if not saturation[u] >> c & 1]
            for u in changed:
                saturation[u] |= 1 << c
            backtrack(rest, max(k, c + 1))
            for u in changed:
                saturation[u] &= ~(1 << c)
            colors[v] = -1

    backtrack(uncolored, lower)
    logger.debug(f"Exact coloring: {best_k} colors, clique lower bound {lower}")
    return best


def _classes(colors: Sequence[int]) -> List[int]:
    blocks = [0] * (max(colors) + 1 if colors else 0)
    for v, c in enumerate(colors):
        blocks[c] |= 1 << v
    return blocks


def clique_partition_exact(G: Graph,
                           exact_cap: int = DEFAULT_CONFIG.exact_solver_cap) -> CliquePartition:
    """Minimum clique partition, γ(G) = χ(Ḡ)"""
    _check_cap(G, exact_cap, "exact clique partition", "; use the greedy solver instead")
    return _from_bitsets(G, _classes(_exact_coloring(complement(G))))


def clique_partition_bruteforce(G: Graph,
                                bruteforce_cap: int = DEFAULT_CONFIG.bruteforce_cap) -> CliquePartition:
    """Exhaustive minimum over restricted-growth strings"""
    _check_cap(G, bruteforce_cap, "brute-force clique partition")
    n = G.n_vertices
    best: Optional[List[int]] = None
    blocks: List[int] = []

    def place(v: int):
        nonlocal best
        if best is not None and len(blocks) >= len(best):
            return
        if v == n:
            best = list(blocks)
            return
        for i, block in enumerate(blocks):
            if block & ~G.rows[v] == 0:
                blocks[i] = block | 1 << v
                place(v + 1)
                blocks[i] = block
        blocks.append(1 << v)
        place(v + 1)
        blocks.pop()

    place(0)
    return _from_bitsets(G, best or [])


def cover_to_partition(G: Graph, cover: Sequence[VertexSetLike]) -> CliquePartition:
    """Subtract earlier cliques from later ones and drop the emptied ones"""
    sets = [as_bits(S) for S in cover]
    covered = 0
    for bits in sets:
        if not is_clique(G, bits):
            raise ValidationError(f"cover member {list(members(bits))} is not a clique")
        covered |= bits
    if covered != G.full_mask:
        raise ValidationError(f"cover misses vertices {list(members(G.full_mask & ~covered))}")

    blocks, seen = [], 0
    for bits in sets:
        remaining = bits & ~seen
        if remaining:
            blocks.append(remaining)
            seen |= remaining
    return _from_bitsets(G, blocks)


def solve_clique_partition(G: Graph, solver: str = "auto",
                           exact_cap: int = DEFAULT_CONFIG.exact_solver_cap) -> Tuple[CliquePartition, bool]:
    """Partition plus a flag telling whether its size is γ(G) exactly"""
    if solver not in SOLVERS:
        raise ValidationError(f"unknown solver {solver!r}, expected one of {SOLVERS}")
    if solver == "greedy":
        return clique_partition_greedy(G), False
    if solver == "auto" and G.n_vertices > exact_cap:
        logger.warning(f"{G.n_vertices} vertices exceed the exact solver cap {exact_cap}; using greedy")
        return clique_partition_greedy(G), False
    return clique_partition_exact(G, exact_cap=exact_cap), True


def clique_number(G: Graph, exact_cap: int = DEFAULT_CONFIG.exact_solver_cap) -> int:
    _check_cap(G, exact_cap, "clique number")
    return len(max_clique(G))


def independence_number(G: Graph, exact_cap: int = DEFAULT_CONFIG.exact_solver_cap) -> int:
    return clique_number(complement(G), exact_cap=exact_cap)


def chromatic_number(G: Graph, exact_cap: int = DEFAULT_CONFIG.exact_solver_cap) -> int:
    _check_cap(G, exact_cap, "chromatic number")
    colors = _exact_coloring(G)
    return max(colors) + 1 if colors else 0
