"""
Perfect matchings: exact enumeration, transfer counting and uniform sampling.

Enumeration is the ground-truth oracle on small graphs. The transfer counter
handles graphs whose matchings are too many to list (it never materializes a
matching) and also yields counts with forced edges and exact distributions of
integer edge observables.
"""

from collections import defaultdict
from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations
from typing import Dict, Iterable, Iterator, List, Mapping, Optional, Sequence, Set, Tuple

import numpy as np

from constants import LatticeConstants
from models.errors import DisjointnessError, EnumerationLimitError, GraphConstructionError, UnmatchableGraphError
from models.lattice_graph import DimerGraph, DualEdge, Edge, VertexId, canonical_edge
from utils.logging import log_debug


@dataclass(frozen=True)
class Matching:
    """A set of primal edges (in stored orientation)."""
    edges: frozenset

    def __contains__(self, edge: Edge) -> bool:
        return edge in self.edges or (edge[1], edge[0]) in self.edges

    def partner(self, v: VertexId) -> Optional[VertexId]:
        for a, b in self.edges:
            if a == v:
                return b
            if b == v:
                return a
        return None

    def is_perfect(self, g: DimerGraph) -> bool:
        """Check that every vertex of g is covered exactly once by edges of g."""
        covered: List[VertexId] = []
        for a, b in self.edges:
            if canonical_edge(g, a, b) is None:
                return False
            covered.extend((a, b))
        return len(covered) == len(set(covered)) and set(covered) == set(g.vertices)


def check_disjoint(edges: Sequence[Edge]):
    """
    Raise DisjointnessError unless the edges are pairwise vertex-disjoint.
    """
    seen: Set[VertexId] = set()
    for a, b in edges:
        if a in seen or b in seen:
            raise DisjointnessError(f"Edge {a}-{b} shares a vertex with another edge of the tuple")
        seen.update((a, b))


# ------------------------------------------------------------------ enumeration

def enumerate_matchings(g: DimerGraph,
                        limit: int = LatticeConstants.DEFAULT_ENUMERATION_LIMIT) -> Iterator[Matching]:
    """
    Yield every perfect matching of g exactly once, in a deterministic order.

    Backtracks on the uncovered vertex with the fewest uncovered neighbours
    (ties in row-major order), so a vertex with none ends the branch at once.

    Args:
        g: Lattice graph
        limit: Maximum number of matchings to produce

    Raises:
        UnmatchableGraphError: If the color classes differ in size.
        EnumerationLimitError: When a matching beyond `limit` is found.
    """
    if not g.is_balanced:
        raise UnmatchableGraphError(
            f"Graph has {len(g.white_vertices)} white and {len(g.black_vertices)} black vertices")
    adjacency = g.adjacency
    uncovered: Set[VertexId] = set(g.vertices)
    chosen: List[Edge] = []
    emitted = 0

    def free_degree(v: VertexId) -> int:
        return sum(1 for n in adjacency[v] if n in uncovered)

    def search() -> Iterator[Matching]:
        nonlocal emitted
        if not uncovered:
            if emitted >= limit:
                raise EnumerationLimitError(f"More than {limit} perfect matchings", emitted)
            emitted += 1
            yield Matching(frozenset(chosen))
            return
        v = min(uncovered, key=lambda u: (free_degree(u), u.sort_key()))
        for n in adjacency[v]:
            if n not in uncovered:
                continue
            uncovered.discard(v)
            uncovered.discard(n)
            chosen.append(canonical_edge(g, v, n))
            yield from search()
            chosen.pop()
            uncovered.add(v)
            uncovered.add(n)

    yield from search()


def all_matchings(g: DimerGraph, limit: int = LatticeConstants.DEFAULT_ENUMERATION_LIMIT) -> List[Matching]:
    matchings = list(enumerate_matchings(g, limit))
    log_debug(f"Enumerated {len(matchings)} matchings of {g.summary()}")
    return matchings


def count_matchings(g: DimerGraph, limit: int = LatticeConstants.DEFAULT_ENUMERATION_LIMIT) -> int:
    return sum(1 for _ in enumerate_matchings(g, limit))


def edge_frequencies(g: DimerGraph, matchings: Sequence[Matching]) -> Dict[Edge, float]:
    """Fraction of matchings containing each edge."""
    if not matchings:
        raise UnmatchableGraphError("No perfect matchings")
    counts: Dict[Edge, int] = {e: 0 for e in g.edges}
    for m in matchings:
        for e in m.edges:
            counts[e] += 1
    return {e: c / len(matchings) for e, c in counts.items()}


def empirical_moment(g: DimerGraph, dual_edges: Sequence[DualEdge],
                     matchings: Sequence[Matching]) -> float:
    """
    (1/Z) sum over matchings of prod_j s_j (1[e_j in M] - p_j).

    p_j is the enumeration frequency of the crossed edge e_j.

    Raises:
        DisjointnessError: If the crossed edges share vertices.
    """
    edges = [d.crossed_edge for d in dual_edges]
    check_disjoint(edges)
    if not matchings:
        raise UnmatchableGraphError("No perfect matchings")
    if not edges:
        return 1.0
    signs = np.array([d.sign for d in dual_edges], dtype=float)
    indicator = np.array([[1.0 if e in m.edges else 0.0 for e in edges] for m in matchings])
    frequencies = indicator.mean(axis=0)
    terms = np.prod(signs * (indicator - frequencies), axis=1)
    return float(terms.mean())


def sample_uniform(g: DimerGraph, rng_seed: int, n: int,
                   limit: int = LatticeConstants.DEFAULT_ENUMERATION_LIMIT) -> List[Matching]:
    """
    n independent uniform draws by index into the enumerated list.

    Raises:
        EnumerationLimitError: As enumerate_matchings.
    """
    if n < 0:
        raise ValueError(f"Sample size must be >= 0, got {n}")
    if n == 0:
        return []
    population = all_matchings(g, limit)
    if not population:
        raise UnmatchableGraphError(f"No perfect matchings of {g.summary()}")
    rng = np.random.default_rng(rng_seed)
    return [population[i] for i in rng.integers(0, len(population), size=n)]


# ------------------------------------------------------------ transfer counting

class TransferCounter:
    """
    Broken-profile counter over the row-major site order of a graph.

    The state is the set of not-yet-processed vertices already covered by an
    edge from an earlier vertex; every edge reaches at most one row ahead, so
    the state fits in width + 1 bits.
    """

    def __init__(self, graph: DimerGraph):
        """
        Initialize a TransferCounter.

        Args:
            graph: Lattice graph

        Raises:
            GraphConstructionError: If the graph is too wide for the profile.
        """
        if graph.width_period > LatticeConstants.MAX_TRANSFER_WIDTH:
            raise GraphConstructionError(
                f"Width {graph.width_period} exceeds transfer limit {LatticeConstants.MAX_TRANSFER_WIDTH}")
        self.graph = graph
        width = graph.width_period
        self.sites = [VertexId(x, y) for y in range(graph.y_min, graph.y_max + 1) for x in range(width)]

    def _later_neighbours(self, p: int, present: Sequence[bool]) -> List[Tuple[int, Edge]]:
        g = self.graph
        width = g.width_period
        v = self.sites[p]
        options = []
        if v.x + 1 < width and present[p + 1]:
            options.append((1, canonical_edge(g, v, self.sites[p + 1])))
        if p + width < len(self.sites) and present[p + width]:
            options.append((width, canonical_edge(g, v, self.sites[p + width])))
        if g.periodic and v.x == 0 and present[p + width - 1]:
            options.append((width - 1, canonical_edge(g, v, self.sites[p + width - 1])))
        return [(offset, edge) for offset, edge in options if edge is not None]

    def distribution(self, charges: Optional[Mapping[Edge, int]] = None,
                     forced: Iterable[Edge] = ()) -> Dict[int, int]:
        """
        Number of perfect matchings by total charge sum_{e in M} charges[e].

        Args:
            charges: Integer charge per edge (missing edges carry 0)
            forced: Pairwise disjoint edges every counted matching must contain

        Returns:
            Mapping charge -> count; an empty mapping when no matching exists
        """
        g = self.graph
        forced = [canonical_edge(g, *e) for e in forced]
        if any(e is None for e in forced):
            raise GraphConstructionError("Forced edge is not an edge of the graph")
        check_disjoint(forced)
        charges = {canonical_edge(g, *e): c for e, c in (charges or {}).items()}
        offset_charge = sum(charges.get(e, 0) for e in forced)
        blocked = {v for e in forced for v in e}
        present = [s in g.vertices and s not in blocked for s in self.sites]

        states: Dict[Tuple[int, int], int] = {(0, 0): 1}
        for p in range(len(self.sites)):
            following: Dict[Tuple[int, int], int] = defaultdict(int)
            options = self._later_neighbours(p, present) if present[p] else []
            for (mask, value), count in states.items():
                if not present[p] or mask & 1:
                    following[(mask >> 1, value)] += count
                    continue
                for offset, edge in options:
                    if (mask >> offset) & 1:
                        continue
                    following[((mask | (1 << offset)) >> 1, value + charges.get(edge, 0))] += count
            states = following
        result = {value + offset_charge: count for (mask, value), count in states.items() if mask == 0 and count}
        log_debug(f"Transfer count on {g.summary()}: {sum(result.values())} matchings, "
                  f"{len(forced)} forced edges")
        return result

    def count(self, forced: Iterable[Edge] = ()) -> int:
        """Number of perfect matchings containing every forced edge."""
        return sum(self.distribution(forced=forced).values())

    def edge_probability(self, edge: Edge) -> Fraction:
        total = self.count()
        if total == 0:
            raise UnmatchableGraphError(f"No perfect matchings of {self.graph.summary()}")
        return Fraction(self.count([edge]), total)


def transfer_count(g: DimerGraph, forced: Iterable[Edge] = ()) -> int:
    return TransferCounter(g).count(forced)


def exact_moment(g: DimerGraph, dual_edges: Sequence[DualEdge],
                 counter: Optional[TransferCounter] = None) -> float:
    """
    Centered moment E prod_j s_j (1[e_j in M] - p_j) from forced-edge counts.

    Expands the product over subsets S of the tuple:
    sum_S P(all e_j, j in S) prod_{j not in S} (-p_j), times prod_j s_j.
    Exact (rational) until the final conversion.

    Raises:
        DisjointnessError: If the crossed edges share vertices.
    """
    counter = counter or TransferCounter(g)
    edges = [d.crossed_edge for d in dual_edges]
    check_disjoint(edges)
    total = counter.count()
    if total == 0:
        raise UnmatchableGraphError(f"No perfect matchings of {g.summary()}")
    m = len(edges)
    singles = [Fraction(counter.count([e]), total) for e in edges]
    moment = Fraction(0)
    for size in range(m + 1):
        for subset in combinations(range(m), size):
            joint = Fraction(counter.count([edges[j] for j in subset]), total) if subset else Fraction(1)
            for j in range(m):
                if j not in subset:
                    joint *= -singles[j]
            moment += joint
    sign = 1
    for d in dual_edges:
        sign *= d.sign
    return float(sign * moment)
