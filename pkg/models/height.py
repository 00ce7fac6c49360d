"""
Height functions, cylinder instanton numbers and Kenyon moments.

Crossing a dual edge with sign s over primal edge e changes the height by
s * (w0(e) - 1[e in M]), where w0 is the balanced reference flow of the graph
(1/4 away from the boundary). Centered moments do not depend on the
reference flow.
"""

from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from itertools import product
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from constants import ToleranceConstants
from models.errors import DisjointnessError, GraphConstructionError, InconsistencyError, UnmatchableGraphError
from models.kasteleyn import KasteleynSystem, assemble
from models.lattice_graph import (
    BOTTOM_FACE,
    OUTER_FACE,
    TOP_FACE,
    DimerGraph,
    DualEdge,
    Edge,
    FaceId,
    VertexId,
    build_rectangle,
    canonical_edge,
    crossing,
    white_black,
)
from models.matchings import Matching, TransferCounter, all_matchings, check_disjoint, empirical_moment
from utils.logging import log_debug, log_info

# Height increments are -s (1[e in M] - p) once centered.
HEIGHT_SIGN = -1

# Global sign relating the determinant to the enumeration moment, fixed by
# calibrate_kenyon_sign() and asserted by the Kenyon sweep.
KENYON_SIGN = 1

DualPath = List[DualEdge]


def increment(dual: DualEdge, matching: Matching, flow: Dict[Edge, float]) -> float:
    """Height change along one dual edge."""
    edge = dual.crossed_edge
    occupied = 1.0 if edge in matching.edges else 0.0
    return dual.sign * (flow[edge] - occupied)


@dataclass
class HeightField:
    """
    Heights on the faces of a graph for one matching.

    On a cylinder the values live on the dual graph cut open along the seam;
    the increment around the cylinder is kept in `winding`.
    """
    graph: DimerGraph
    matching: Matching
    base_face: FaceId
    values: Dict[FaceId, float] = field(default_factory=dict)
    winding: Optional[float] = None

    def __getitem__(self, face: FaceId) -> float:
        return self.values[face]

    def difference(self, start: FaceId, end: FaceId) -> float:
        return self.values[end] - self.values[start]


def height_field(g: DimerGraph, matching: Matching, base_face: Optional[FaceId] = None) -> HeightField:
    """
    Integrate the height rule over the dual graph from base_face.

    Args:
        g: Lattice graph
        matching: Perfect matching of g
        base_face: Face with height 0 (defaults to the first boundary face)

    Raises:
        UnmatchableGraphError: If the matching is not perfect.
        InconsistencyError: If two dual paths to the same face disagree.
    """
    if not matching.is_perfect(g):
        raise UnmatchableGraphError("Height field needs a perfect matching of the graph")
    if base_face is None:
        base_face = BOTTOM_FACE if g.periodic else OUTER_FACE
    if base_face not in g.faces:
        raise GraphConstructionError(f"Unknown base face {base_face}")
    flow = g.balanced_flow

    values = {base_face: 0.0}
    stack = [base_face]
    while stack:
        face = stack.pop()
        for dual in g.dual_adjacency[face]:
            if dual.crossed_edge in g.cut:
                continue
            value = values[face] + increment(dual, matching, flow)
            known = values.get(dual.to_face)
            if known is None:
                values[dual.to_face] = value
                stack.append(dual.to_face)
            elif abs(known - value) > ToleranceConstants.HEIGHT_CONSISTENCY:
                raise InconsistencyError(
                    f"Height of {dual.to_face} is {known:.6g} or {value:.6g} depending on the path")

    winding = None
    if g.periodic:
        winding = sum(increment(d, matching, flow) for d in row_loop(g, g.y_min))
    return HeightField(g, matching, base_face, values, winding)


# ------------------------------------------------------------ cylinder paths

def column_path(g: DimerGraph, x: int = 0) -> DualPath:
    """
    Bottom-to-top dual path crossing the horizontal edges between columns x and x+1.

    Raises:
        GraphConstructionError: If g is not a cylinder or the crossings do not chain.
    """
    if not g.periodic:
        raise GraphConstructionError("Column paths are defined on cylinders")
    return _chain(g, vertical_segment(g, x, g.y_min, g.y_max), BOTTOM_FACE, TOP_FACE)


def vertical_segment(g: DimerGraph, x: int, y_from: int, y_to: int) -> DualPath:
    """Upward crossings of the horizontal edges (x, y)-(x+1, y) for y_from <= y <= y_to."""
    path = []
    for y in range(y_from, y_to + 1):
        a = VertexId(x % g.width_period if g.periodic else x, y)
        b = VertexId((x + 1) % g.width_period if g.periodic else x + 1, y)
        if canonical_edge(g, a, b) is not None:
            path.append(crossing(g, (a, b)))
    return path


def row_loop(g: DimerGraph, y: int) -> DualPath:
    """
    Dual loop around the cylinder crossing the vertical edges between rows y and y+1.

    Raises:
        GraphConstructionError: If g is not a cylinder or the loop is broken.
    """
    if not g.periodic:
        raise GraphConstructionError("Row loops are defined on cylinders")
    path = []
    for x in range(g.width_period):
        edge = canonical_edge(g, VertexId(x, y), VertexId(x, y + 1))
        if edge is not None:
            path.append(crossing(g, edge))
    if not path:
        raise GraphConstructionError(f"No vertical edges between rows {y} and {y + 1}")
    return _chain(g, path, path[0].from_face, path[0].from_face)


def _chain(g: DimerGraph, path: DualPath, start: FaceId, end: FaceId) -> DualPath:
    face = start
    for dual in path:
        if dual.from_face != face:
            raise GraphConstructionError(f"Dual path breaks at {dual.crossed_edge}: {face} != {dual.from_face}")
        face = dual.to_face
    if face != end:
        raise GraphConstructionError(f"Dual path ends at {face}, expected {end}")
    return path


def path_increment(path: DualPath, matching: Matching, flow: Dict[Edge, float]) -> float:
    return sum(increment(d, matching, flow) for d in path)


@dataclass(frozen=True)
class InstantonNumber:
    """Height gap between the cylinder boundaries and height winding around it."""
    gap: float
    winding: float


def instanton_number(g: DimerGraph, matching: Matching, x: int = 0) -> InstantonNumber:
    """
    Gap along column_path(g, x) and winding along the bottom row loop.

    Raises:
        GraphConstructionError: If g is not a cylinder.
    """
    if not g.periodic:
        raise GraphConstructionError("Instanton numbers are defined on cylinders")
    flow = g.balanced_flow
    gap = path_increment(column_path(g, x), matching, flow)
    winding = path_increment(row_loop(g, g.y_min), matching, flow)
    return InstantonNumber(gap, winding)


def centered_gap_values(g: DimerGraph, matchings: Sequence[Matching], x: int = 0) -> np.ndarray:
    """Gap of every matching minus the mean gap, in enumeration order."""
    path = column_path(g, x)
    flow = g.balanced_flow
    gaps = np.array([path_increment(path, m, flow) for m in matchings])
    return gaps - gaps.mean()


@dataclass(frozen=True)
class GapDistribution:
    """Exact law of the centered gap: support values and probabilities as fractions."""
    values: Tuple[Fraction, ...]
    probabilities: Tuple[Fraction, ...]
    count: int

    def moment(self, n: int) -> float:
        return float(sum(p * v ** n for v, p in zip(self.values, self.probabilities)))

    @property
    def support_offset(self) -> Fraction:
        """Common fractional part of the support, in [0, 1)."""
        offsets = {v - (v.numerator // v.denominator) for v in self.values}
        if len(offsets) != 1:
            raise InconsistencyError(f"Centered gaps do not lie on one translate of Z: {sorted(offsets)}")
        return offsets.pop()

    def as_dict(self) -> Dict[float, float]:
        return {float(v): float(p) for v, p in zip(self.values, self.probabilities)}


def gap_distribution(g: DimerGraph, x: int = 0, counter: Optional[TransferCounter] = None) -> GapDistribution:
    """
    Law of the centered gap along column_path(g, x), from transfer counting.

    The gap is sum_j s_j w0(e_j) - sum_j s_j 1[e_j in M]; only the second,
    integer part is random.
    """
    path = column_path(g, x)
    counter = counter or TransferCounter(g)
    charges = {d.crossed_edge: -d.sign for d in path}
    counts = counter.distribution(charges)
    total = sum(counts.values())
    if total == 0:
        raise UnmatchableGraphError(f"No perfect matchings of {g.summary()}")
    mean = sum(Fraction(v * c, total) for v, c in counts.items())
    support = sorted(counts)
    values = tuple(Fraction(v) - mean for v in support)
    probabilities = tuple(Fraction(counts[v], total) for v in support)
    log_debug(f"Gap law on {g.summary()}: support {[float(v) for v in values]}")
    return GapDistribution(values, probabilities, total)


# ------------------------------------------------------------ Kenyon moments

@dataclass(frozen=True)
class KenyonMomentRequest:
    """m dual edges whose crossed primal edges are pairwise vertex-disjoint."""
    dual_edges: Tuple[DualEdge, ...]

    def __post_init__(self):
        object.__setattr__(self, "dual_edges", tuple(self.dual_edges))
        check_disjoint(self.edges)

    @property
    def edges(self) -> List[Edge]:
        return [d.crossed_edge for d in self.dual_edges]

    @property
    def sign(self) -> int:
        result = 1
        for d in self.dual_edges:
            result *= d.sign
        return result

    @classmethod
    def from_edges(cls, g: DimerGraph, edges: Sequence[Edge]) -> "KenyonMomentRequest":
        """Request with the canonical crossing of each edge."""
        return cls(tuple(crossing(g, e) for e in edges))


def _raw_kenyon_moment(ks: KasteleynSystem, req: KenyonMomentRequest) -> complex:
    pairs = [white_black(e) for e in req.edges]
    m = len(pairs)
    if m == 0:
        return 1.0 + 0.0j
    matrix = np.zeros((m, m), dtype=complex)
    for i, (_, b_i) in enumerate(pairs):
        for j, (w_j, _) in enumerate(pairs):
            if i != j:
                matrix[i, j] = ks.inverse_entry(b_i, w_j)
    weights = np.prod([ks.weight(w, b) for w, b in pairs])
    return req.sign * np.linalg.det(matrix) * weights


def kenyon_moment(ks: KasteleynSystem, req: KenyonMomentRequest) -> float:
    """
    sigma * prod_j s_j * det[1_{i != j} K^{-1}(b_i, w_j)] * prod_j K(w_j, b_j).

    Equals the centered moment E prod_j s_j (1[e_j in M] - p_j).

    Raises:
        DisjointnessError: Raised by the request for overlapping edges.
        SingularSystemError: If K has no inverse.
        InconsistencyError: If the result is not real.
    """
    value = KENYON_SIGN * _raw_kenyon_moment(ks, req)
    if abs(value.imag) > ToleranceConstants.KENYON_IMAG * max(1.0, abs(value)):
        raise InconsistencyError(f"Kenyon moment has imaginary part {value.imag:.3g}")
    return float(value.real)


def path_moment(ks: KasteleynSystem, paths: Sequence[DualPath]) -> float:
    """
    Centered moment of prod_j (h(end_j) - h(start_j)) by multilinear expansion.

    Sums kenyon_moment over every choice of one dual edge per path.

    Raises:
        DisjointnessError: If crossed edges of different paths share vertices.
    """
    for i in range(len(paths)):
        vertices_i = {v for d in paths[i] for v in d.crossed_edge}
        for j in range(i + 1, len(paths)):
            if any(v in vertices_i for d in paths[j] for v in d.crossed_edge):
                raise DisjointnessError(f"Paths {i} and {j} cross edges sharing a vertex")
    total = 0.0
    for choice in product(*paths):
        total += kenyon_moment(ks, KenyonMomentRequest(tuple(choice)))
    return HEIGHT_SIGN ** len(paths) * total


def empirical_path_moment(g: DimerGraph, paths: Sequence[DualPath], matchings: Sequence[Matching]) -> float:
    """Centered moment of prod_j (h(end_j) - h(start_j)) by direct averaging over matchings."""
    flow = g.balanced_flow
    increments = np.array([[path_increment(p, m, flow) for p in paths] for m in matchings])
    centered = increments - increments.mean(axis=0)
    return float(np.prod(centered, axis=1).mean())


@lru_cache(maxsize=1)
def calibrate_kenyon_sign() -> int:
    """
    Sign relating the raw determinant to the enumeration moment.

    Uses two adjacent vertical edges of the 2x4 rectangle, whose covariance is
    non-zero.
    """
    g = build_rectangle(4, 2)
    edges = [(VertexId(0, 0), VertexId(0, 1)), (VertexId(1, 0), VertexId(1, 1))]
    req = KenyonMomentRequest.from_edges(g, edges)
    empirical = empirical_moment(g, req.dual_edges, all_matchings(g))
    raw = _raw_kenyon_moment(assemble(g), req).real
    if abs(raw) < ToleranceConstants.KENYON_MOMENT or abs(abs(raw) - abs(empirical)) > ToleranceConstants.KENYON_MOMENT:
        raise InconsistencyError(f"Calibration moments disagree in size: {raw:.6g} vs {empirical:.6g}")
    sign = 1 if raw * empirical > 0 else -1
    log_info(f"Kenyon sign calibrated to {sign:+d}")
    return sign
