"""
Kasteleyn matrices with monodromy twists.

Rows are indexed by white vertices, columns by black vertices. Horizontal
edges carry weight 1 and vertical edges weight i; seam and hole cuts carry
the twist factors that make every bounded face Kasteleyn-flat.
"""

import math
import threading
import warnings
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np
from scipy.linalg import LinAlgWarning, lu_factor, lu_solve

from constants import LatticeConstants, ToleranceConstants
from models.errors import GraphConstructionError, InconsistencyError, RectangularMatrixError, SingularSystemError
from models.lattice_graph import DimerGraph, Edge, VertexId, canonical_edge, is_horizontal, white_black
from utils.logging import log_debug
from utils.numeric_utils import NumericUtils


def counting_monodromy(g: DimerGraph) -> complex:
    """
    Monodromy for which |det K| counts the perfect matchings of g.

    -1 around the cylinder, flipped once more when the inner (bottom) boundary
    has absorbed an odd number of removed sites; 1 for planar graphs.
    """
    if not g.periodic:
        return 1.0 + 0.0j
    return -1.0 + 0.0j if g.inner_boundary_removed % 2 == 0 else 1.0 + 0.0j


def default_hole_monodromies(g: DimerGraph) -> List[complex]:
    """Flat twist per hole: (-1) to the number of removed sites in the hole."""
    return [(-1.0) ** (len(members) % 2) + 0.0j for members in g.hole_clusters]


def seam_factor(g: DimerGraph, monodromy: complex) -> complex:
    """
    Factor applied to seam edges.

    The horizontal-1 gauge is translation invariant only under even shifts, so
    on circumference 2k the seam carries an extra (-1)^k relative to the
    physical monodromy.
    """
    return monodromy * (-1.0) ** (g.k % 2)


class KasteleynSystem:
    """
    Weighted Kasteleyn matrix of one graph with a lazily computed LU factorization.

    A system is single-writer: factorization and inverse columns are cached on
    first use under a lock; read-only queries afterwards are thread-safe.
    """

    def __init__(self, graph: DimerGraph, weights: Mapping[Edge, complex],
                 monodromy: complex = 1.0, hole_monodromies: Sequence[complex] = ()):
        """
        Initialize a KasteleynSystem.

        Args:
            graph: Balanced lattice graph
            weights: Complex weight per edge of the graph
            monodromy: Physical monodromy around the cylinder (1 for planar graphs)
            hole_monodromies: Twist factor per hole, in hole order

        Raises:
            RectangularMatrixError: If the color classes have different sizes.
            GraphConstructionError: If the graph is too large for a dense matrix.
        """
        if len(graph.vertices) > LatticeConstants.MAX_DENSE_VERTICES:
            raise GraphConstructionError(
                f"{len(graph.vertices)} vertices exceed the dense limit {LatticeConstants.MAX_DENSE_VERTICES}")
        if not graph.is_balanced:
            raise RectangularMatrixError(
                f"Graph has {len(graph.white_vertices)} white and {len(graph.black_vertices)} black vertices")
        self.graph = graph
        self.monodromy = complex(monodromy)
        self.hole_monodromies = tuple(complex(h) for h in hole_monodromies)
        self.weights: Dict[Edge, complex] = dict(weights)
        self.whites: List[VertexId] = graph.white_vertices
        self.blacks: List[VertexId] = graph.black_vertices
        self.white_index = {w: i for i, w in enumerate(self.whites)}
        self.black_index = {b: j for j, b in enumerate(self.blacks)}

        n = len(self.whites)
        self.matrix = np.zeros((n, n), dtype=complex)
        for edge, weight in self.weights.items():
            if weight == 0:
                raise InconsistencyError(f"Zero weight on edge {edge}")
            w, b = white_black(edge)
            self.matrix[self.white_index[w], self.black_index[b]] = weight

        self._lock = threading.Lock()
        self._lu: Optional[Tuple[np.ndarray, np.ndarray]] = None
        self._log_abs_det: Optional[float] = None
        self._det_phase: complex = 0.0j
        self._columns: Dict[VertexId, np.ndarray] = {}

    # ----------------------------------------------------------- factorization

    def _factor(self) -> Tuple[np.ndarray, np.ndarray]:
        with self._lock:
            if self._lu is None:
                if self.matrix.shape[0] == 0:
                    self._lu = (self.matrix.copy(), np.zeros(0, dtype=np.int32))
                    self._log_abs_det, self._det_phase = 0.0, 1.0 + 0.0j
                else:
                    with warnings.catch_warnings():
                        warnings.simplefilter("ignore", LinAlgWarning)
                        lu, piv = lu_factor(self.matrix, check_finite=False)
                    self._lu = (lu, piv)
                    self._log_abs_det, self._det_phase = NumericUtils.log_det_from_lu(lu, piv)
                log_debug(f"Factored Kasteleyn matrix of size {self.matrix.shape[0]}, "
                          f"log|det| = {self._log_abs_det:.6g}")
            return self._lu

    @property
    def log_abs_det(self) -> float:
        self._factor()
        return self._log_abs_det

    @property
    def det_phase(self) -> complex:
        self._factor()
        return self._det_phase

    @property
    def is_singular(self) -> bool:
        lu, _ = self._factor()
        if lu.shape[0] == 0:
            return False
        pivots = np.abs(np.diag(lu))
        return bool(pivots.min() <= ToleranceConstants.SINGULAR_PIVOT * max(1.0, pivots.max()))

    # ---------------------------------------------------------------- entries

    def weight(self, w: VertexId, b: VertexId) -> complex:
        """K(w, b): the weight of edge wb, or 0 for non-edges."""
        return complex(self.matrix[self.white_index[w], self.black_index[b]])

    def inverse_column(self, w: VertexId) -> np.ndarray:
        """Column w of K^{-1}, indexed by black vertices (one triangular solve, cached)."""
        column = self._columns.get(w)
        if column is not None:
            return column
        if self.is_singular:
            raise SingularSystemError("Kasteleyn matrix is singular; no inverse entries")
        rhs = np.zeros(len(self.whites), dtype=complex)
        rhs[self.white_index[w]] = 1.0
        column = lu_solve(self._factor(), rhs, check_finite=False)
        with self._lock:
            self._columns[w] = column
        return column

    def inverse_entry(self, b: VertexId, w: VertexId) -> complex:
        """
        K^{-1}(b, w).

        Raises:
            ValueError: If b is not black or w is not white.
            SingularSystemError: If K has no inverse.
        """
        if b not in self.black_index or w not in self.white_index:
            raise ValueError(f"inverse_entry expects (black, white) vertices, got {b}, {w}")
        return complex(self.inverse_column(w)[self.black_index[b]])

    def inverse_matrix(self) -> np.ndarray:
        """Full K^{-1} (blacks x whites)."""
        if self.is_singular:
            raise SingularSystemError("Kasteleyn matrix is singular; no inverse")
        return lu_solve(self._factor(), np.eye(len(self.whites), dtype=complex), check_finite=False)

    def edge_probability(self, edge: Edge) -> float:
        """
        P(edge in a uniform perfect matching) = K(w, b) K^{-1}(b, w).

        Raises:
            InconsistencyError: If the value is not a probability within tolerance.
        """
        stored = canonical_edge(self.graph, *edge)
        if stored is None:
            raise ValueError(f"{edge[0]}-{edge[1]} is not an edge of the graph")
        w, b = white_black(stored)
        value = self.weight(w, b) * self.inverse_entry(b, w)
        if abs(value.imag) > ToleranceConstants.EDGE_PROBABILITY_IMAG:
            raise InconsistencyError(f"Edge {stored} probability has imaginary part {value.imag:.3g}")
        tol = ToleranceConstants.EDGE_PROBABILITY_RANGE
        if not -tol <= value.real <= 1.0 + tol:
            raise InconsistencyError(f"Edge {stored} probability {value.real:.6g} outside [0, 1]")
        return min(1.0, max(0.0, value.real))

    def partition_function(self) -> Tuple[float, complex]:
        """(log|det K|, phase of det K)."""
        return self.log_abs_det, self.det_phase

    def abs_det(self) -> float:
        return math.exp(self.log_abs_det) if self.log_abs_det != -math.inf else 0.0

    def conjugate(self) -> "KasteleynSystem":
        """System with every weight complex-conjugated."""
        return KasteleynSystem(self.graph, {e: w.conjugate() for e, w in self.weights.items()},
                               self.monodromy.conjugate(), [h.conjugate() for h in self.hole_monodromies])


def kasteleyn_weights(g: DimerGraph, monodromy: complex, hole_monodromies: Sequence[complex],
                      global_phase: complex = 1.0) -> Dict[Edge, complex]:
    """Horizontal 1 / vertical i weights with seam and hole twists applied."""
    weights = {}
    for edge in g.edges:
        base = LatticeConstants.HORIZONTAL_WEIGHT if is_horizontal(edge) else LatticeConstants.VERTICAL_WEIGHT
        weights[edge] = base * global_phase
    if g.periodic:
        factor = seam_factor(g, monodromy)
        for edge in g.cut:
            weights[edge] *= factor
    for cut, factor in zip(g.hole_cuts, hole_monodromies):
        for edge in cut:
            weights[edge] *= factor
    return weights


def assemble(g: DimerGraph, monodromy: Optional[complex] = None,
             hole_monodromies: Optional[Sequence[complex]] = None,
             global_phase: complex = 1.0,
             weight_overrides: Optional[Mapping[Edge, complex]] = None) -> KasteleynSystem:
    """
    Build the Kasteleyn system of g.

    Args:
        g: Balanced lattice graph
        monodromy: Unit complex around the cylinder; defaults to counting_monodromy(g)
        hole_monodromies: One unit complex per hole; defaults to the flat twists
        global_phase: Unit complex multiplying every weight (gauge)
        weight_overrides: Edge -> factor multiplying the assembled weight (fault injection)

    Raises:
        RectangularMatrixError: If g is unbalanced.
    """
    if not g.is_balanced:
        raise RectangularMatrixError(
            f"Graph has {len(g.white_vertices)} white and {len(g.black_vertices)} black vertices")
    if monodromy is None:
        monodromy = counting_monodromy(g)
    if hole_monodromies is None:
        hole_monodromies = default_hole_monodromies(g)
    if len(hole_monodromies) != len(g.hole_clusters):
        raise ValueError(f"Expected {len(g.hole_clusters)} hole monodromies, got {len(hole_monodromies)}")
    weights = kasteleyn_weights(g, monodromy, hole_monodromies, global_phase)
    for edge, factor in (weight_overrides or {}).items():
        stored = canonical_edge(g, *edge)
        if stored is None:
            raise ValueError(f"Override for non-edge {edge}")
        weights[stored] *= factor
    return KasteleynSystem(g, weights, monodromy, hole_monodromies)


def partition_function(ks: KasteleynSystem) -> Tuple[float, complex]:
    """(log|det K|, phase); |det K| = 0 is reported, not raised."""
    return ks.partition_function()


def inverse_entry(ks: KasteleynSystem, b: VertexId, w: VertexId) -> complex:
    return ks.inverse_entry(b, w)


def edge_probability(ks: KasteleynSystem, edge: Edge) -> float:
    return ks.edge_probability(edge)


def matching_count_from_det(ks: KasteleynSystem) -> int:
    """round(|det K|)."""
    return int(round(ks.abs_det()))
