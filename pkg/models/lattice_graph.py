"""
Bipartite square-lattice graphs for the dimer model.

Rectangles, rectangles with rectangular holes and the cylinders C_k^DD / C_k^ND,
together with their dual faces, boundary components, punctures and the cuts
that carry Kasteleyn twists.
"""

import math
from collections import deque
from dataclasses import dataclass, field
from functools import cached_property
from typing import Dict, FrozenSet, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from constants import LatticeConstants
from models.errors import GraphConstructionError, UnmatchableGraphError
from utils.logging import log_debug


@dataclass(frozen=True)
class VertexId:
    """A lattice vertex; black iff x + y is even."""
    x: int
    y: int

    @property
    def color(self) -> str:
        return LatticeConstants.BLACK if (self.x + self.y) % 2 == 0 else LatticeConstants.WHITE

    @property
    def is_black(self) -> bool:
        return (self.x + self.y) % 2 == 0

    @property
    def is_white(self) -> bool:
        return not self.is_black

    def sort_key(self) -> Tuple[int, int]:
        """Row-major ordering key."""
        return (self.y, self.x)

    def __repr__(self) -> str:
        return f"({self.x},{self.y})"


# Edges are stored as (a, b) with b the right or upper neighbour of a.
Edge = Tuple[VertexId, VertexId]


@dataclass(frozen=True)
class FaceId:
    """
    A dual face.

    Unit squares are indexed by their lower-left primal vertex (kind "cell");
    the reserved kinds are "outer" (planar outer face), "bottom" and "top"
    (cylinder boundary faces) and "hole" (x holds the hole index).
    """
    kind: str
    x: int = 0
    y: int = 0

    def __repr__(self) -> str:
        if self.kind == "cell":
            return f"cell({self.x},{self.y})"
        if self.kind == "hole":
            return f"hole{self.x}"
        return self.kind


OUTER_FACE = FaceId("outer")
BOTTOM_FACE = FaceId("bottom")
TOP_FACE = FaceId("top")


@dataclass(frozen=True)
class DualEdge:
    """
    A dual edge crossing one primal edge.

    sign is +1 when the white endpoint of crossed_edge lies to the left while
    walking from from_face to to_face.
    """
    from_face: FaceId
    to_face: FaceId
    crossed_edge: Edge
    sign: int

    def reversed(self) -> "DualEdge":
        return DualEdge(self.to_face, self.from_face, self.crossed_edge, -self.sign)


def is_horizontal(edge: Edge) -> bool:
    return edge[0].y == edge[1].y


def white_black(edge: Edge) -> Tuple[VertexId, VertexId]:
    """Return the (white, black) endpoints of an edge."""
    a, b = edge
    return (a, b) if a.is_white else (b, a)


@dataclass(frozen=True, eq=False)
class DimerGraph:
    """
    Immutable bipartite lattice graph.

    The graph lives on the sites {0..width_period-1} x {y_min..y_max}; sites of
    that box missing from `vertices` are the removed sites (holes and
    punctures). Removed sites group into 8-connected clusters; a cluster that
    touches the outer rim (planar) or one of the two boundary rows (cylinder)
    merges with that boundary face, every other cluster is a hole with its own
    face and its own cut.
    """
    topology: str
    width_period: int
    rows: int
    y_min: int
    vertices: FrozenSet[VertexId]
    removed: FrozenSet[VertexId]
    tau: Optional[float] = None
    style: Optional[str] = None
    seam: int = 0
    holes: Tuple[Tuple[int, int, int, int], ...] = ()

    @property
    def periodic(self) -> bool:
        return self.topology == LatticeConstants.CYLINDER

    @property
    def y_max(self) -> int:
        return self.y_min + self.rows - 1

    @property
    def k(self) -> Optional[int]:
        return self.width_period // 2 if self.periodic else None

    def _wrap(self, x: int) -> int:
        return x % self.width_period if self.periodic else x

    def _in_box(self, x: int, y: int) -> bool:
        if not self.y_min <= y <= self.y_max:
            return False
        return self.periodic or 0 <= x < self.width_period

    # ------------------------------------------------------------------ edges

    @cached_property
    def edges(self) -> FrozenSet[Edge]:
        result = set()
        for v in self.vertices:
            right = VertexId(self._wrap(v.x + 1), v.y)
            if (self.periodic or v.x + 1 < self.width_period) and right in self.vertices:
                result.add((v, right))
            up = VertexId(v.x, v.y + 1)
            if up in self.vertices:
                result.add((v, up))
        return frozenset(result)

    @cached_property
    def sorted_edges(self) -> List[Edge]:
        return sorted(self.edges, key=lambda e: (e[0].sort_key(), e[1].sort_key()))

    @cached_property
    def adjacency(self) -> Dict[VertexId, Tuple[VertexId, ...]]:
        neighbours: Dict[VertexId, List[VertexId]] = {v: [] for v in self.vertices}
        for a, b in self.edges:
            neighbours[a].append(b)
            neighbours[b].append(a)
        return {v: tuple(sorted(ns, key=VertexId.sort_key)) for v, ns in neighbours.items()}

    def has_edge(self, u: VertexId, v: VertexId) -> bool:
        return canonical_edge(self, u, v) is not None

    @cached_property
    def white_vertices(self) -> List[VertexId]:
        return sorted((v for v in self.vertices if v.is_white), key=VertexId.sort_key)

    @cached_property
    def black_vertices(self) -> List[VertexId]:
        return sorted((v for v in self.vertices if v.is_black), key=VertexId.sort_key)

    @property
    def is_balanced(self) -> bool:
        return len(self.white_vertices) == len(self.black_vertices)

    # --------------------------------------------------------------- clusters

    @cached_property
    def clusters(self) -> List[Tuple[str, FrozenSet[VertexId]]]:
        """
        8-connected clusters of removed sites with their face kind.

        Kinds are "outer", "bottom", "top" or "hole"; holes come in row-major
        order of their first site.
        """
        remaining = set(self.removed)
        found = []
        for start in sorted(self.removed, key=VertexId.sort_key):
            if start not in remaining:
                continue
            remaining.discard(start)
            members = {start}
            queue = deque([start])
            while queue:
                s = queue.popleft()
                for dx in (-1, 0, 1):
                    for dy in (-1, 0, 1):
                        n = VertexId(self._wrap(s.x + dx), s.y + dy)
                        if n in remaining:
                            remaining.discard(n)
                            members.add(n)
                            queue.append(n)
            found.append(frozenset(members))

        classified = []
        for members in found:
            ys = {s.y for s in members}
            if self.periodic:
                touches_bottom = self.y_min in ys
                touches_top = self.y_max in ys
                if touches_bottom and touches_top:
                    raise GraphConstructionError("Removed sites connect both boundary rows of the cylinder")
                kind = "bottom" if touches_bottom else "top" if touches_top else "hole"
            else:
                xs = {s.x for s in members}
                on_rim = (0 in xs or self.width_period - 1 in xs or self.y_min in ys or self.y_max in ys)
                kind = "outer" if on_rim else "hole"
            classified.append((kind, members))
        return classified

    @cached_property
    def _site_face(self) -> Dict[VertexId, FaceId]:
        mapping = {}
        hole_index = 0
        for kind, members in self.clusters:
            if kind == "hole":
                face = FaceId("hole", hole_index)
                hole_index += 1
            elif kind == "outer":
                face = OUTER_FACE
            elif kind == "bottom":
                face = BOTTOM_FACE
            else:
                face = TOP_FACE
            for s in members:
                mapping[s] = face
        return mapping

    @cached_property
    def hole_clusters(self) -> List[FrozenSet[VertexId]]:
        return [members for kind, members in self.clusters if kind == "hole"]

    @property
    def inner_boundary_removed(self) -> int:
        """Number of removed sites merged into the bottom face of a cylinder."""
        return sum(len(m) for kind, m in self.clusters if kind == "bottom")

    # ------------------------------------------------------------------ faces

    def face_of_cell(self, cx: int, cy: int) -> FaceId:
        """Face containing the unit square with lower-left corner (cx, cy)."""
        if self.periodic:
            if cy < self.y_min:
                return BOTTOM_FACE
            if cy >= self.y_max:
                return TOP_FACE
            cx = self._wrap(cx)
        elif cx < 0 or cy < self.y_min or cx >= self.width_period - 1 or cy >= self.y_max:
            return OUTER_FACE
        corners = (VertexId(cx, cy), VertexId(self._wrap(cx + 1), cy),
                   VertexId(cx, cy + 1), VertexId(self._wrap(cx + 1), cy + 1))
        for corner in corners:
            if corner not in self.vertices:
                return self._site_face[corner]
        return FaceId("cell", cx, cy)

    @cached_property
    def dual_edges(self) -> Dict[Edge, DualEdge]:
        """Canonical dual edge per primal edge: below -> above, or left -> right."""
        result = {}
        for edge in self.edges:
            a, b = edge
            if is_horizontal(edge):
                src, dst = self.face_of_cell(a.x, a.y - 1), self.face_of_cell(a.x, a.y)
                sign = 1 if a.is_white else -1
            else:
                src, dst = self.face_of_cell(a.x - 1, a.y), self.face_of_cell(a.x, a.y)
                sign = 1 if b.is_white else -1
            result[edge] = DualEdge(src, dst, edge, sign)
        return result

    @cached_property
    def faces(self) -> FrozenSet[FaceId]:
        found = set()
        for dual in self.dual_edges.values():
            found.add(dual.from_face)
            found.add(dual.to_face)
        return frozenset(found)

    @cached_property
    def dual_adjacency(self) -> Dict[FaceId, List[DualEdge]]:
        """Dual edges leaving each face, in a deterministic order."""
        adjacency: Dict[FaceId, List[DualEdge]] = {f: [] for f in self.faces}
        for edge in self.sorted_edges:
            dual = self.dual_edges[edge]
            if dual.from_face == dual.to_face:
                continue
            adjacency[dual.from_face].append(dual)
            adjacency[dual.to_face].append(dual.reversed())
        return adjacency

    # --------------------------------------------------------------- boundary

    @cached_property
    def boundary_components(self) -> List[Tuple[VertexId, ...]]:
        """
        Boundary vertex cycles B_0..B_n.

        Planar: the outer boundary first, then one cycle per hole. Cylinder:
        bottom (B_0), top (B_1), then holes. Each cycle is ordered by angle
        around its centroid (by x along the cylinder boundaries).
        """
        by_face: Dict[FaceId, set] = {}
        for v in self.vertices:
            for dx in (-1, 0, 1):
                for dy in (-1, 0, 1):
                    if dx == 0 and dy == 0:
                        continue
                    x, y = v.x + dx, v.y + dy
                    if self._in_box(x, y):
                        site = VertexId(self._wrap(x), y)
                        if site in self.vertices:
                            continue
                        face = self._site_face[site]
                    elif self.periodic:
                        face = BOTTOM_FACE if y < self.y_min else TOP_FACE
                    else:
                        face = OUTER_FACE
                    by_face.setdefault(face, set()).add(v)

        if self.periodic:
            order = [BOTTOM_FACE, TOP_FACE]
        else:
            order = [OUTER_FACE]
        order += [FaceId("hole", i) for i in range(len(self.hole_clusters))]

        components = []
        for face in order:
            members = by_face.get(face, set())
            if self.periodic and face in (BOTTOM_FACE, TOP_FACE):
                components.append(tuple(sorted(members, key=lambda v: (v.x, v.y))))
            else:
                components.append(_angular_cycle(members))
        return components

    # -------------------------------------------------------------------- cuts

    @cached_property
    def cut(self) -> FrozenSet[Edge]:
        """Seam edges from column seam-1 to column seam (cylinders only)."""
        if not self.periodic:
            return frozenset()
        left = self._wrap(self.seam - 1)
        right = self._wrap(self.seam)
        return frozenset(e for e in self.edges
                         if is_horizontal(e) and e[0].x == left and e[1].x == right)

    @cached_property
    def hole_cuts(self) -> List[FrozenSet[Edge]]:
        """Per hole: horizontal edges crossed by a vertical dual line from its topmost site to the top."""
        cuts = []
        for members in self.hole_clusters:
            top = max(members, key=lambda s: (s.y, -s.x))
            column = top.x
            crossed = []
            for y in range(top.y + 1, self.y_max + 1):
                a = VertexId(column, y)
                b = VertexId(self._wrap(column + 1), y)
                if (a, b) in self.edges:
                    crossed.append((a, b))
            cuts.append(frozenset(crossed))
        return cuts

    # ---------------------------------------------------------- derived flows

    @cached_property
    def balanced_flow(self) -> Dict[Edge, float]:
        """
        Reference flow for heights: the least-squares correction of the uniform
        1/4 flow to a flow with total 1 at every vertex.

        Equals 1/4 on edges far from the boundary of large graphs.
        """
        edges = self.sorted_edges
        if not edges:
            return {}
        index = {v: i for i, v in enumerate(sorted(self.vertices, key=VertexId.sort_key))}
        incidence = np.zeros((len(index), len(edges)))
        for j, (a, b) in enumerate(edges):
            incidence[index[a], j] = 1.0
            incidence[index[b], j] = 1.0
        base = np.full(len(edges), 0.25)
        deficit = 1.0 - incidence @ base
        correction, *_ = np.linalg.lstsq(incidence, deficit, rcond=None)
        flow = base + correction
        log_debug(f"Balanced flow on {len(edges)} edges, max correction {np.max(np.abs(correction)):.3g}")
        return {e: float(w) for e, w in zip(edges, flow)}

    def summary(self) -> str:
        return (f"{self.topology} width={self.width_period} rows={self.rows} "
                f"V={len(self.vertices)} E={len(self.edges)} holes={len(self.hole_clusters)}")


def _angular_cycle(members: Iterable[VertexId]) -> Tuple[VertexId, ...]:
    members = list(members)
    if not members:
        return ()
    cx = sum(v.x for v in members) / len(members)
    cy = sum(v.y for v in members) / len(members)
    return tuple(sorted(members, key=lambda v: (math.atan2(v.y - cy, v.x - cx), v.sort_key())))


def canonical_edge(g: DimerGraph, u: VertexId, v: VertexId) -> Optional[Edge]:
    """Return the stored orientation of the edge {u, v}, or None."""
    if (u, v) in g.edges:
        return (u, v)
    if (v, u) in g.edges:
        return (v, u)
    return None


def _make_graph(topology: str, width: int, y_min: int, rows: int, removed: Iterable[VertexId],
                **extra) -> DimerGraph:
    removed = frozenset(removed)
    sites = {VertexId(x, y) for x in range(width) for y in range(y_min, y_min + rows)}
    g = DimerGraph(topology=topology, width_period=width, rows=rows, y_min=y_min,
                   vertices=frozenset(sites - removed), removed=removed & frozenset(sites), **extra)
    for a, b in g.edges:
        if a.is_black == b.is_black:
            raise GraphConstructionError(f"Edge {a}-{b} joins two vertices of the same color")
    return g


def build_rectangle(cols: int, rows: int) -> DimerGraph:
    """
    Planar grid graph on {0..cols-1} x {0..rows-1}.

    Raises:
        GraphConstructionError: For non-positive sizes.
        UnmatchableGraphError: For an odd number of vertices.
    """
    if cols < 1 or rows < 1:
        raise GraphConstructionError(f"Rectangle sizes must be >= 1, got {cols}x{rows}")
    if (cols * rows) % 2:
        raise UnmatchableGraphError(f"Rectangle {cols}x{rows} has an odd number of vertices ({cols * rows})")
    return _make_graph(LatticeConstants.PLANAR_RECTANGLE, cols, 0, rows, ())


def _hole_sites(hole: Sequence[int]) -> FrozenSet[VertexId]:
    x0, y0, w, h = hole
    return frozenset(VertexId(x, y) for x in range(x0, x0 + w) for y in range(y0, y0 + h))


def build_multiholed(cols: int, rows: int, holes: Sequence[Sequence[int]]) -> DimerGraph:
    """
    Grid minus the interiors of rectangular holes [x0, y0, w, h].

    Each hole removes the sites x0..x0+w-1, y0..y0+h-1. Holes must keep a
    full ring of vertices to the outer rim and to each other.

    Raises:
        GraphConstructionError: For overlapping, touching or non-interior holes.
    """
    if cols < 1 or rows < 1:
        raise GraphConstructionError(f"Domain sizes must be >= 1, got {cols}x{rows}")
    hole_sets = []
    for hole in holes:
        if len(hole) != 4:
            raise GraphConstructionError(f"Hole must be [x0, y0, w, h], got {list(hole)}")
        x0, y0, w, h = (int(v) for v in hole)
        if w < 1 or h < 1:
            raise GraphConstructionError(f"Hole {list(hole)} has an empty interior")
        if x0 < 1 or y0 < 1 or x0 + w > cols - 1 or y0 + h > rows - 1:
            raise GraphConstructionError(f"Hole {list(hole)} touches the outer boundary of {cols}x{rows}")
        sites = _hole_sites((x0, y0, w, h))
        for other in hole_sets:
            grown = {VertexId(s.x + dx, s.y + dy) for s in other for dx in (-1, 0, 1) for dy in (-1, 0, 1)}
            if sites & grown:
                raise GraphConstructionError(f"Hole {list(hole)} overlaps or touches another hole")
        hole_sets.append(sites)
    removed = frozenset().union(*hole_sets) if hole_sets else frozenset()
    topology = LatticeConstants.PLANAR_MULTIHOLED if holes else LatticeConstants.PLANAR_RECTANGLE
    g = _make_graph(topology, cols, 0, rows, removed,
                    holes=tuple(tuple(int(v) for v in h) for h in holes))
    log_debug(f"Built multiholed domain: {g.summary()}")
    return g


def cylinder_height(k: int, tau: float) -> int:
    """Top row index 2*floor(k*tau/2) of the cylinder C_k."""
    return 2 * math.floor(k * tau / 2.0)


def build_cylinder(k: int, tau: float, style: str, seam: int = 0) -> DimerGraph:
    """
    Discrete cylinder of circumference 2k.

    DD keeps rows 0..2*floor(k*tau/2); ND removes the bottom row.

    Args:
        k: Half circumference (>= 2)
        tau: Modulus (> 0)
        style: "DD" or "ND"
        seam: Column x such that the cut sits between x-1 and x

    Raises:
        GraphConstructionError: For degenerate parameters.
    """
    if k < 2:
        raise GraphConstructionError(f"Cylinder needs k >= 2, got {k}")
    if not tau > 0:
        raise GraphConstructionError(f"Cylinder needs tau > 0, got {tau}")
    if style not in (LatticeConstants.STYLE_DD, LatticeConstants.STYLE_ND):
        raise GraphConstructionError(f"Unknown cylinder style {style!r}")
    top = cylinder_height(k, tau)
    if top < 2:
        raise GraphConstructionError(f"Degenerate height range: 2*floor({k}*{tau}/2) = {top}")
    y_min = 0 if style == LatticeConstants.STYLE_DD else 1
    g = _make_graph(LatticeConstants.CYLINDER, 2 * k, y_min, top - y_min + 1, (),
                    tau=float(tau), style=style, seam=seam % (2 * k))
    log_debug(f"Built cylinder: {g.summary()} style={style}")
    return g


def puncture(g: DimerGraph, victims: Sequence[VertexId]) -> DimerGraph:
    """
    Remove vertices (and their edges) from g.

    Raises:
        GraphConstructionError: If a victim is not a vertex of g.
        UnmatchableGraphError: If the color classes end up unequal.
    """
    victims = [v if isinstance(v, VertexId) else VertexId(*v) for v in victims]
    missing = [v for v in victims if v not in g.vertices]
    if missing:
        raise GraphConstructionError(f"Puncture victims not in graph: {missing}")
    g2 = _make_graph(g.topology, g.width_period, g.y_min, g.rows, g.removed | frozenset(victims),
                     tau=g.tau, style=g.style, seam=g.seam, holes=g.holes)
    if not g2.is_balanced:
        raise UnmatchableGraphError(
            f"Puncture leaves {len(g2.black_vertices)} black and {len(g2.white_vertices)} white vertices")
    return g2


def kenyon_punctures(g: DimerGraph) -> List[VertexId]:
    """
    One black vertex on the outer boundary plus one white vertex on each hole.

    Removing them keeps the graph balanced; every hole face then encloses an
    odd number of removed sites.
    """
    components = g.boundary_components
    outer = components[0]
    blacks = sorted((v for v in outer if v.is_black), key=VertexId.sort_key)
    if not blacks:
        raise GraphConstructionError("Outer boundary has no black vertex")
    victims = [blacks[0]]
    first_hole = 2 if g.periodic else 1
    for cycle in components[first_hole:]:
        whites = sorted((v for v in cycle if v.is_white), key=VertexId.sort_key)
        if not whites:
            raise GraphConstructionError("Hole boundary has no white vertex")
        victims.append(whites[0])
    return victims


def dual_path(g: DimerGraph, from_face: FaceId, to_face: FaceId,
              waypoints: Sequence[FaceId] = ()) -> List[DualEdge]:
    """
    Dual path from from_face to to_face through the given waypoints.

    Each leg is a breadth-first shortest path; ties break on the row-major
    order of the crossed edges, so the result is deterministic.

    Raises:
        GraphConstructionError: Unknown faces or faces in different dual components.
    """
    stops = [from_face, *waypoints, to_face]
    for face in stops:
        if face not in g.faces:
            raise GraphConstructionError(f"Unknown face {face}")
    path: List[DualEdge] = []
    for start, goal in zip(stops, stops[1:]):
        path.extend(_bfs_leg(g, start, goal))
    return path


def _bfs_leg(g: DimerGraph, start: FaceId, goal: FaceId) -> List[DualEdge]:
    if start == goal:
        return []
    previous: Dict[FaceId, DualEdge] = {}
    seen = {start}
    queue = deque([start])
    while queue:
        face = queue.popleft()
        for dual in g.dual_adjacency[face]:
            if dual.to_face in seen:
                continue
            seen.add(dual.to_face)
            previous[dual.to_face] = dual
            if dual.to_face == goal:
                leg = []
                node = goal
                while node != start:
                    step = previous[node]
                    leg.append(step)
                    node = step.from_face
                return leg[::-1]
            queue.append(dual.to_face)
    raise GraphConstructionError(f"Faces {start} and {goal} are not connected in the dual graph")


def crossing(g: DimerGraph, edge: Edge, reverse: bool = False) -> DualEdge:
    """Dual edge crossing a primal edge (below->above / left->right unless reversed)."""
    stored = canonical_edge(g, *edge)
    if stored is None:
        raise GraphConstructionError(f"{edge[0]}-{edge[1]} is not an edge")
    dual = g.dual_edges[stored]
    return dual.reversed() if reverse else dual
