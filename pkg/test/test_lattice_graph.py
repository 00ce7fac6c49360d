"""
Tests for lattice graph construction: rectangles, holed domains, cylinders,
punctures, dual faces and the balanced reference flow.
"""

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from models.errors import GraphConstructionError, UnmatchableGraphError
from models.lattice_graph import (
    BOTTOM_FACE,
    OUTER_FACE,
    TOP_FACE,
    VertexId,
    build_cylinder,
    build_multiholed,
    build_rectangle,
    FaceId,
    canonical_edge,
    cylinder_height,
    dual_path,
    kenyon_punctures,
    puncture,
    white_black,
)


def test_rectangle_sizes():
    """Vertex and edge counts of small rectangles."""
    cases = [
        # (cols, rows, vertices, edges)
        (2, 2, 4, 4),
        (4, 3, 12, 17),
        (6, 6, 36, 60),
    ]
    for cols, rows, vertices, edges in cases:
        g = build_rectangle(cols, rows)
        assert len(g.vertices) == vertices
        assert len(g.edges) == edges
        assert g.is_balanced


def test_odd_rectangle_is_unmatchable():
    with pytest.raises(UnmatchableGraphError):
        build_rectangle(3, 3)


def test_rectangle_rejects_empty_sizes():
    with pytest.raises(GraphConstructionError):
        build_rectangle(0, 4)


def test_vertex_colors():
    assert VertexId(0, 0).is_black
    assert VertexId(1, 0).is_white
    assert VertexId(1, 1).is_black


def test_white_black_orders_endpoints():
    edge = (VertexId(0, 0), VertexId(1, 0))
    assert white_black(edge) == (VertexId(1, 0), VertexId(0, 0))
    edge = (VertexId(1, 0), VertexId(1, 1))
    assert white_black(edge) == (VertexId(1, 0), VertexId(1, 1))


def test_canonical_edge_accepts_both_orientations():
    g = build_rectangle(2, 2)
    a, b = VertexId(0, 0), VertexId(0, 1)
    assert canonical_edge(g, a, b) == (a, b)
    assert canonical_edge(g, b, a) == (a, b)
    assert canonical_edge(g, VertexId(0, 0), VertexId(1, 1)) is None


def test_cylinder_height_range():
    assert cylinder_height(2, 1.0) == 2
    assert cylinder_height(3, 1.0) == 2
    assert cylinder_height(4, 1.0) == 4
    assert cylinder_height(8, 1.0) == 8


def test_cylinder_styles():
    dd = build_cylinder(2, 1.0, "DD")
    nd = build_cylinder(2, 1.0, "ND")
    assert (dd.y_min, dd.y_max, dd.width_period) == (0, 2, 4)
    assert (nd.y_min, nd.y_max) == (1, 2)
    assert len(dd.vertices) == 12
    assert len(dd.edges) == 20
    assert len(nd.vertices) == 8
    assert len(nd.edges) == 12
    assert dd.k == 2


def test_cylinder_rejects_degenerate_parameters():
    with pytest.raises(GraphConstructionError):
        build_cylinder(1, 1.0, "DD")
    with pytest.raises(GraphConstructionError):
        build_cylinder(2, 0.5, "DD")
    with pytest.raises(GraphConstructionError):
        build_cylinder(2, 1.0, "NN")


def test_cylinder_seam_edges():
    g = build_cylinder(2, 1.0, "DD")
    assert len(g.cut) == 3
    for a, b in g.cut:
        assert (a.x, b.x) == (3, 0)
        assert a.y == b.y
    moved = build_cylinder(2, 1.0, "DD", seam=2)
    assert {(a.x, b.x) for a, b in moved.cut} == {(1, 2)}


def test_cylinder_boundary_faces():
    g = build_cylinder(3, 1.0, "DD")
    assert BOTTOM_FACE in g.faces
    assert TOP_FACE in g.faces
    assert OUTER_FACE not in g.faces
    bottom, top = g.boundary_components[:2]
    assert all(v.y == g.y_min for v in bottom)
    assert all(v.y == g.y_max for v in top)
    assert len(bottom) == 6


def test_holed_domain():
    g = build_multiholed(10, 10, [[4, 4, 2, 2]])
    assert len(g.vertices) == 96
    assert len(g.hole_clusters) == 1
    assert len(g.boundary_components) == 2
    assert len(g.hole_cuts) == 1
    # the cut runs from the topmost hole site to the top row
    assert all(a.y > 5 for a, _ in g.hole_cuts[0])


def test_holes_must_be_interior():
    with pytest.raises(GraphConstructionError):
        build_multiholed(6, 6, [[0, 2, 2, 2]])
    with pytest.raises(GraphConstructionError):
        build_multiholed(10, 10, [[2, 2, 2, 2], [4, 2, 2, 2]])


def test_kenyon_punctures_keep_balance():
    g = build_multiholed(10, 10, [[4, 4, 2, 2]])
    victims = kenyon_punctures(g)
    assert len(victims) == 2
    assert victims[0].is_black
    assert victims[1].is_white
    punctured = puncture(g, victims)
    assert punctured.is_balanced
    assert len(punctured.vertices) == 94


def test_puncture_rejects_unknown_vertex():
    g = build_rectangle(4, 4)
    with pytest.raises(GraphConstructionError):
        puncture(g, [VertexId(9, 9)])


def test_unbalanced_puncture():
    g = build_rectangle(4, 4)
    with pytest.raises(UnmatchableGraphError):
        puncture(g, [VertexId(0, 0)])


def test_dual_edges_cross_their_edges():
    g = build_rectangle(4, 4)
    for edge, dual in g.dual_edges.items():
        assert dual.crossed_edge == edge
        assert dual.sign in (1, -1)
        assert dual.reversed().sign == -dual.sign


@settings(max_examples=25, deadline=None)
@given(st.integers(min_value=1, max_value=6), st.integers(min_value=1, max_value=6))
def test_balanced_flow_has_unit_total(cols, rows):
    """The reference flow sums to one at every vertex."""
    if (cols * rows) % 2:
        cols += 1
    g = build_rectangle(cols, rows)
    flow = g.balanced_flow
    totals = {v: 0.0 for v in g.vertices}
    for (a, b), value in flow.items():
        totals[a] += value
        totals[b] += value
    assert all(abs(t - 1.0) < 1e-9 for t in totals.values())


def test_balanced_flow_on_cylinder():
    g = build_cylinder(3, 1.0, "ND")
    totals = {v: 0.0 for v in g.vertices}
    for (a, b), value in g.balanced_flow.items():
        totals[a] += value
        totals[b] += value
    assert all(abs(t - 1.0) < 1e-9 for t in totals.values())


@pytest.mark.parametrize("graph", [
    build_rectangle(4, 4),
    build_multiholed(10, 10, [[4, 4, 2, 2]]),
    build_cylinder(2, 1.0, "DD"),
    build_cylinder(3, 1.0, "ND"),
])
def test_euler_characteristic(graph):
    """Boundary and hole faces count once each, so V - E + F = 2 throughout."""
    assert len(graph.vertices) - len(graph.edges) + len(graph.faces) == 2


def test_dual_path_basics():
    g = build_rectangle(4, 4)
    assert dual_path(g, FaceId("cell", 1, 1), FaceId("cell", 1, 1)) == []
    (step,) = dual_path(g, FaceId("cell", 0, 0), FaceId("cell", 1, 0))
    assert step.crossed_edge == (VertexId(1, 0), VertexId(1, 1))
    with pytest.raises(GraphConstructionError):
        dual_path(g, FaceId("cell", 0, 0), FaceId("cell", 7, 7))


def test_dual_path_across_cylinder():
    g = build_cylinder(2, 1.0, "DD")
    path = dual_path(g, BOTTOM_FACE, TOP_FACE)
    assert len(path) == g.rows
    assert path[0].from_face == BOTTOM_FACE
    assert path[-1].to_face == TOP_FACE
    for step, after in zip(path, path[1:]):
        assert step.to_face == after.from_face


def test_dual_path_through_waypoints():
    g = build_rectangle(6, 6)
    path = dual_path(g, FaceId("cell", 0, 0), FaceId("cell", 0, 2), [FaceId("cell", 2, 2)])
    assert FaceId("cell", 2, 2) in {step.to_face for step in path}
    assert len(path) == 6
