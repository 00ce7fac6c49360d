"""
Tests for height functions, instanton gaps and Kenyon moments.
"""

import cmath
from fractions import Fraction
from itertools import combinations, islice, permutations

import numpy as np
import pytest

from models.errors import DisjointnessError, GraphConstructionError
from models.height import (
    KENYON_SIGN,
    KenyonMomentRequest,
    calibrate_kenyon_sign,
    centered_gap_values,
    column_path,
    empirical_path_moment,
    gap_distribution,
    height_field,
    instanton_number,
    kenyon_moment,
    path_moment,
    row_loop,
    vertical_segment,
)
from models.kasteleyn import assemble
from models.lattice_graph import (
    BOTTOM_FACE,
    OUTER_FACE,
    TOP_FACE,
    FaceId,
    VertexId,
    build_cylinder,
    build_multiholed,
    build_rectangle,
    crossing,
    kenyon_punctures,
    puncture,
)
from models.matchings import all_matchings, check_disjoint, empirical_moment, enumerate_matchings


def disjoint_pairs(g):
    edges = g.sorted_edges
    for e1, e2 in combinations(edges, 2):
        if not {*e1} & {*e2}:
            yield [e1, e2]


@pytest.mark.parametrize("graph", [
    build_rectangle(4, 4),
    build_cylinder(2, 1.0, "DD"),
    build_multiholed(6, 6, [[2, 2, 2, 2]]),
])
def test_heights_are_path_independent(graph):
    """height_field raises on any inconsistency, so building it is the check."""
    for matching in islice(enumerate_matchings(graph), 500):
        field = height_field(graph, matching)
        assert len(field.values) == len(graph.faces)


def test_heights_on_punctured_holed_domain():
    g = build_multiholed(6, 6, [[2, 2, 2, 2]])
    g = puncture(g, kenyon_punctures(g))
    for matching in islice(enumerate_matchings(g), 200):
        height_field(g, matching)


def test_cylinder_winding_vanishes():
    g = build_cylinder(3, 1.0, "ND")
    for matching in all_matchings(g):
        assert height_field(g, matching).winding == pytest.approx(0.0, abs=1e-9)
        assert instanton_number(g, matching).winding == pytest.approx(0.0, abs=1e-9)


def test_column_path_joins_boundaries():
    g = build_cylinder(3, 1.0, "DD")
    path = column_path(g, 2)
    assert path[0].from_face == BOTTOM_FACE
    assert path[-1].to_face == TOP_FACE
    assert len(path) == g.rows


def test_gap_equals_height_difference():
    g = build_cylinder(2, 1.0, "DD")
    for matching in all_matchings(g):
        field = height_field(g, matching)
        gap = instanton_number(g, matching).gap
        assert field.difference(BOTTOM_FACE, TOP_FACE) == pytest.approx(gap, abs=1e-9)


def test_paths_need_a_cylinder():
    g = build_rectangle(4, 4)
    with pytest.raises(GraphConstructionError):
        column_path(g)
    with pytest.raises(GraphConstructionError):
        row_loop(g, 0)


def test_gap_offsets():
    """Centered gaps sit on Z for ND cylinders and on 1/2 + Z for DD cylinders."""
    cases = [
        # (k, style, matchings, offset)
        (2, "ND", 9, Fraction(0)),
        (2, "DD", 32, Fraction(1, 2)),
        (3, "ND", None, Fraction(0)),
        (3, "DD", None, Fraction(1, 2)),
        (4, "DD", None, Fraction(1, 2)),
    ]
    for k, style, matchings, offset in cases:
        law = gap_distribution(build_cylinder(k, 1.0, style))
        if matchings is not None:
            assert law.count == matchings
        assert law.support_offset == offset
        assert sum(law.probabilities) == 1
        assert law.moment(1) == pytest.approx(0.0, abs=1e-12)


def test_gap_law_is_symmetric():
    law = gap_distribution(build_cylinder(3, 1.0, "DD"))
    table = dict(zip(law.values, law.probabilities))
    for value, probability in table.items():
        assert table[-value] == probability


def test_gap_law_matches_enumeration():
    g = build_cylinder(2, 1.0, "DD")
    values = centered_gap_values(g, all_matchings(g))
    law = gap_distribution(g)
    assert np.mean(values ** 2) == pytest.approx(law.moment(2), abs=1e-12)
    assert np.mean(values ** 4) == pytest.approx(law.moment(4), abs=1e-12)


def test_calibrated_sign():
    assert calibrate_kenyon_sign() == KENYON_SIGN == 1


@pytest.mark.parametrize("graph", [
    build_rectangle(4, 4),
    build_rectangle(3, 4),
    build_cylinder(2, 1.0, "DD"),
    build_cylinder(3, 1.0, "ND"),
])
def test_kenyon_pairs_match_enumeration(graph):
    ks = assemble(graph)
    matchings = all_matchings(graph)
    for edges in disjoint_pairs(graph):
        req = KenyonMomentRequest.from_edges(graph, edges)
        expected = empirical_moment(graph, req.dual_edges, matchings)
        assert kenyon_moment(ks, req) == pytest.approx(expected, abs=1e-9)


def test_kenyon_triples_match_enumeration():
    g = build_rectangle(4, 4)
    ks = assemble(g)
    matchings = all_matchings(g)
    edges = [(VertexId(0, 0), VertexId(1, 0)), (VertexId(2, 1), VertexId(2, 2)), (VertexId(1, 3), VertexId(2, 3))]
    check_disjoint(edges)
    req = KenyonMomentRequest.from_edges(g, edges)
    assert kenyon_moment(ks, req) == pytest.approx(empirical_moment(g, req.dual_edges, matchings), abs=1e-9)


def test_kenyon_single_edge_is_centered():
    g = build_rectangle(4, 4)
    ks = assemble(g)
    for edge in g.sorted_edges:
        assert kenyon_moment(ks, KenyonMomentRequest.from_edges(g, [edge])) == pytest.approx(0.0, abs=1e-12)


def test_empty_request_is_one():
    ks = assemble(build_rectangle(2, 2))
    assert kenyon_moment(ks, KenyonMomentRequest(())) == 1.0


def test_request_rejects_shared_vertices():
    g = build_rectangle(4, 4)
    edges = [(VertexId(0, 0), VertexId(1, 0)), (VertexId(1, 0), VertexId(1, 1))]
    with pytest.raises(DisjointnessError):
        KenyonMomentRequest.from_edges(g, edges)


def test_path_moment_matches_enumeration():
    g = build_cylinder(3, 1.0, "ND")
    ks = assemble(g)
    paths = [vertical_segment(g, 0, 1, 2), vertical_segment(g, 3, 1, 2)]
    expected = empirical_path_moment(g, paths, all_matchings(g))
    assert path_moment(ks, paths) == pytest.approx(expected, abs=1e-9)


def test_path_moment_rejects_touching_paths():
    g = build_cylinder(3, 1.0, "DD")
    ks = assemble(g)
    with pytest.raises(DisjointnessError):
        path_moment(ks, [vertical_segment(g, 0, 0, 1), vertical_segment(g, 1, 0, 1)])


def test_square_heights_by_hand():
    """On the 2x2 square every edge carries flow 1/2; the centre face sits at +-1/2."""
    g = build_rectangle(2, 2)
    bottom = (VertexId(0, 0), VertexId(1, 0))
    cases = {True: 0.5, False: -0.5}  # bottom edge matched -> height of the centre face
    for matching in all_matchings(g):
        field = height_field(g, matching)
        assert field[OUTER_FACE] == 0.0
        assert field[FaceId("cell", 0, 0)] == pytest.approx(cases[bottom in matching], abs=1e-12)


@pytest.mark.parametrize("k, style", [(2, "DD"), (2, "ND"), (3, "DD"), (3, "ND")])
def test_kenyon_moments_ignore_seam_and_global_phase(k, style):
    reference = build_cylinder(k, 1.0, style)
    edge_sets = list(disjoint_pairs(reference))[::7]
    ks = assemble(reference)
    expected = [kenyon_moment(ks, KenyonMomentRequest.from_edges(reference, edges)) for edges in edge_sets]

    variants = [assemble(build_cylinder(k, 1.0, style, seam=s)) for s in range(1, 2 * k)]
    variants.append(assemble(reference, global_phase=cmath.exp(0.3j)))
    for variant in variants:
        for edges, value in zip(edge_sets, expected):
            req = KenyonMomentRequest.from_edges(variant.graph, edges)
            assert kenyon_moment(variant, req) == pytest.approx(value, abs=1e-12)


def horizontal_crossings(g, x, rows):
    return [crossing(g, (VertexId(x, y), VertexId(x + 1, y))) for y in rows]


def test_path_moment_is_homotopy_invariant():
    g = build_rectangle(6, 4)
    ks = assemble(g)
    left = horizontal_crossings(g, 0, [1, 2])
    straight = horizontal_crossings(g, 3, [1, 2])
    detour = [
        crossing(g, (VertexId(4, 0), VertexId(4, 1))),
        *horizontal_crossings(g, 4, [1, 2]),
        crossing(g, (VertexId(4, 2), VertexId(4, 3)), reverse=True),
    ]
    for path in (straight, detour):
        assert path[0].from_face == FaceId("cell", 3, 0)
        assert path[-1].to_face == FaceId("cell", 3, 2)

    value = path_moment(ks, [left, straight])
    assert path_moment(ks, [left, detour]) == pytest.approx(value, abs=1e-9)
    assert empirical_path_moment(g, [left, detour], all_matchings(g)) == pytest.approx(value, abs=1e-9)


def test_reversed_path_negates_the_moment():
    g = build_rectangle(6, 4)
    ks = assemble(g)
    left = horizontal_crossings(g, 0, [1, 2])
    right = horizontal_crossings(g, 3, [1, 2])
    backwards = [d.reversed() for d in reversed(right)]
    assert path_moment(ks, [left, backwards]) == pytest.approx(-path_moment(ks, [left, right]), abs=1e-12)


def test_empirical_moment_ignores_order():
    g = build_rectangle(4, 4)
    matchings = all_matchings(g)
    edges = [(VertexId(0, 0), VertexId(1, 0)), (VertexId(2, 1), VertexId(2, 2)), (VertexId(1, 3), VertexId(2, 3))]
    duals = [crossing(g, e) for e in edges]
    value = empirical_moment(g, duals, matchings)
    for order in permutations(duals):
        assert empirical_moment(g, list(order), matchings) == pytest.approx(value, abs=1e-12)


@pytest.mark.parametrize("style", ["DD", "ND"])
def test_gap_law_ignores_column_and_seam(style):
    g = build_cylinder(3, 1.0, style)
    reference = gap_distribution(g)
    laws = [gap_distribution(g, x) for x in range(1, 6)]
    laws += [gap_distribution(build_cylinder(3, 1.0, style, seam=s)) for s in range(1, 6)]
    for law in laws:
        assert law.values == reference.values
        assert law.probabilities == reference.probabilities


def test_gap_of_each_matching_ignores_column():
    g = build_cylinder(2, 1.0, "DD")
    for matching in all_matchings(g):
        gaps = [instanton_number(g, matching, x).gap for x in range(4)]
        assert gaps == pytest.approx([gaps[0]] * 4, abs=1e-9)
