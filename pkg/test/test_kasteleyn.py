"""
Tests for Kasteleyn systems: determinants count matchings, inverse entries give
edge probabilities, and gauge changes leave probabilities unchanged.
"""

import cmath
import math

import numpy as np
import pytest

from models.errors import RectangularMatrixError, SingularSystemError
from models.kasteleyn import (
    assemble,
    counting_monodromy,
    default_hole_monodromies,
    inverse_entry,
    matching_count_from_det,
    partition_function,
    seam_factor,
)
from models.lattice_graph import (
    VertexId,
    build_cylinder,
    build_multiholed,
    build_rectangle,
    kenyon_punctures,
    puncture,
)
from models.matchings import all_matchings, count_matchings, edge_frequencies, transfer_count


def test_rectangle_counts():
    """|det K| equals the number of domino tilings."""
    cases = [
        # (cols, rows, tilings)
        (2, 2, 2),
        (2, 3, 3),
        (2, 4, 5),
        (2, 5, 8),
        (4, 4, 36),
        (6, 6, 6728),
        (8, 8, 12988816),
    ]
    for cols, rows, tilings in cases:
        ks = assemble(build_rectangle(cols, rows))
        assert matching_count_from_det(ks) == tilings


def test_cylinder_counts():
    cases = [
        # (k, style, matchings)
        (2, "DD", 32),
        (2, "ND", 9),
    ]
    for k, style, matchings in cases:
        g = build_cylinder(k, 1.0, style)
        assert matching_count_from_det(assemble(g)) == matchings
        assert count_matchings(g) == matchings


def test_cylinder_counts_agree_with_transfer():
    for k in (3, 4):
        for style in ("DD", "ND"):
            g = build_cylinder(k, 1.0, style)
            assert matching_count_from_det(assemble(g)) == transfer_count(g)


def test_seam_position_does_not_change_count():
    counts = {matching_count_from_det(assemble(build_cylinder(3, 1.0, "DD", seam=s))) for s in range(6)}
    assert len(counts) == 1


def test_counting_monodromy():
    assert counting_monodromy(build_rectangle(2, 2)) == 1
    assert counting_monodromy(build_cylinder(2, 1.0, "DD")) == -1


def test_seam_factor_includes_gauge_sign():
    assert seam_factor(build_cylinder(2, 1.0, "DD"), -1) == -1
    assert seam_factor(build_cylinder(3, 1.0, "DD"), -1) == 1


def test_odd_cylinder_counts_only_with_negative_monodromy():
    """Seam weights are monodromy * (-1)^k, so k=3 needs monodromy -1."""
    g = build_cylinder(3, 1.0, "DD")
    assert matching_count_from_det(assemble(g, monodromy=-1)) == 108
    assert count_matchings(g) == transfer_count(g) == 108
    assert assemble(g, monodromy=1).abs_det() == pytest.approx(0.0, abs=1e-6)


def test_holed_domain_count_agrees_with_transfer():
    g = build_multiholed(6, 6, [[2, 2, 2, 2]])
    assert default_hole_monodromies(g) == [1.0]
    assert matching_count_from_det(assemble(g)) == transfer_count(g)


def test_punctured_holed_domain_count_agrees_with_transfer():
    g = build_multiholed(8, 8, [[3, 3, 2, 2]])
    g = puncture(g, kenyon_punctures(g))
    assert default_hole_monodromies(g) == [-1.0]
    assert matching_count_from_det(assemble(g)) == transfer_count(g)


def test_unbalanced_graph_is_rejected():
    g = build_multiholed(5, 5, [])
    with pytest.raises(RectangularMatrixError):
        assemble(g)


def test_edge_probabilities_on_square():
    ks = assemble(build_rectangle(2, 2))
    for edge in ks.graph.edges:
        assert ks.edge_probability(edge) == pytest.approx(0.5, abs=1e-12)


@pytest.mark.parametrize("graph", [
    build_rectangle(4, 4),
    build_rectangle(3, 4),
    build_cylinder(2, 1.0, "DD"),
    build_cylinder(2, 1.0, "ND"),
    build_cylinder(3, 1.0, "ND"),
])
def test_edge_probabilities_match_enumeration(graph):
    ks = assemble(graph)
    frequencies = edge_frequencies(graph, all_matchings(graph))
    for edge, frequency in frequencies.items():
        assert ks.edge_probability(edge) == pytest.approx(frequency, abs=1e-9)


def test_probabilities_sum_to_one_at_each_vertex():
    g = build_rectangle(6, 4)
    ks = assemble(g)
    totals = {v: 0.0 for v in g.vertices}
    for a, b in g.edges:
        p = ks.edge_probability((a, b))
        totals[a] += p
        totals[b] += p
    assert all(t == pytest.approx(1.0, abs=1e-9) for t in totals.values())


def test_inverse_is_inverse():
    g = build_rectangle(4, 4)
    ks = assemble(g)
    K = np.zeros((len(g.white_vertices), len(g.black_vertices)), dtype=complex)
    for i, w in enumerate(g.white_vertices):
        for j, b in enumerate(g.black_vertices):
            K[i, j] = ks.weight(w, b)
    assert np.allclose(ks.inverse_matrix() @ K, np.eye(len(g.black_vertices)), atol=1e-12)


def test_inverse_entry_on_the_square():
    g = build_rectangle(2, 2)
    ks = assemble(g)
    b, w = VertexId(0, 0), VertexId(1, 0)
    assert inverse_entry(ks, b, w) * ks.weight(w, b) == pytest.approx(0.5)
    with pytest.raises(ValueError):
        inverse_entry(ks, w, b)


def test_inverse_entry_of_singular_system():
    g = build_rectangle(2, 2)
    corner = VertexId(0, 0)
    dead = {(corner, VertexId(1, 0)): 0.0, (corner, VertexId(0, 1)): 0.0}
    ks = assemble(g, weight_overrides=dead)
    assert ks.is_singular
    with pytest.raises(SingularSystemError):
        inverse_entry(ks, corner, VertexId(1, 0))


def test_global_phase_keeps_probabilities():
    g = build_rectangle(4, 4)
    plain = assemble(g)
    rotated = assemble(g, global_phase=cmath.exp(0.7j))
    for edge in g.edges:
        assert rotated.edge_probability(edge) == pytest.approx(plain.edge_probability(edge), abs=1e-12)
    assert rotated.log_abs_det == pytest.approx(plain.log_abs_det, abs=1e-12)


def test_conjugate_keeps_probabilities():
    g = build_cylinder(2, 1.0, "DD")
    ks = assemble(g)
    conj = ks.conjugate()
    for edge in g.edges:
        assert conj.edge_probability(edge) == pytest.approx(ks.edge_probability(edge), abs=1e-12)


def test_partition_function_reports_log_and_phase():
    log_abs, phase = partition_function(assemble(build_rectangle(4, 4)))
    assert log_abs == pytest.approx(math.log(36), abs=1e-12)
    assert abs(phase) == pytest.approx(1.0, abs=1e-12)


def test_weight_override_breaks_count():
    g = build_rectangle(4, 4)
    edge = (VertexId(1, 1), VertexId(2, 1))
    broken = assemble(g, weight_overrides={edge: -1.0})
    assert matching_count_from_det(broken) != 36
