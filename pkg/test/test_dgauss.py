"""
Tests for discrete Gaussian instanton laws, twisted expectations and the
harmonic-measure energy matrices.
"""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from models.dgauss import (
    CylinderDomain,
    DiscreteGaussianLaw,
    MultiholedDomain,
    TwistVector,
    cylinder_law,
    energy_matrix,
    lattice_moments,
    twist_denominator,
    twisted_expectation,
    variance_test,
)
from models.errors import DegenerateTwistError, GraphConstructionError, LawDefinitionError

# theta_3(0 | i) = pi^(1/4) / Gamma(3/4)
THETA_AT_I = 1.0864348112133080


def test_pmf_at_zero():
    law = DiscreteGaussianLaw(np.array([0.0]), np.array([[math.pi]]))
    assert law.pmf([0.0]) == pytest.approx(1.0 / THETA_AT_I, rel=1e-12)
    assert law.pmf([1.0]) == pytest.approx(math.exp(-math.pi) / THETA_AT_I, rel=1e-12)


def test_from_energy_scales_by_half_pi():
    law = DiscreteGaussianLaw.from_energy(np.array([[2.0]]), [0.0])
    assert law.Q[0, 0] == pytest.approx(math.pi)


def test_invalid_laws():
    with pytest.raises(LawDefinitionError):
        DiscreteGaussianLaw(np.array([0.0]), np.array([[-1.0]]))
    with pytest.raises(LawDefinitionError):
        DiscreteGaussianLaw(np.zeros(2), np.array([[1.0, 0.5], [0.0, 1.0]]))
    with pytest.raises(LawDefinitionError):
        DiscreteGaussianLaw(np.zeros(2), np.array([[1.0]]))


def test_pmf_rejects_off_lattice_atoms():
    law = DiscreteGaussianLaw(np.array([0.5]), np.array([[1.0]]))
    with pytest.raises(LawDefinitionError):
        law.pmf([0.3])
    assert law.pmf([0.5]) == pytest.approx(law.pmf([-0.5]))


def test_twist_vector_validation():
    assert TwistVector.zero(3).m == (0, 0, 0)
    assert TwistVector((1.0, 2)).m == (1, 2)
    with pytest.raises(LawDefinitionError):
        TwistVector((0.5,))


def test_degenerate_twist_on_half_integer_lattice():
    """Atoms 1/2 + k and -1/2 - k pair up with opposite phases."""
    law = cylinder_law(1.0, 0.5)
    assert abs(twist_denominator(law, TwistVector((1,)))) < 1e-12
    with pytest.raises(DegenerateTwistError):
        twisted_expectation(law, TwistVector((1,)))


def test_untwisted_expectation_of_one():
    law = cylinder_law(2.0, 0.0)
    assert twisted_expectation(law, TwistVector.zero(1)) == pytest.approx(1.0)


def test_monomial_degree_limit():
    law = cylinder_law(1.0, 0.0)
    with pytest.raises(LawDefinitionError):
        twisted_expectation(law, TwistVector.zero(1), (5,))


def test_symmetric_law_has_zero_mean():
    for c0 in (0.0, 0.5):
        law = cylinder_law(1.0, c0)
        assert twisted_expectation(law, TwistVector.zero(1), (1,)).real == pytest.approx(0.0, abs=1e-12)


def test_polynomial_moment_spec():
    law = cylinder_law(1.0, 0.0)
    zero = TwistVector.zero(1)
    combined = twisted_expectation(law, zero, {(2,): 3.0, (0,): 1.0})
    assert combined == pytest.approx(3.0 * twisted_expectation(law, zero, (2,)) + 1.0)


@settings(max_examples=30, deadline=None)
@given(st.floats(min_value=0.3, max_value=5.0), st.floats(min_value=-1.0, max_value=1.0))
def test_law_properties(q, c0):
    """Normalization, integer-shift invariance and even twists acting trivially."""
    law = DiscreteGaussianLaw(np.array([c0]), np.array([[q]]))
    assert law.probabilities().sum() == pytest.approx(1.0, abs=1e-12)
    shifted = DiscreteGaussianLaw(np.array([c0 + 1.0]), np.array([[q]]))
    for u in (c0, c0 + 1.0, c0 - 2.0):
        assert shifted.pmf([u]) == pytest.approx(law.pmf([u]), rel=1e-10)
    even = twisted_expectation(law, TwistVector((2,)), (2,))
    plain = twisted_expectation(law, TwistVector((0,)), (2,))
    assert even == pytest.approx(plain, rel=1e-12)


@settings(max_examples=20, deadline=None)
@given(st.floats(min_value=0.3, max_value=5.0), st.floats(min_value=-0.5, max_value=0.5))
def test_truncation_is_converged(q, c0):
    law = DiscreteGaussianLaw(np.array([c0]), np.array([[q]]))
    wide = DiscreteGaussianLaw(np.array([c0]), np.array([[q]]), 2 * law.truncation + 1)
    for alpha in [(0,), (1,), (2,), (4,)]:
        assert abs(twisted_expectation(law, TwistVector.zero(1), alpha)
                   - twisted_expectation(wide, TwistVector.zero(1), alpha)) < 1e-12


def test_two_dimensional_law():
    Q = np.array([[2.0, 0.5], [0.5, 1.5]])
    law = DiscreteGaussianLaw(np.array([0.0, 0.5]), Q)
    assert law.n == 2
    assert law.probabilities().sum() == pytest.approx(1.0)
    report = variance_test(law, TwistVector.zero(2))
    assert report.positive
    assert report.covariance.shape == (2, 2)
    assert np.allclose(report.covariance, report.covariance.T)


def test_untwisted_variance_is_positive():
    report = variance_test(cylinder_law(1.0, 0.0), TwistVector.zero(1))
    assert report.positive
    assert report.variance > 0


def test_lattice_moments_on_half_integers():
    m2, m4 = lattice_moments(cylinder_law(1.0, 0.5))
    assert m2 > 0.25
    assert m4 > 0.0625


def test_cylinder_energy():
    for tau, expected in [(1.0, 2.0), (2.0, 1.0)]:
        energies = energy_matrix(CylinderDomain(tau, (16, 8)))
        assert energies.shape == (1, 1)
        assert energies[0, 0] == pytest.approx(expected, rel=1e-8)


def test_cylinder_domain_validation():
    with pytest.raises(GraphConstructionError):
        CylinderDomain(0.0)
    with pytest.raises(GraphConstructionError):
        CylinderDomain(1.0, (2, 8))


def test_multiholed_energy_matrix():
    domain = MultiholedDomain(4.0, 4.0, [(1.0, 1.0, 1.0, 1.0), (2.5, 2.5, 0.5, 0.5)], resolution=8)
    energies = energy_matrix(domain)
    assert energies.shape == (2, 2)
    assert np.allclose(energies, energies.T)
    assert energies[0, 0] > 0 and energies[1, 1] > 0
    assert energies[0, 1] < 0
    assert np.linalg.eigvalsh(energies).min() > 0


def test_multiholed_domain_validation():
    with pytest.raises(GraphConstructionError):
        MultiholedDomain(4.0, 4.0, [])
    with pytest.raises(GraphConstructionError):
        MultiholedDomain(4.0, 4.0, [(0.0, 1.0, 1.0, 1.0)])
