"""
Models package for the dimer-cff laboratory.
Contains lattice graphs, Kasteleyn systems, matchings, heights and continuum laws.
"""

from .lattice_graph import DimerGraph, build_cylinder, build_multiholed, build_rectangle
from .kasteleyn import KasteleynSystem, assemble
from .matchings import Matching, TransferCounter, enumerate_matchings
from .height import GapDistribution, KenyonMomentRequest, gap_distribution, kenyon_moment, path_moment
from .dgauss import DiscreteGaussianLaw, TwistVector, twisted_expectation
from .torus import CylinderComponents, TorusKernel, u_m

__all__ = [
    'DimerGraph', 'build_cylinder', 'build_multiholed', 'build_rectangle',
    'KasteleynSystem', 'assemble',
    'Matching', 'TransferCounter', 'enumerate_matchings',
    'GapDistribution', 'KenyonMomentRequest', 'gap_distribution', 'kenyon_moment', 'path_moment',
    'DiscreteGaussianLaw', 'TwistVector', 'twisted_expectation',
    'CylinderComponents', 'TorusKernel', 'u_m',
]
