"""
Numeric helper functions shared by the models.
"""

import math
from typing import Tuple

import numpy as np


class NumericUtils:
    """Utility class for small numerical routines."""

    @staticmethod
    def log_det_from_lu(lu: np.ndarray, piv: np.ndarray) -> Tuple[float, complex]:
        """
        Determinant of a matrix from its LU factorization as (log|det|, phase).

        Args:
            lu: Packed LU factors as returned by scipy.linalg.lu_factor
            piv: Pivot indices as returned by scipy.linalg.lu_factor

        Returns:
            Tuple of (log of the absolute value, unit complex phase);
            (-inf, 0) for an exactly zero pivot
        """
        diag = np.diag(lu)
        moduli = np.abs(diag)
        if np.any(moduli == 0.0):
            return -math.inf, 0.0j
        swaps = int(np.count_nonzero(piv != np.arange(len(piv))))
        phase = complex(np.prod(diag / moduli))
        if swaps % 2:
            phase = -phase
        return float(np.sum(np.log(moduli))), phase

    @staticmethod
    def gauss_legendre_segment(start: complex, end: complex, nodes: int) -> Tuple[np.ndarray, np.ndarray]:
        """
        Gauss-Legendre nodes and weights on the straight segment start -> end.

        Weights are scaled by the segment length, so sum(weights * f(points))
        approximates the arc-length integral.

        Args:
            start: Segment start point (complex plane)
            end: Segment end point
            nodes: Number of quadrature nodes

        Returns:
            Tuple of (points, weights)
        """
        x, w = np.polynomial.legendre.leggauss(nodes)
        half = (end - start) / 2.0
        points = start + half + half * x
        return points, w * abs(half)

    @staticmethod
    def richardson(coarse: complex, fine: complex, ratio: float, order: int) -> complex:
        """
        Richardson extrapolation of two samples of a quantity with error O(h^order).

        Args:
            coarse: Value at step h
            fine: Value at step h / ratio
            ratio: Step ratio (> 1)
            order: Leading error order

        Returns:
            Extrapolated value
        """
        factor = ratio ** order
        return (factor * fine - coarse) / (factor - 1.0)

    @staticmethod
    def is_close_to_lattice(values: np.ndarray, tolerance: float) -> bool:
        """Check that every entry of values is within tolerance of an integer."""
        values = np.asarray(values, dtype=float)
        return bool(np.all(np.abs(values - np.round(values)) <= tolerance))

    @staticmethod
    def fractional_offset(values: np.ndarray) -> float:
        """
        Common fractional part of values that lie on one translate of Z.

        Returns the offset in [0, 1); the caller checks that all values share it.
        """
        values = np.asarray(values, dtype=float)
        if values.size == 0:
            return 0.0
        offset = float(values[0] - math.floor(values[0]))
        return 0.0 if offset > 1.0 - 1e-12 else offset
