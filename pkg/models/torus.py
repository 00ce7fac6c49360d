"""
Continuum kernels on the double of the round cylinder.

The cylinder of circumference 1 and height tau / 2 is the strip
0 <= Im z <= tau / 2; its double is the torus C / (Z + i tau Z). Theta
functions with characteristics give the twisted Cauchy kernels, the
reflection z -> conj(z) glues the four components f^[s1 s2], and U_m is the
signed sum of their zero-diagonal determinants.
"""

import itertools
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np

from constants import LatticeConstants, NumericConstants, ToleranceConstants
from models.errors import BoundaryPointError, ConventionMismatchError, OddCharacteristicError, PoleError
from utils.logging import log_debug
from utils.numeric_utils import NumericUtils

Characteristic = Tuple[float, float]

ODD_CHARACTERISTIC: Characteristic = (0.5, 0.5)
EVEN_CHARACTERISTICS: Tuple[Characteristic, ...] = ((0.0, 0.0), (0.0, 0.5), (0.5, 0.0))

# (A-cycle z -> z + 1, B-cycle z -> z + tau) monodromy targets per boundary style
STYLE_MONODROMIES = {
    LatticeConstants.STYLE_DD: (-1, 1),
    LatticeConstants.STYLE_ND: (-1, -1),
}


@dataclass(frozen=True)
class Theta:
    """
    theta[a, b](z | tau) = sum_n exp(pi i (n + a)^2 tau + 2 pi i (n + a)(z + b)).

    The summation range adapts to Im z so the dropped terms are below
    exp(-THETA_LOG_CUTOFF) relative to the largest one.
    """
    tau: complex
    characteristic: Characteristic = (0.0, 0.0)

    def __post_init__(self):
        if not complex(self.tau).imag > 0:
            raise ValueError(f"Theta needs Im tau > 0, got {self.tau}")
        object.__setattr__(self, "tau", complex(self.tau))
        a, b = self.characteristic
        object.__setattr__(self, "characteristic", (float(a), float(b)))

    def _indices(self, y_low: float, y_high: float) -> np.ndarray:
        t = self.tau.imag
        a = self.characteristic[0]
        reach = math.sqrt(NumericConstants.THETA_LOG_CUTOFF / (math.pi * t)) + 2.0
        low = math.floor(-y_high / t - reach - a)
        high = math.ceil(-y_low / t + reach - a)
        return np.arange(low, high + 1, dtype=float)

    def _series(self, z, derivative: bool):
        z = np.asarray(z, dtype=complex)
        a, b = self.characteristic
        n = self._indices(float(np.min(z.imag)), float(np.max(z.imag))) + a
        exponent = 1j * math.pi * n * n * self.tau + 2j * math.pi * n * (z[..., None] + b)
        terms = np.exp(exponent)
        if derivative:
            terms = terms * (2j * math.pi * n)
        result = terms.sum(axis=-1)
        return complex(result) if result.ndim == 0 else result

    def __call__(self, z):
        return self._series(z, derivative=False)

    def derivative(self, z):
        return self._series(z, derivative=True)


def theta_eval(t: Theta, z) -> Union[complex, np.ndarray]:
    """Series value of t at z (scalar or array)."""
    return t(z)


def _nearest_lattice_offset(u: complex, tau: complex) -> complex:
    m = round(u.imag / tau.imag)
    rest = u - m * tau
    return rest - round(rest.real)


class TorusKernel:
    """
    Twisted Cauchy kernel S(z, w) = g(w - z) of an even characteristic, with

        g(u) = (1 / 2 pi i) theta[a, b](u) theta_1'(0) / (theta[a, b](0) theta_1(u)).
    """

    def __init__(self, tau: complex, characteristic: Characteristic):
        """
        Initialize a TorusKernel.

        Args:
            tau: Torus modulus (Im tau > 0)
            characteristic: Even characteristic (a, b) with a, b in {0, 1/2}

        Raises:
            OddCharacteristicError: For (1/2, 1/2), whose theta vanishes at 0.
        """
        characteristic = (float(characteristic[0]), float(characteristic[1]))
        if characteristic == ODD_CHARACTERISTIC:
            raise OddCharacteristicError("The odd characteristic (1/2, 1/2) has no Cauchy kernel")
        self.tau = complex(tau)
        self.characteristic = characteristic
        self.theta = Theta(self.tau, characteristic)
        self.theta_odd = Theta(self.tau, ODD_CHARACTERISTIC)
        self.theta_at_zero = self.theta(0.0)
        if abs(self.theta_at_zero) < ToleranceConstants.THETA_TAIL:
            raise OddCharacteristicError(f"theta{characteristic}(0) vanishes; no Cauchy kernel")

    @cached_property
    def theta_odd_prime(self) -> complex:
        """theta_1'(0)."""
        return self.theta_odd.derivative(0.0)

    def g(self, u: complex) -> complex:
        """
        Kernel as a function of the difference u = w - z.

        Raises:
            PoleError: If u is a lattice point.
        """
        u = complex(u)
        if abs(_nearest_lattice_offset(u, self.tau)) < ToleranceConstants.BOUNDARY_POINT:
            raise PoleError(f"Kernel evaluated at the lattice point {u}")
        return (self.theta(u) * self.theta_odd_prime
                / (NumericConstants.TWO_PI_I * self.theta_at_zero * self.theta_odd(u)))

    def szego(self, z: complex, w: complex) -> complex:
        return self.g(complex(w) - complex(z))


def szego(kernel: TorusKernel, z: complex, w: complex) -> complex:
    """S(z, w); raises PoleError when z = w modulo the lattice."""
    return kernel.szego(z, w)


def szego_lattice_sum(kernel: TorusKernel, z: complex, w: complex) -> complex:
    """
    Independent evaluation of S(z, w) for characteristics with a = 0:

        g(u) = (1 / 2 pi i) sum_n eps^n pi / sin(pi (u - n tau)),

    eps = -1 for b = 0 and +1 for b = 1/2 (the B-cycle monodromy).
    """
    if kernel.characteristic[0] != 0.0:
        raise ValueError("The lattice-sum route covers characteristics with a = 0")
    u = complex(w) - complex(z)
    if abs(_nearest_lattice_offset(u, kernel.tau)) < ToleranceConstants.BOUNDARY_POINT:
        raise PoleError(f"Kernel evaluated at the lattice point {u}")
    eps = -1.0 if kernel.characteristic[1] == 0.0 else 1.0
    t = kernel.tau.imag
    center = u.imag / t
    reach = NumericConstants.LATTICE_SUM_LOG_CUTOFF / (math.pi * t) + 2.0
    n = np.arange(math.floor(center - reach), math.ceil(center + reach) + 1)
    terms = (eps ** np.abs(n)) * math.pi / np.sin(math.pi * (u - n * kernel.tau))
    return complex(terms.sum() / NumericConstants.TWO_PI_I)


def measure_monodromies(kernel: TorusKernel, samples: Optional[Sequence[complex]] = None) -> Tuple[int, int]:
    """
    Multipliers of S(z, w) under w -> w + 1 and w -> w + tau, measured numerically.

    Raises:
        ConventionMismatchError: If a multiplier is not constant and equal to +1 or -1.
    """
    tau = kernel.tau
    if samples is None:
        samples = [0.13 + 0.21j * tau.imag, 0.37 + 0.05j * tau.imag, 0.71 - 0.17j * tau.imag,
                   0.52 + 0.33j * tau.imag, 0.91 - 0.29j * tau.imag]
    measured = []
    for shift in (1.0, tau):
        ratios = np.array([kernel.g(u + shift) / kernel.g(u) for u in samples])
        value = ratios.mean()
        if np.max(np.abs(ratios - value)) > ToleranceConstants.MONODROMY:
            raise ConventionMismatchError(f"Multiplier for shift {shift} is not constant: {ratios}")
        sign = round(value.real)
        if sign not in (-1, 1) or abs(value - sign) > ToleranceConstants.MONODROMY:
            raise ConventionMismatchError(f"Multiplier {value} for shift {shift} is not +-1")
        measured.append(int(sign))
    return measured[0], measured[1]


def select_characteristic(style: str, tau: float) -> Characteristic:
    """
    The even characteristic whose kernel has the boundary style's monodromy pair.

    Args:
        style: "DD" or "ND"
        tau: Cylinder modulus (the torus is C / (Z + i tau Z))

    Raises:
        ConventionMismatchError: If not exactly one even characteristic matches.
    """
    if style not in STYLE_MONODROMIES:
        raise ValueError(f"Unknown boundary style {style!r}")
    target = STYLE_MONODROMIES[style]
    matches = [ch for ch in EVEN_CHARACTERISTICS
               if measure_monodromies(TorusKernel(1j * tau, ch)) == target]
    if len(matches) != 1:
        raise ConventionMismatchError(f"{len(matches)} characteristics give monodromies {target} for {style}")
    log_debug(f"Style {style} at tau={tau}: characteristic {matches[0]}")
    return matches[0]


# --------------------------------------------------------------- reflections

def reflect_bottom(z: complex) -> complex:
    """Reflection fixing Im z = 0."""
    return complex(z).conjugate()


def reflect_top(z: complex, tau: float) -> complex:
    """Reflection fixing Im z = tau / 2."""
    return complex(z).conjugate() + 1j * tau


# ----------------------------------------------------------------- components

@dataclass
class CylinderComponents:
    """
    The four glued components on the strip 0 <= Im z <= tau / 2:

        f^[++](p, q) = f(p, q)           f^[+-](p, q) = -f(p, conj q)
        f^[-+](p, q) = f(conj p, q)      f^[--](p, q) = -f(conj p, conj q)

    with f(p, q) = S(q, p) for the kernel of the style's characteristic.
    """
    tau: float
    style: str
    kernel: TorusKernel = field(init=False, repr=False)

    def __post_init__(self):
        if not self.tau > 0:
            raise ValueError(f"Cylinder modulus must be > 0, got {self.tau}")
        self.kernel = TorusKernel(1j * self.tau, select_characteristic(self.style, self.tau))

    def f(self, p: complex, q: complex) -> complex:
        return self.kernel.szego(q, p)

    def component(self, s1: int, s2: int, p: complex, q: complex) -> complex:
        a = p if s1 > 0 else reflect_bottom(p)
        b = q if s2 > 0 else reflect_bottom(q)
        value = self.f(a, b)
        return value if s2 > 0 else -value


def components(c: CylinderComponents, s1: int, s2: int, p: complex, q: complex) -> complex:
    """f^[s1 s2](p, q) for s1, s2 in {+1, -1}."""
    if s1 not in (1, -1) or s2 not in (1, -1):
        raise ValueError(f"Signs must be +1 or -1, got {s1}, {s2}")
    return c.component(s1, s2, p, q)


def u_m(c: CylinderComponents, points: Sequence[complex],
        tangents: Optional[Sequence[complex]] = None) -> float:
    """
    U_m(p_1..p_m) = sum_s det[1_{i != j} f^[s_i s_j](p_i, p_j)] prod_j t_j^[s_j].

    t^[+] = t and t^[-] = conj(t) for the unit tangent t_j at p_j. The default is
    i (the upward direction, matching vertical dual steps); pass tangents [1] * m
    for the bare dz coefficients.

    Raises:
        PoleError: For coincident points.
    """
    points = [complex(p) for p in points]
    m = len(points)
    if len(set(points)) != m:
        raise PoleError("U_m needs distinct points")
    tangents = [1j] * m if tangents is None else [complex(t) for t in tangents]
    if len(tangents) != m:
        raise ValueError(f"{len(tangents)} tangents for {m} points")
    if m == 0:
        return 1.0

    cache = {}

    def entry(i: int, j: int, si: int, sj: int) -> complex:
        key = (i, j, si, sj)
        if key not in cache:
            cache[key] = c.component(si, sj, points[i], points[j])
        return cache[key]

    total = 0.0j
    for signs in itertools.product((1, -1), repeat=m):
        matrix = np.zeros((m, m), dtype=complex)
        for i in range(m):
            for j in range(m):
                if i != j:
                    matrix[i, j] = entry(i, j, signs[i], signs[j])
        factor = np.prod([t if s > 0 else t.conjugate() for t, s in zip(tangents, signs)])
        total += np.linalg.det(matrix) * factor
    if abs(total.imag) > ToleranceConstants.U_M_IMAG * max(1.0, abs(total)):
        raise ValueError(f"U_{m} has imaginary part {total.imag:.3g}")
    return float(total.real)


def segment_integral_u2(c: CylinderComponents, first: Tuple[complex, complex], second: Tuple[complex, complex],
                        nodes: int = NumericConstants.QUADRATURE_NODES) -> float:
    """
    Gauss-Legendre double integral of U_2 over two oriented segments, with the
    segment directions as tangents.
    """
    (s1, e1), (s2, e2) = first, second
    t1 = (e1 - s1) / abs(e1 - s1)
    t2 = (e2 - s2) / abs(e2 - s2)
    p1, w1 = NumericUtils.gauss_legendre_segment(s1, e1, nodes)
    p2, w2 = NumericUtils.gauss_legendre_segment(s2, e2, nodes)
    total = 0.0
    for a, wa in zip(p1, w1):
        for b, wb in zip(p2, w2):
            total += wa * wb * u_m(c, [a, b], [t1, t2])
    return float(total)


def residue_check(kernel: TorusKernel, z: complex,
                  steps: Sequence[float] = NumericConstants.RESIDUE_STEPS) -> complex:
    """
    Richardson estimate of lim (w - z) S(z, w); (w - z) S is even in w - z,
    so the error is second order in the step.
    """
    coarse_step, fine_step = steps
    coarse = coarse_step * kernel.szego(z, z + coarse_step)
    fine = fine_step * kernel.szego(z, z + fine_step)
    return NumericUtils.richardson(coarse, fine, coarse_step / fine_step, 2)


# --------------------------------------------------------- Abel-Jacobi shift

@dataclass(frozen=True)
class AbelJacobiShift:
    """A- and B-period shifts and the normalized height shift Re(p2 - p1)."""
    a_shift: float
    b_shift: float
    height_shift: float


def abel_jacobi_shift(tau: float, p1: complex, p2: complex) -> AbelJacobiShift:
    """
    (pi Re(p2 - p1), pi Im(p2 - p1) / tau) for boundary points of the strip.

    Raises:
        BoundaryPointError: If a point is not on Im z = 0 or Im z = tau / 2.
    """
    for p in (p1, p2):
        y = complex(p).imag
        if min(abs(y), abs(y - tau / 2.0)) > ToleranceConstants.BOUNDARY_POINT:
            raise BoundaryPointError(f"{p} is not on the boundary of the cylinder of modulus {tau}")
    delta = complex(p2) - complex(p1)
    return AbelJacobiShift(math.pi * delta.real, math.pi * delta.imag / tau, delta.real)


def continuum_u2_grid(c: CylinderComponents, points: Sequence[complex]) -> List[Tuple[complex, complex, float]]:
    """U_2 on every ordered pair of distinct points."""
    return [(p, q, u_m(c, [p, q])) for p in points for q in points if p != q]
