"""
Discrete Gaussian instanton laws and harmonic-measure energy matrices.

A law lives on the shifted lattice c0 + Z^n with P[c = u] proportional to
exp(-u^T Q u). Twisted expectations reweight it by exp(pi i m.(c - c0)),
which is (-1)^(m.k) on the atom c0 + k.
"""

import itertools
import math
from dataclasses import dataclass, field
from typing import Dict, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import spsolve

from constants import NumericConstants, ToleranceConstants
from models.errors import ConvergenceError, DegenerateTwistError, GraphConstructionError, LawDefinitionError
from utils.logging import log_debug

Monomial = Tuple[int, ...]
MomentSpec = Union[None, Monomial, Mapping[Monomial, complex]]

MAX_TRUNCATION = 400


@dataclass(frozen=True)
class TwistVector:
    """Integer twist m."""
    m: Tuple[int, ...]

    def __post_init__(self):
        try:
            values = tuple(int(v) for v in self.m)
        except (TypeError, ValueError) as e:
            raise LawDefinitionError(f"Twist must be an integer vector, got {self.m!r}") from e
        if any(float(a) != float(b) for a, b in zip(values, self.m)):
            raise LawDefinitionError(f"Twist must have integer entries, got {self.m!r}")
        object.__setattr__(self, "m", values)

    @classmethod
    def zero(cls, n: int) -> "TwistVector":
        return cls((0,) * n)


def _tail_bound(lam: float, truncation: int, n: int) -> float:
    """Bound on the weight outside the box |k_i| <= N, every atom at distance >= N + 1/2 per axis."""
    r = truncation + 0.5
    one_axis = 2.0 * math.exp(-lam * r * r) / (1.0 - math.exp(-2.0 * lam * r))
    full_axis = 1.0 + 2.0 * math.exp(-lam / 4.0) / (1.0 - math.exp(-lam))
    return n * one_axis * full_axis ** (n - 1)


@dataclass(frozen=True, eq=False)
class DiscreteGaussianLaw:
    """
    Law on c0 + Z^n with weights exp(-u^T Q u), summed over a truncated box.

    The box is centered at the atom nearest the origin; when truncation is
    not given it is chosen so the dropped tail is below ToleranceConstants.TRUNCATION_TAIL.
    """
    c0: np.ndarray
    Q: np.ndarray
    truncation: Optional[int] = None
    atoms: np.ndarray = field(init=False, repr=False, compare=False)
    log_weights: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        c0 = np.atleast_1d(np.asarray(self.c0, dtype=float))
        try:
            Q = np.atleast_2d(np.asarray(self.Q, dtype=float))
        except (TypeError, ValueError) as e:
            raise LawDefinitionError(f"Q must be a real matrix, got {self.Q!r}") from e
        n = c0.shape[0]
        if Q.shape != (n, n):
            raise LawDefinitionError(f"Q has shape {Q.shape}, expected {(n, n)}")
        if not np.allclose(Q, Q.T, atol=ToleranceConstants.ENERGY_SYMMETRY):
            raise LawDefinitionError("Q must be symmetric")
        Q = 0.5 * (Q + Q.T)
        eigenvalues = np.linalg.eigvalsh(Q)
        if eigenvalues.min() <= 0:
            raise LawDefinitionError(f"Q must be positive definite, minimal eigenvalue {eigenvalues.min():.3g}")
        object.__setattr__(self, "c0", c0)
        object.__setattr__(self, "Q", Q)

        truncation = self.truncation
        if truncation is None:
            truncation = 1
            # tail weight times the largest monomial on it
            while (_tail_bound(eigenvalues.min(), truncation, n)
                   * (truncation + 1.5) ** NumericConstants.MAX_MONOMIAL_DEGREE > ToleranceConstants.TRUNCATION_TAIL):
                truncation += 1
                if truncation > MAX_TRUNCATION:
                    raise LawDefinitionError(f"Q too flat for truncation (minimal eigenvalue {eigenvalues.min():.3g})")
        elif truncation < 0:
            raise LawDefinitionError(f"Truncation must be >= 0, got {truncation}")
        object.__setattr__(self, "truncation", int(truncation))

        center = c0 - np.round(c0)
        offsets = np.array(list(itertools.product(range(-truncation, truncation + 1), repeat=n)), dtype=float)
        atoms = center + offsets
        object.__setattr__(self, "atoms", atoms)
        object.__setattr__(self, "log_weights", -np.einsum("ai,ij,aj->a", atoms, Q, atoms))
        log_debug(f"Discrete Gaussian law n={n} truncation={truncation} atoms={len(atoms)}")

    @classmethod
    def from_energy(cls, energies: np.ndarray, c0: Sequence[float], truncation: Optional[int] = None
                    ) -> "DiscreteGaussianLaw":
        """Law with Q = (pi / 2) * energies."""
        return cls(np.asarray(c0, dtype=float), 0.5 * math.pi * np.atleast_2d(np.asarray(energies, dtype=float)),
                   truncation)

    @property
    def n(self) -> int:
        return self.c0.shape[0]

    def _relative_weights(self) -> np.ndarray:
        return np.exp(self.log_weights - self.log_weights.max())

    def _phases(self, twist: TwistVector) -> np.ndarray:
        if len(twist.m) != self.n:
            raise LawDefinitionError(f"Twist has {len(twist.m)} entries, law has n={self.n}")
        lattice = np.rint(self.atoms - self.c0).astype(np.int64)
        parity = (lattice @ np.asarray(twist.m, dtype=np.int64)) % 2
        return np.where(parity == 0, 1.0, -1.0)

    def probabilities(self) -> np.ndarray:
        weights = self._relative_weights()
        return weights / weights.sum()

    def pmf(self, u: Sequence[float]) -> float:
        """
        P[c = u].

        Raises:
            LawDefinitionError: If u is not in c0 + Z^n.
        """
        u = np.atleast_1d(np.asarray(u, dtype=float))
        if u.shape != self.c0.shape:
            raise LawDefinitionError(f"Atom has {u.shape[0]} entries, law has n={self.n}")
        offset = u - self.c0
        if np.max(np.abs(offset - np.round(offset))) > 1e-9:
            raise LawDefinitionError(f"{u.tolist()} is not in c0 + Z^n for c0 = {self.c0.tolist()}")
        top = self.log_weights.max()
        log_weight = -float(u @ self.Q @ u)
        return float(math.exp(log_weight - top) / self._relative_weights().sum())

    def support(self) -> Dict[Tuple[float, ...], float]:
        """Atom -> probability over the truncated box (atoms rounded to 12 digits)."""
        return {tuple(round(float(v), 12) for v in atom): float(p)
                for atom, p in zip(self.atoms, self.probabilities())}


def _monomial_values(atoms: np.ndarray, alpha: Monomial) -> np.ndarray:
    alpha = tuple(int(a) for a in alpha)
    if len(alpha) != atoms.shape[1]:
        raise LawDefinitionError(f"Monomial {alpha} has wrong length for n={atoms.shape[1]}")
    if any(a < 0 for a in alpha) or sum(alpha) > NumericConstants.MAX_MONOMIAL_DEGREE:
        raise LawDefinitionError(f"Monomial {alpha} outside total degree 0..{NumericConstants.MAX_MONOMIAL_DEGREE}")
    return np.prod(atoms ** np.asarray(alpha, dtype=float), axis=1)


def _evaluate(atoms: np.ndarray, f: MomentSpec) -> np.ndarray:
    if f is None:
        return np.ones(len(atoms))
    if isinstance(f, Mapping):
        total = np.zeros(len(atoms), dtype=complex)
        for alpha, coefficient in f.items():
            total = total + coefficient * _monomial_values(atoms, alpha)
        return total
    return _monomial_values(atoms, f)


def twist_denominator(law: DiscreteGaussianLaw, twist: TwistVector) -> complex:
    """E[exp(pi i m.(c - c0))]."""
    weights = law._relative_weights()
    return complex(np.sum(weights * law._phases(twist)) / weights.sum())


def twisted_expectation(law: DiscreteGaussianLaw, twist: TwistVector, f: MomentSpec = None) -> complex:
    """
    E_m[f(c)] = E[f(c) exp(pi i m.(c - c0))] / E[exp(pi i m.(c - c0))].

    Args:
        law: Instanton law
        twist: Integer twist m
        f: None (the constant 1), a monomial exponent tuple, or a mapping monomial -> coefficient

    Raises:
        DegenerateTwistError: If the denominator vanishes.
        LawDefinitionError: For malformed monomials.
    """
    weights = law._relative_weights() * law._phases(twist)
    denominator = weights.sum() / law._relative_weights().sum()
    if abs(denominator) <= ToleranceConstants.DEGENERATE_TWIST:
        raise DegenerateTwistError(
            f"E[exp(pi i m.(c - c0))] = {denominator:.3g} vanishes for m = {list(twist.m)}")
    return complex(np.sum(weights * _evaluate(law.atoms, f)) / weights.sum())


@dataclass(frozen=True, eq=False)
class VarianceReport:
    """Twisted covariance of c, its minimal eigenvalue and the positivity verdict."""
    covariance: np.ndarray
    min_eigenvalue: float
    positive: bool

    @property
    def variance(self) -> float:
        """E_m[c^2] - E_m[c]^2 for n = 1 (first diagonal entry otherwise)."""
        return float(self.covariance[0, 0])


def variance_test(law: DiscreteGaussianLaw, twist: TwistVector) -> VarianceReport:
    """
    Covariance E_m[c_i c_j] - E_m[c_i] E_m[c_j] under the twisted law.

    Reports data only; a negative eigenvalue is a finding, not an error.
    """
    n = law.n
    mean = np.zeros(n)
    second = np.zeros((n, n))
    for i in range(n):
        alpha = tuple(1 if t == i else 0 for t in range(n))
        mean[i] = twisted_expectation(law, twist, alpha).real
    for i in range(n):
        for j in range(i, n):
            alpha = [0] * n
            alpha[i] += 1
            alpha[j] += 1
            second[i, j] = second[j, i] = twisted_expectation(law, twist, tuple(alpha)).real
    covariance = second - np.outer(mean, mean)
    min_eigenvalue = float(np.linalg.eigvalsh(covariance).min())
    return VarianceReport(covariance, min_eigenvalue, min_eigenvalue > 0)


# ---------------------------------------------------------- energy matrices

@dataclass(frozen=True)
class CylinderDomain:
    """
    Flat cylinder of circumference 1 and height tau / 2.

    The inner boundary is the bottom circle; grid is (points around, intervals up).
    """
    tau: float
    grid: Tuple[int, int] = NumericConstants.DEFAULT_CYLINDER_GRID

    def __post_init__(self):
        if not self.tau > 0:
            raise GraphConstructionError(f"Cylinder modulus must be > 0, got {self.tau}")
        nx, ny = self.grid
        if not (3 <= nx <= NumericConstants.MAX_GRID_POINTS and 2 <= ny <= NumericConstants.MAX_GRID_POINTS):
            raise GraphConstructionError(f"Grid {self.grid} outside 3..{NumericConstants.MAX_GRID_POINTS}")


@dataclass(frozen=True)
class MultiholedDomain:
    """
    Rectangle [0, width] x [0, height] minus closed rectangular holes (x0, y0, w, h).

    Grid spacing is 1 / resolution; hole corners must sit on grid nodes.
    """
    width: float
    height: float
    holes: Tuple[Tuple[float, float, float, float], ...]
    resolution: int = NumericConstants.DEFAULT_DOMAIN_RESOLUTION

    def __post_init__(self):
        object.__setattr__(self, "holes", tuple(tuple(float(v) for v in h) for h in self.holes))
        if not self.holes:
            raise GraphConstructionError("A multiholed domain needs at least one hole")
        for x0, y0, w, h in self.holes:
            if w <= 0 or h <= 0 or x0 <= 0 or y0 <= 0 or x0 + w >= self.width or y0 + h >= self.height:
                raise GraphConstructionError(f"Hole {(x0, y0, w, h)} is not strictly inside the domain")
        if max(self.width, self.height) * self.resolution > NumericConstants.MAX_GRID_POINTS:
            raise GraphConstructionError("Grid exceeds the maximal number of points per side")


def _solve_dirichlet(laplacian: sp.csr_matrix, rhs: np.ndarray) -> np.ndarray:
    solution = spsolve(laplacian.tocsc(), rhs)
    norm = max(1.0, float(np.linalg.norm(rhs)))
    residual = float(np.linalg.norm(laplacian @ solution - rhs)) / norm
    if residual > ToleranceConstants.LINEAR_RESIDUAL:
        raise ConvergenceError(f"Harmonic measure solve left residual {residual:.3g}", residual)
    return solution


def _cylinder_energy(domain: CylinderDomain) -> np.ndarray:
    nx, ny = domain.grid
    hx = 1.0 / nx
    hy = 0.5 * domain.tau / ny
    ax, ay = hy / hx, hx / hy
    # unknowns: rows j = 1..ny-1; row 0 is the inner boundary (1), row ny the outer (0)
    interior = ny - 1
    size = nx * interior

    def index(i: int, j: int) -> int:
        return (j - 1) * nx + (i % nx)

    rows, cols, vals = [], [], []
    rhs = np.zeros(size)
    for j in range(1, ny):
        for i in range(nx):
            p = index(i, j)
            rows.append(p)
            cols.append(p)
            vals.append(2 * ax + 2 * ay)
            for di in (-1, 1):
                rows.append(p)
                cols.append(index(i + di, j))
                vals.append(-ax)
            for dj in (-1, 1):
                if j + dj == 0:
                    rhs[p] += ay
                elif j + dj < ny:
                    rows.append(p)
                    cols.append(index(i, j + dj))
                    vals.append(-ay)
    laplacian = sp.csr_matrix((vals, (rows, cols)), shape=(size, size))
    inner = _solve_dirichlet(laplacian, rhs).reshape(interior, nx)
    u = np.vstack([np.ones((1, nx)), inner, np.zeros((1, nx))])
    energy = ax * np.sum((np.roll(u, -1, axis=1) - u) ** 2) + ay * np.sum(np.diff(u, axis=0) ** 2)
    log_debug(f"Cylinder tau={domain.tau} grid={domain.grid}: energy {energy:.10g}")
    return np.array([[energy]])


def _multiholed_energy(domain: MultiholedDomain) -> np.ndarray:
    r = domain.resolution
    nx = int(round(domain.width * r)) + 1
    ny = int(round(domain.height * r)) + 1
    label = np.full((nx, ny), -1, dtype=int)
    label[0, :] = label[-1, :] = label[:, 0] = label[:, -1] = 0
    xs = np.arange(nx) / r
    ys = np.arange(ny) / r
    for index, (x0, y0, w, h) in enumerate(domain.holes, start=1):
        inside_x = (xs >= x0 - 1e-9) & (xs <= x0 + w + 1e-9)
        inside_y = (ys >= y0 - 1e-9) & (ys <= y0 + h + 1e-9)
        for value in (x0 * r, (x0 + w) * r, y0 * r, (y0 + h) * r):
            if abs(value - round(value)) > 1e-9:
                raise GraphConstructionError(f"Hole {(x0, y0, w, h)} is not aligned with resolution {r}")
        block = np.outer(inside_x, inside_y)
        if np.any(label[block] > 0):
            raise GraphConstructionError(f"Hole {(x0, y0, w, h)} overlaps another hole")
        label[block] = index

    free = np.argwhere(label < 0)
    position = {(int(i), int(j)): p for p, (i, j) in enumerate(free)}
    n_holes = len(domain.holes)
    rows, cols, vals = [], [], []
    rhs = np.zeros((len(free), n_holes))
    for p, (i, j) in enumerate(free):
        rows.append(p)
        cols.append(p)
        vals.append(4.0)
        for di, dj in ((-1, 0), (1, 0), (0, -1), (0, 1)):
            q = (int(i + di), int(j + dj))
            if q in position:
                rows.append(p)
                cols.append(position[q])
                vals.append(-1.0)
            elif label[q] > 0:
                rhs[p, label[q] - 1] += 1.0
    laplacian = sp.csr_matrix((vals, (rows, cols)), shape=(len(free), len(free)))

    measures = []
    for hole in range(n_holes):
        u = np.where(label == hole + 1, 1.0, 0.0)
        if len(free):
            u[free[:, 0], free[:, 1]] = _solve_dirichlet(laplacian, rhs[:, hole])
        measures.append(u)
    energies = np.zeros((n_holes, n_holes))
    for a in range(n_holes):
        for b in range(a, n_holes):
            da_x, db_x = np.diff(measures[a], axis=0), np.diff(measures[b], axis=0)
            da_y, db_y = np.diff(measures[a], axis=1), np.diff(measures[b], axis=1)
            energies[a, b] = energies[b, a] = np.sum(da_x * db_x) + np.sum(da_y * db_y)
    log_debug(f"Multiholed energy matrix:\n{energies}")
    return energies


def energy_matrix(domain: Union[CylinderDomain, MultiholedDomain]) -> np.ndarray:
    """
    Dirichlet energies int grad hm_i . grad hm_j of the inner boundary harmonic measures.

    Raises:
        ConvergenceError: If a linear solve leaves a residual above tolerance.
    """
    if isinstance(domain, CylinderDomain):
        energies = _cylinder_energy(domain)
    elif isinstance(domain, MultiholedDomain):
        energies = _multiholed_energy(domain)
    else:
        raise TypeError(f"Unsupported domain {type(domain).__name__}")
    if not np.allclose(energies, energies.T, atol=ToleranceConstants.ENERGY_SYMMETRY):
        raise ConvergenceError("Energy matrix is not symmetric")
    return energies


def cylinder_law(tau: float, c0: float) -> DiscreteGaussianLaw:
    """Instanton law of the cylinder with exact energy 2 / tau."""
    return DiscreteGaussianLaw.from_energy(np.array([[2.0 / tau]]), [c0])


def lattice_moments(law: DiscreteGaussianLaw, orders: Sequence[int] = (2, 4)) -> List[float]:
    """Centered moments of c_1 under the untwisted law."""
    probabilities = law.probabilities()
    values = law.atoms[:, 0]
    mean = float(np.sum(probabilities * values))
    return [float(np.sum(probabilities * (values - mean) ** k)) for k in orders]
