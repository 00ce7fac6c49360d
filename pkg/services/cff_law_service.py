"""
CFF law service: twisted moments of a discrete Gaussian instanton law.
"""

from typing import Any, Dict, List, Optional, Sequence

import numpy as np

from constants import AppConstants, ToleranceConstants
from models.dgauss import (
    CylinderDomain,
    DiscreteGaussianLaw,
    MultiholedDomain,
    TwistVector,
    energy_matrix,
    twist_denominator,
    twisted_expectation,
    variance_test,
)
from models.errors import ConfigError, DegenerateTwistError, DimerCffError
from models.experiment import ExperimentConfig, SuiteReport
from utils.logging import log_info, log_warning


def domain_from_params(data: Dict[str, Any], tau: float):
    """CylinderDomain or MultiholedDomain from a 'domain' mapping."""
    kind = data.get("type", "cylinder")
    try:
        if kind == "cylinder":
            grid = data.get("grid")
            if grid is None:
                return CylinderDomain(float(data.get("tau", tau)))
            return CylinderDomain(float(data.get("tau", tau)), tuple(int(v) for v in grid))
        if kind == "multiholed":
            kwargs = {}
            if "resolution" in data:
                kwargs["resolution"] = int(data["resolution"])
            return MultiholedDomain(float(data["width"]), float(data["height"]),
                                    tuple(tuple(h) for h in data["holes"]), **kwargs)
    except (KeyError, TypeError, ValueError) as e:
        if isinstance(e, DimerCffError):
            raise
        raise ConfigError(f"Invalid domain {data!r}: {e}") from e
    raise ConfigError(f"Unknown domain type {kind!r}")


def law_from_params(params: Dict[str, Any], tau: float, truncation: Optional[int] = None) -> DiscreteGaussianLaw:
    """
    Build the law from 'Q', 'energies' or 'domain' (default: the cylinder of modulus tau).

    Raises:
        ConfigError: For malformed parameters.
        LawDefinitionError: If Q is not symmetric positive definite.
    """
    if "Q" in params:
        Q = np.atleast_2d(np.asarray(params["Q"], dtype=float))
        c0 = params.get("c0", [0.0] * Q.shape[0])
        return DiscreteGaussianLaw(np.asarray(c0, dtype=float), Q, truncation)
    if "energies" in params:
        energies = np.atleast_2d(np.asarray(params["energies"], dtype=float))
    else:
        energies = energy_matrix(domain_from_params(params.get("domain", {}), tau))
    c0 = params.get("c0", [0.0] * energies.shape[0])
    return DiscreteGaussianLaw.from_energy(energies, c0, truncation)


class CffLawService:
    """Service tabulating E_m[c^alpha] over twists and monomials."""

    def twists(self, params: Dict[str, Any], n: int) -> List[TwistVector]:
        raw = params.get("twists")
        if raw is None:
            return [TwistVector.zero(n), TwistVector((1,) * n)]
        return [TwistVector(tuple(t)) for t in raw]

    def moments(self, params: Dict[str, Any], n: int) -> List[Sequence[int]]:
        raw = params.get("moments")
        if raw is None:
            return [tuple(2 if i == j else 0 for j in range(n)) for i in range(n)] + [(0,) * n]
        return [tuple(int(v) for v in alpha) for alpha in raw]

    def run(self, cfg: ExperimentConfig) -> SuiteReport:
        """
        Run the law suite.

        Passes iff the untwisted law is normalized and every non-degenerate
        expectation is unchanged when the truncation box is doubled.
        """
        report = SuiteReport(AppConstants.SUITE_CFF_LAW)
        try:
            law = law_from_params(cfg.params, cfg.tau)
            wide = DiscreteGaussianLaw(law.c0, law.Q, 2 * law.truncation + 1)
            twists = self.twists(cfg.params, law.n)
            monomials = self.moments(cfg.params, law.n)
        except DimerCffError as e:
            report.add_row({"error": str(e)}, ok=False)
            return report

        normalization = abs(float(law.probabilities().sum()) - 1.0)
        normalized = normalization <= ToleranceConstants.PMF_NORMALIZATION
        report.add_row({"check": "normalization", "value": normalization, "ok": normalized},
                       normalization, normalized)

        for twist in twists:
            denominator = twist_denominator(law, twist)
            for alpha in monomials:
                row: Dict[str, Any] = {"twist": list(twist.m), "moment": list(alpha),
                                       "denominator": denominator.real}
                try:
                    value = twisted_expectation(law, twist, tuple(alpha))
                    robustness = abs(value - twisted_expectation(wide, twist, tuple(alpha)))
                    ok = robustness < ToleranceConstants.DEGENERATE_TWIST
                    row.update(value=value.real, imag=value.imag, truncation_diff=robustness, ok=ok)
                    report.add_row(row, robustness, ok)
                except DegenerateTwistError as e:
                    row.update(degenerate=True, error=str(e), ok=True)
                    report.add_row(row)
                    log_warning(f"Degenerate twist {list(twist.m)}: {e}")
                except DimerCffError as e:
                    row.update(error=str(e), ok=False)
                    report.add_row(row, ok=False)

        variances = {}
        for twist in twists:
            try:
                variance = variance_test(law, twist)
            except DegenerateTwistError:
                continue
            variances[str(list(twist.m))] = {"min_eigenvalue": variance.min_eigenvalue,
                                             "positive": variance.positive,
                                             "covariance": variance.covariance.tolist()}
        report.metadata.update({"n": law.n, "c0": law.c0.tolist(), "Q": law.Q.tolist(),
                                "truncation": law.truncation, "variance": variances})
        log_info(f"Law n={law.n} with {len(twists)} twists and {len(monomials)} moments: "
                 f"{'pass' if report.passed else 'fail'}")
        return report
