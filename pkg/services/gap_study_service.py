"""
Gap study service: exact instanton gap laws on discrete cylinders versus the
continuum discrete Gaussian law.
"""

from collections import defaultdict
from fractions import Fraction
from typing import Any, Dict, List, Optional

import numpy as np

from constants import AppConstants, LatticeConstants
from models.dgauss import DiscreteGaussianLaw, cylinder_law, lattice_moments
from models.errors import DimerCffError
from models.experiment import ExperimentConfig, SuiteReport
from models.height import GapDistribution, gap_distribution
from models.lattice_graph import build_cylinder
from services.work_pool import WorkPool
from utils.logging import log_info, log_timed, log_warning

# Support offset of the centered gap law per boundary style
EXPECTED_OFFSET = {
    LatticeConstants.STYLE_DD: Fraction(1, 2),
    LatticeConstants.STYLE_ND: Fraction(0),
}

CONTINUUM_SHIFT = {
    LatticeConstants.STYLE_DD: 0.5,
    LatticeConstants.STYLE_ND: 0.0,
}


def fit_distance(law: GapDistribution, continuum: DiscreteGaussianLaw) -> float:
    """
    Total variation distance between the centered gap law and the centered
    continuum law, binned on half-integers.

    Laws on different translates of Z share no bin and sit at distance 1.
    """
    probabilities = continuum.probabilities()
    values = continuum.atoms[:, 0]
    centered = values - float(np.sum(probabilities * values))
    bins: Dict[int, float] = defaultdict(float)
    for value, p in zip(centered, probabilities):
        bins[int(round(2 * value))] -= float(p)
    for value, p in zip(law.values, law.probabilities):
        bins[round(2 * value)] += float(p)
    return 0.5 * sum(abs(mass) for mass in bins.values())


class GapStudyService:
    """Service computing exact gap laws for a sweep of cylinder sizes."""

    def __init__(self, pool: Optional[WorkPool] = None):
        """
        Initialize GapStudyService.

        Args:
            pool: Work pool for (style, k) cases
        """
        self.pool = pool or WorkPool()

    @staticmethod
    def styles(cfg: ExperimentConfig) -> List[str]:
        if cfg.style == "both":
            return [LatticeConstants.STYLE_DD, LatticeConstants.STYLE_ND]
        return [cfg.style]

    def run_case(self, style: str, k: int, cfg: ExperimentConfig) -> Dict[str, Any]:
        """
        Gap law on C_k of one style, compared with the continuum law.

        Returns:
            Row with offsets, moments and errors; 'ok' is False on failure
        """
        row: Dict[str, Any] = {"style": style, "k": k, "tau": cfg.tau}
        try:
            graph = build_cylinder(k, cfg.tau, style)
            with log_timed(f"Gap law {style} k={k}"):
                law = gap_distribution(graph)
            offset = law.support_offset
        except DimerCffError as e:
            row.update(ok=False, error=str(e))
            return row

        m2, m4 = law.moment(2), law.moment(4)
        shift = CONTINUUM_SHIFT[style]
        continuum, swapped = cylinder_law(cfg.tau, shift), cylinder_law(cfg.tau, 0.5 - shift)
        c2, c4 = lattice_moments(continuum, (2, 4))
        s2, s4 = lattice_moments(swapped, (2, 4))
        fit, swapped_fit = fit_distance(law, continuum), fit_distance(law, swapped)
        error = max(abs(m2 - c2), abs(m4 - c4))
        row.update(
            matchings=law.count,
            support=" ".join(str(v) for v in law.values),
            offset=float(offset),
            moment2=m2,
            moment4=m4,
            continuum_moment2=c2,
            continuum_moment4=c4,
            moment_error=error,
            swapped_error=max(abs(m2 - s2), abs(m4 - s4)),
            fit_distance=fit,
            swapped_fit_distance=swapped_fit,
            ok=offset == EXPECTED_OFFSET[style] and fit < swapped_fit,
        )
        log_info(f"Gap law {style} k={k}: {law.count} matchings, offset {offset}, error {error:.3g}")
        return row

    def run(self, cfg: ExperimentConfig) -> SuiteReport:
        """
        Run the gap study.

        The verdict requires offset 1/2 for DD and 0 for ND at every k, and a
        continuum law that fits better than the one with the other c0. The
        moment errors and their trend in k are reported.
        """
        report = SuiteReport(AppConstants.SUITE_GAP)
        k_values = cfg.k_values or list(AppConstants.DEFAULT_GAP_K_VALUES)
        cases = [(style, k) for style in self.styles(cfg) for k in k_values]
        rows = self.pool.map(lambda case: self.run_case(case[0], case[1], cfg), cases)
        for row in rows:
            report.add_row(row, row.get("moment_error"), row.get("ok", False))
        report.sort_rows(["style", "k"])

        trends = {}
        for style in self.styles(cfg):
            errors = [r["moment_error"] for r in report.rows if r["style"] == style and "moment_error" in r]
            decreasing = all(b < a for a, b in zip(errors, errors[1:]))
            trends[style] = {"errors": errors, "decreasing": decreasing}
            if not decreasing:
                log_warning(f"Gap moment errors for {style} are not decreasing in k: {errors}")
        report.metadata.update({"tau": cfg.tau, "k_values": k_values, "trend": trends})
        return report
