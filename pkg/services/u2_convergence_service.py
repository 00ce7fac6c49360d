"""
U_2 convergence service: discrete height covariances along vertical segments
of C_k versus integrals of the continuum correlation U_2.
"""

from dataclasses import dataclass
from typing import Any, Dict, List, Optional, Sequence, Tuple

from constants import AppConstants, LatticeConstants
from models.errors import ConfigError, DimerCffError
from models.experiment import ConvergenceRow, ExperimentConfig, SuiteReport
from models.height import DualPath, path_moment, vertical_segment
from models.kasteleyn import assemble
from models.lattice_graph import DimerGraph, build_cylinder
from models.torus import CylinderComponents, segment_integral_u2
from utils.logging import log_info, log_timed, log_warning

DEFAULT_SEGMENTS = ((0.25, 0.1, 0.4), (0.75, 0.1, 0.4))
DEFAULT_MIN_BOUNDARY_DISTANCE = 0.05
REFLECTION_TOLERANCE = 1e-9


@dataclass(frozen=True)
class Segment:
    """Vertical segment x, y_from..y_to of the strip [0, 1) x [0, tau / 2]."""
    x: float
    y_from: float
    y_to: float

    @classmethod
    def from_list(cls, value: Sequence[float]) -> "Segment":
        try:
            x, y_from, y_to = (float(v) for v in value)
        except (TypeError, ValueError) as e:
            raise ConfigError(f"Invalid segment {value!r}: expected [x, y_from, y_to]") from e
        if not 0 <= x < 1 or not 0 <= y_from < y_to:
            raise ConfigError(f"Invalid segment {value!r}: need 0 <= x < 1 and 0 <= y_from < y_to")
        return cls(x, y_from, y_to)


@dataclass(frozen=True)
class SnappedSegment:
    """Lattice column and rows of a segment plus its snapped continuum endpoints."""
    column: int
    row_from: int
    row_to: int
    start: complex
    end: complex


def snap(segment: Segment, k: int, graph: DimerGraph) -> SnappedSegment:
    """
    Snap a continuum segment to the horizontal edges (X, y)-(X+1, y) of C_k.

    The dual path crosses at x = (X + 1/2) / 2k from (Y1 - 1/2) / 2k to (Y2 + 1/2) / 2k.
    """
    scale = 2 * k
    column = int(round(scale * segment.x - 0.5)) % scale
    row_from = max(int(round(scale * segment.y_from + 0.5)), graph.y_min)
    row_to = min(int(round(scale * segment.y_to - 0.5)), graph.y_max)
    if row_to < row_from:
        raise ConfigError(f"Segment {segment} is empty on C_{k}")
    start = complex((column + 0.5) / scale, (row_from - 0.5) / scale)
    end = complex((column + 0.5) / scale, (row_to + 0.5) / scale)
    return SnappedSegment(column, row_from, row_to, start, end)


def reflected_column(column: int, k: int) -> int:
    """Image of a crossing column under the lattice reflection x -> -1 - x."""
    return (2 * k - 2 - column) % (2 * k)


class U2ConvergenceService:
    """Service comparing discrete two-segment covariances with U_2 integrals."""

    def __init__(self, nodes: Optional[int] = None):
        """
        Initialize U2ConvergenceService.

        Args:
            nodes: Gauss-Legendre nodes per segment (defaults to the package setting)
        """
        self.nodes = nodes

    @staticmethod
    def segments(cfg: ExperimentConfig) -> List[Segment]:
        raw = cfg.params.get("segments", DEFAULT_SEGMENTS)
        segments = [Segment.from_list(s) for s in raw]
        if len(segments) != 2:
            raise ConfigError(f"U_2 needs exactly two segments, got {len(segments)}")
        for s in segments:
            if s.y_to > cfg.tau / 2.0:
                raise ConfigError(f"Segment {s} leaves the strip of height {cfg.tau / 2.0}")
        return segments

    def continuum_value(self, tau: float, style: str, snapped: Sequence[SnappedSegment]) -> float:
        c = CylinderComponents(tau, style)
        first, second = ((s.start, s.end) for s in snapped)
        if self.nodes is None:
            return segment_integral_u2(c, first, second)
        return segment_integral_u2(c, first, second, self.nodes)

    def run_k(self, k: int, style: str, segments: Sequence[Segment], cfg: ExperimentConfig
              ) -> Tuple[Dict[str, Any], bool]:
        """
        Discrete and continuum covariance at one k.

        Returns:
            Tuple of (row, reflection_ok)
        """
        graph = build_cylinder(k, cfg.tau, style)
        snapped = [snap(s, k, graph) for s in segments]
        ks = assemble(graph)

        def paths(columns: Sequence[int]) -> List[DualPath]:
            return [vertical_segment(graph, col, s.row_from, s.row_to) for col, s in zip(columns, snapped)]

        discrete = path_moment(ks, paths([s.column for s in snapped]))
        mirrored = path_moment(ks, paths([reflected_column(s.column, k) for s in snapped]))
        with log_timed(f"Continuum U2 {style} k={k}"):
            continuum = self.continuum_value(cfg.tau, style, snapped)
        reflection_diff = abs(discrete - mirrored)
        row = ConvergenceRow("U2", k, discrete, continuum).to_dict()
        row.update(style=style,
                   columns=" ".join(str(s.column) for s in snapped),
                   rows=" ".join(f"{s.row_from}-{s.row_to}" for s in snapped),
                   reflected=mirrored,
                   reflection_diff=reflection_diff)
        log_info(f"U_2 {style} k={k}: discrete {discrete:.6g} continuum {continuum:.6g}")
        return row, reflection_diff <= REFLECTION_TOLERANCE

    def run(self, cfg: ExperimentConfig) -> SuiteReport:
        """
        Run the U_2 convergence sweep.

        Passes iff the absolute errors strictly decrease in k and every
        reflected covariance matches its original.
        """
        report = SuiteReport(AppConstants.SUITE_U2)
        k_values = cfg.k_values or list(AppConstants.DEFAULT_U2_K_VALUES)
        style = LatticeConstants.STYLE_ND if cfg.style == "both" else cfg.style
        try:
            segments = self.segments(cfg)
        except ConfigError as e:
            report.add_row({"observable": "U2", "error": str(e)}, ok=False)
            return report

        margin = float(cfg.params.get("min_boundary_distance", DEFAULT_MIN_BOUNDARY_DISTANCE))
        closest = min(min(s.y_from, cfg.tau / 2.0 - s.y_to) for s in segments)
        if closest < margin:
            message = f"Segments come within {closest:.3g} of the boundary (margin {margin})"
            log_warning(message)
            report.warnings.append(message)

        errors = []
        for k in k_values:
            try:
                row, reflection_ok = self.run_k(k, style, segments, cfg)
            except (DimerCffError, ValueError) as e:
                report.add_row({"observable": "U2", "k": k, "style": style, "error": str(e)}, ok=False)
                continue
            errors.append(row["abs_error"])
            report.add_row(row, row["abs_error"], reflection_ok)
            if not reflection_ok:
                report.warnings.append(f"k={k}: reflected covariance differs by {row['reflection_diff']:.3g}")

        decreasing = len(errors) == len(k_values) and all(b < a for a, b in zip(errors, errors[1:]))
        if not decreasing:
            report.passed = False
            report.warnings.append(f"Errors are not strictly decreasing in k: {errors}")

        report.metadata.update({"tau": cfg.tau, "style": style, "k_values": k_values,
                                "segments": [[s.x, s.y_from, s.y_to] for s in segments],
                                "decreasing": decreasing})
        if report.rows and "abs_error" in report.rows[-1]:
            report.metadata["style_gap"] = self.style_gap(cfg.tau, k_values[-1], segments, errors[-1])
        return report

    def style_gap(self, tau: float, k: int, segments: Sequence[Segment], final_error: float) -> Dict[str, Any]:
        """Continuum DD and ND values on the finest grid and whether their difference exceeds the error."""
        values = {}
        for style in (LatticeConstants.STYLE_DD, LatticeConstants.STYLE_ND):
            graph = build_cylinder(k, tau, style)
            values[style] = self.continuum_value(tau, style, [snap(s, k, graph) for s in segments])
        difference = abs(values[LatticeConstants.STYLE_DD] - values[LatticeConstants.STYLE_ND])
        return {"DD": values[LatticeConstants.STYLE_DD], "ND": values[LatticeConstants.STYLE_ND],
                "difference": difference, "distinguishable": difference > final_error}
