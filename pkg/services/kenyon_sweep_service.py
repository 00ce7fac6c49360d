"""
Kenyon sweep service: checks determinant moments against exact oracles.
Separates per-instance verification from suite orchestration and output.
"""

import time
from typing import Any, Dict, List, Optional, Tuple

import numpy as np

from config.config_loader import graph_from_spec
from constants import AppConstants, LatticeConstants
from models.errors import DimerCffError, EnumerationLimitError, GraphConstructionError, InconsistencyError
from models.experiment import ExperimentConfig, InstanceSpec, SuiteReport
from models.height import KENYON_SIGN, KenyonMomentRequest, calibrate_kenyon_sign, kenyon_moment
from models.kasteleyn import KasteleynSystem, assemble
from models.lattice_graph import DimerGraph, Edge, VertexId, canonical_edge
from models.matchings import TransferCounter, all_matchings, edge_frequencies, empirical_moment, exact_moment
from services.work_pool import WorkPool
from utils.logging import log_info, log_warning

DEFAULT_ENUMERATION_LIMIT = 200000


class KenyonSweepService:
    """Service comparing kenyon_moment with enumeration (or transfer) moments."""

    def __init__(self, pool: Optional[WorkPool] = None):
        """
        Initialize KenyonSweepService.

        Args:
            pool: Work pool for instances (defaults to the environment-sized pool)
        """
        self.pool = pool or WorkPool()

    def assemble_instance(self, spec: InstanceSpec, graph: DimerGraph) -> KasteleynSystem:
        """Kasteleyn system of an instance, with its configured monodromy and fault injection."""
        overrides = None
        if spec.corrupt_edge is not None:
            a, b = (VertexId(*p) for p in spec.corrupt_edge)
            if canonical_edge(graph, a, b) is None:
                raise GraphConstructionError(f"Corrupted edge {a}-{b} is not in instance {spec.id}")
            overrides = {(a, b): spec.corrupt_factor}
        return assemble(graph, monodromy=spec.monodromy, weight_overrides=overrides)

    def edge_tuples(self, spec: InstanceSpec, graph: DimerGraph, seed: int) -> List[List[Edge]]:
        """Configured tuples followed by seeded random disjoint tuples."""
        tuples: List[List[Edge]] = []
        for raw in spec.tuples:
            edges = []
            for a, b in raw:
                edge = canonical_edge(graph, VertexId(*a), VertexId(*b))
                if edge is None:
                    raise GraphConstructionError(f"Instance {spec.id}: {a}-{b} is not an edge")
                edges.append(edge)
            tuples.append(edges)

        rng = np.random.default_rng(seed)
        candidates = graph.sorted_edges
        for size, count in sorted(spec.random_tuples.items()):
            for _ in range(count):
                for _attempt in range(100):
                    picks = rng.choice(len(candidates), size=size, replace=False)
                    edges = [candidates[i] for i in sorted(picks)]
                    if len({v for e in edges for v in e}) == 2 * size:
                        tuples.append(edges)
                        break
        return tuples

    def _oracle(self, graph: DimerGraph, limit: int):
        """Enumeration when feasible, otherwise the transfer counter."""
        try:
            return "enumeration", all_matchings(graph, limit)
        except EnumerationLimitError as e:
            log_info(f"Enumeration stopped after {e.count} matchings; using transfer counting")
        if graph.width_period > LatticeConstants.MAX_TRANSFER_WIDTH:
            return None, None
        return "transfer", TransferCounter(graph)

    def run_instance(self, spec: InstanceSpec, cfg: ExperimentConfig) -> Tuple[List[Dict[str, Any]], List[str]]:
        """
        Verify one instance.

        Returns:
            Tuple of (rows, warnings); rows carry pass flags and errors
        """
        started = time.time()
        warnings: List[str] = []
        base = {"instance": spec.id, "tolerance": cfg.tolerance}
        try:
            graph = graph_from_spec(spec)
            ks = self.assemble_instance(spec, graph)
        except DimerCffError as e:
            return [dict(base, operation="build", ok=False, error=str(e))], warnings

        limit = int(cfg.params.get("enumeration_limit", DEFAULT_ENUMERATION_LIMIT))
        route, oracle = self._oracle(graph, limit)
        if route is None:
            message = f"Instance {spec.id} skipped: no feasible oracle for {graph.summary()}"
            log_warning(message)
            return [dict(base, operation="skip", ok=True, error=message)], [message]

        rows: List[Dict[str, Any]] = []
        count = len(oracle) if route == "enumeration" else oracle.count()
        determinant = ks.abs_det()
        count_ok = abs(determinant - count) <= max(cfg.tolerance, 1e-9 * count)
        rows.append(dict(base, operation="count", oracle=route, determinant=determinant,
                         enumeration=count, abs_diff=abs(determinant - count), ok=count_ok))

        if route == "enumeration" and count:
            frequencies = edge_frequencies(graph, oracle)
            worst_edge, worst = None, 0.0
            try:
                for edge in graph.sorted_edges:
                    diff = abs(ks.edge_probability(edge) - frequencies[edge])
                    if diff > worst:
                        worst_edge, worst = edge, diff
                rows.append(dict(base, operation="edge_probability", oracle=route, abs_diff=worst,
                                 edge=str(worst_edge), ok=worst <= cfg.tolerance))
            except (InconsistencyError, DimerCffError) as e:
                rows.append(dict(base, operation="edge_probability", oracle=route, ok=False, error=str(e)))

        try:
            tuples = self.edge_tuples(spec, graph, cfg.seed)
        except DimerCffError as e:
            rows.append(dict(base, operation="tuples", ok=False, error=str(e)))
            return rows, warnings
        if not tuples:
            message = f"Instance {spec.id}: no edge tuples, moment check is vacuous"
            log_warning(message)
            warnings.append(message)

        for index, edges in enumerate(tuples):
            row = dict(base, operation="kenyon_moment", oracle=route, tuple_id=index, m=len(edges),
                       edges=" ".join(f"{a}-{b}" for a, b in edges))
            try:
                req = KenyonMomentRequest.from_edges(graph, edges)
                determinant_value = kenyon_moment(ks, req)
                if route == "enumeration":
                    reference = empirical_moment(graph, req.dual_edges, oracle)
                else:
                    reference = exact_moment(graph, req.dual_edges, oracle)
                diff = abs(determinant_value - reference)
                row.update(determinant=determinant_value, enumeration=reference, abs_diff=diff,
                           ok=diff <= cfg.tolerance)
            except DimerCffError as e:
                row.update(ok=False, error=str(e))
            rows.append(row)

        log_info(f"Instance {spec.id}: {graph.summary()}, {len(tuples)} tuples, "
                 f"{time.time() - started:.2f}s")
        return rows, warnings

    def run(self, cfg: ExperimentConfig) -> SuiteReport:
        """
        Run the Kenyon sweep over every configured instance.

        Args:
            cfg: Suite configuration

        Returns:
            SuiteReport; passes iff every count, probability and moment is within tolerance
        """
        report = SuiteReport(AppConstants.SUITE_KENYON)
        calibrated = calibrate_kenyon_sign()
        report.metadata.update({"kenyon_sign": KENYON_SIGN, "calibrated_sign": calibrated,
                                "tolerance": cfg.tolerance, "seed": cfg.seed})
        if calibrated != KENYON_SIGN:
            report.passed = False
            report.warnings.append(f"Calibrated Kenyon sign {calibrated} differs from {KENYON_SIGN}")

        results = self.pool.map(lambda spec: self.run_instance(spec, cfg), cfg.instances)
        for rows, warnings in results:
            report.warnings.extend(warnings)
            for row in rows:
                report.add_row(row, row.get("abs_diff"), row.get("ok", False))
        if not cfg.instances:
            report.warnings.append("Suite has no instances; vacuous pass")
            log_warning("Kenyon sweep has no instances; vacuous pass")
        return report
