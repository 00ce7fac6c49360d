import argparse
import json
import os
import sys
from typing import Any, Dict, List, Optional, Sequence

import numpy as np
import yaml

from __version__ import __version__
from config.config_loader import graph_from_spec, load_experiment_configs
from constants import AppConstants, FileConstants, LatticeConstants
from models.errors import DimerCffError
from models.experiment import ExperimentConfig, InstanceSpec, SuiteReport
from models.kasteleyn import assemble
from models.lattice_graph import DimerGraph
from models.matchings import enumerate_matchings
from models.torus import CylinderComponents, continuum_u2_grid
from services.cff_law_service import CffLawService
from services.gap_study_service import GapStudyService
from services.kenyon_sweep_service import KenyonSweepService
from services.report_writer import ReportWriter, write_csv
from services.u2_convergence_service import U2ConvergenceService
from services.work_pool import WorkPool
from utils.logging import log_error, log_exception, log_info, log_shutdown, log_startup

SUITE_SERVICES = {
    AppConstants.SUITE_KENYON: KenyonSweepService,
    AppConstants.SUITE_GAP: GapStudyService,
    AppConstants.SUITE_U2: U2ConvergenceService,
    AppConstants.SUITE_CFF_LAW: CffLawService,
}


def run_suite(cfg: ExperimentConfig, pool: WorkPool) -> SuiteReport:
    """Dispatch a suite configuration to its service."""
    service_class = SUITE_SERVICES[cfg.suite]
    if service_class in (KenyonSweepService, GapStudyService):
        return service_class(pool).run(cfg)
    return service_class().run(cfg)


def finish(reports: Sequence[SuiteReport], out_dir: str) -> int:
    """Write every report and print one summary line per suite; 0 iff all passed."""
    writer = ReportWriter(out_dir)
    ok = True
    for report in reports:
        ok = writer.write(report) and ok
        ok = report.passed and ok
        verdict = "PASS" if report.passed else "FAIL"
        print(f"{report.suite}: {verdict} max_error={report.max_error:.3g} rows={len(report.rows)}")
    return 0 if ok else 1


def load_json_argument(value: str) -> Any:
    """Inline JSON, or the contents of a JSON/YAML file when value names one."""
    if os.path.exists(value):
        with open(value, "r") as f:
            return yaml.safe_load(f)
    return json.loads(value)


def graph_from_args(args: argparse.Namespace) -> DimerGraph:
    data = load_json_argument(args.graph)
    return graph_from_spec(InstanceSpec.from_dict(data))


# ------------------------------------------------------------------ commands

def command_run(args: argparse.Namespace) -> int:
    configs = load_experiment_configs(args.config)
    pool = WorkPool()
    reports = []
    for cfg in configs:
        log_info(f"Running suite {cfg.suite} with {len(cfg.instances)} instances")
        reports.append(run_suite(cfg, pool))
    out_dir = args.out or (configs[0].out if configs and configs[0].out else FileConstants.DEFAULT_OUTPUT_DIR)
    return finish(reports, out_dir)


def command_kenyon_verify(args: argparse.Namespace) -> int:
    data = load_json_argument(args.graph)
    instances = data if isinstance(data, list) else [data]
    cfg = ExperimentConfig(
        suite=AppConstants.SUITE_KENYON,
        instances=[InstanceSpec.from_dict(d, i) for i, d in enumerate(instances)],
        seed=args.seed,
        tolerance=args.tolerance,
    )
    return finish([KenyonSweepService().run(cfg)], args.out)


def command_gap_study(args: argparse.Namespace) -> int:
    cfg = ExperimentConfig(suite=AppConstants.SUITE_GAP, k_values=args.k, tau=args.tau, style=args.style)
    return finish([GapStudyService().run(cfg)], args.out)


def command_u2_convergence(args: argparse.Namespace) -> int:
    params: Dict[str, Any] = {}
    if args.segments:
        params["segments"] = json.loads(args.segments)
    cfg = ExperimentConfig(suite=AppConstants.SUITE_U2, k_values=args.k, tau=args.tau, style=args.style,
                           params=params)
    return finish([U2ConvergenceService().run(cfg)], args.out)


def command_cff_law(args: argparse.Namespace) -> int:
    params = load_json_argument(args.law)
    if not isinstance(params, dict):
        log_error("cff-law expects a JSON mapping")
        return 1
    cfg = ExperimentConfig(suite=AppConstants.SUITE_CFF_LAW, tau=float(params.get("tau", args.tau)),
                           params=params)
    return finish([CffLawService().run(cfg)], args.out)


def command_continuum_u2(args: argparse.Namespace) -> int:
    points = [complex(float(x), float(y)) for x, y in json.loads(args.points)]
    c = CylinderComponents(args.tau, args.style)
    rows = [{"re_p": p.real, "im_p": p.imag, "re_q": q.real, "im_q": q.imag, "u2": value}
            for p, q, value in continuum_u2_grid(c, points)]
    write_csv(rows, sys.stdout)
    return 0


def command_det(args: argparse.Namespace) -> int:
    graph = graph_from_args(args)
    ks = assemble(graph)
    log_abs, phase = ks.partition_function()
    write_csv([{"vertices": len(graph.vertices), "edges": len(graph.edges), "log_abs_det": log_abs,
                "abs_det": float(np.exp(log_abs)), "phase_re": phase.real, "phase_im": phase.imag}],
              sys.stdout)
    return 0


def command_edge_probs(args: argparse.Namespace) -> int:
    graph = graph_from_args(args)
    ks = assemble(graph)
    rows = [{"x1": a.x, "y1": a.y, "x2": b.x, "y2": b.y, "probability": ks.edge_probability((a, b))}
            for a, b in graph.sorted_edges]
    write_csv(rows, sys.stdout)
    return 0


def command_enumerate(args: argparse.Namespace) -> int:
    graph = graph_from_args(args)
    count = 0
    for matching in enumerate_matchings(graph, args.limit):
        count += 1
        if args.list:
            edges = sorted(([a.x, a.y], [b.x, b.y]) for a, b in matching.edges)
            print(json.dumps({"matching": count, "edges": edges}))
    print(json.dumps({"count": count}))
    return 0


COMMANDS = {
    AppConstants.CMD_RUN: command_run,
    AppConstants.CMD_KENYON_VERIFY: command_kenyon_verify,
    AppConstants.CMD_GAP_STUDY: command_gap_study,
    AppConstants.CMD_U2_CONVERGENCE: command_u2_convergence,
    AppConstants.CMD_CFF_LAW: command_cff_law,
    AppConstants.CMD_CONTINUUM_U2: command_continuum_u2,
    AppConstants.CMD_DET: command_det,
    AppConstants.CMD_EDGE_PROBS: command_edge_probs,
    AppConstants.CMD_ENUMERATE: command_enumerate,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog=AppConstants.APP_NAME,
                                     description="Dimer heights versus the compactified free field.")
    parser.add_argument("--version", action="version", version=f"{AppConstants.APP_NAME} {__version__}")
    parser.add_argument("--log-level", default="INFO")
    parser.add_argument("--log-target", default="console", choices=["console", "file"])
    parser.add_argument("--log-file", default=FileConstants.LOG_FILENAME)
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser(AppConstants.CMD_RUN, help="Run every suite of a configuration file")
    run.add_argument("config", nargs="?", help="YAML or JSON configuration (default: default_suite.yaml)")
    run.add_argument("--out", help="Output directory")

    def add_out(p: argparse.ArgumentParser) -> None:
        p.add_argument("--out", default=FileConstants.DEFAULT_OUTPUT_DIR, help="Output directory")

    def add_graph(p: argparse.ArgumentParser) -> None:
        p.add_argument("graph", help="Graph spec as inline JSON or a file")

    kenyon = sub.add_parser(AppConstants.CMD_KENYON_VERIFY, help="Check Kenyon moments against enumeration")
    kenyon.add_argument("graph", help="Instance spec (or list of specs) with 'tuples', inline JSON or a file")
    kenyon.add_argument("--seed", type=int, default=0)
    kenyon.add_argument("--tolerance", type=float, default=1e-9)
    add_out(kenyon)

    gap = sub.add_parser(AppConstants.CMD_GAP_STUDY, help="Exact gap laws versus the cylinder law")
    gap.add_argument("--tau", type=float, default=AppConstants.DEFAULT_TAU)
    gap.add_argument("--k", type=int, nargs="+", default=list(AppConstants.DEFAULT_GAP_K_VALUES))
    gap.add_argument("--style", default="both", choices=[LatticeConstants.STYLE_DD, LatticeConstants.STYLE_ND, "both"])
    add_out(gap)

    u2 = sub.add_parser(AppConstants.CMD_U2_CONVERGENCE, help="Segment covariances versus U_2 integrals")
    u2.add_argument("--tau", type=float, default=AppConstants.DEFAULT_TAU)
    u2.add_argument("--k", type=int, nargs="+", default=list(AppConstants.DEFAULT_U2_K_VALUES))
    u2.add_argument("--style", default=AppConstants.DEFAULT_U2_STYLE,
                    choices=[LatticeConstants.STYLE_DD, LatticeConstants.STYLE_ND])
    u2.add_argument("--segments", help="JSON list of two [x, y_from, y_to] segments")
    add_out(u2)

    law = sub.add_parser(AppConstants.CMD_CFF_LAW, help="Twisted moments of a discrete Gaussian law")
    law.add_argument("law", help="JSON mapping with c0, Q | energies | domain, twists, moments")
    law.add_argument("--tau", type=float, default=AppConstants.DEFAULT_TAU)
    add_out(law)

    cont = sub.add_parser(AppConstants.CMD_CONTINUUM_U2, help="U_2 on a point grid as CSV")
    cont.add_argument("points", help="JSON list of [x, y] points in the strip")
    cont.add_argument("--tau", type=float, default=AppConstants.DEFAULT_TAU)
    cont.add_argument("--style", default=AppConstants.DEFAULT_U2_STYLE,
                      choices=[LatticeConstants.STYLE_DD, LatticeConstants.STYLE_ND])

    det = sub.add_parser(AppConstants.CMD_DET, help="log|det K| and det phase as CSV")
    add_graph(det)
    probs = sub.add_parser(AppConstants.CMD_EDGE_PROBS, help="Edge probabilities as CSV")
    add_graph(probs)

    enum = sub.add_parser(AppConstants.CMD_ENUMERATE, help="Count (and list) perfect matchings as JSON lines")
    add_graph(enum)
    enum.add_argument("--limit", type=int, default=LatticeConstants.DEFAULT_ENUMERATION_LIMIT)
    enum.add_argument("--list", action="store_true", help="Emit every matching")
    return parser


def main(argv: Optional[List[str]] = None) -> None:
    """Main application entry point."""
    argv = sys.argv[1:] if argv is None else argv
    args = build_parser().parse_args(argv)
    try:
        log_startup(argv)
    except ValueError as e:
        log_error(str(e))
        sys.exit(2)

    try:
        code = COMMANDS[args.command](args)
    except (DimerCffError, json.JSONDecodeError) as e:
        log_exception(e)
        code = 1
    log_shutdown(code)
    sys.exit(code)


if __name__ == "__main__":
    main()
