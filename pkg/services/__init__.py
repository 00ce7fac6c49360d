"""
Services package for the dimer-cff laboratory.
Contains the experiment suites, the report writer and the work pool.
"""

from .kenyon_sweep_service import KenyonSweepService
from .gap_study_service import GapStudyService
from .u2_convergence_service import U2ConvergenceService
from .cff_law_service import CffLawService
from .report_writer import ReportWriter
from .work_pool import WorkPool

__all__ = ['KenyonSweepService', 'GapStudyService', 'U2ConvergenceService', 'CffLawService',
           'ReportWriter', 'WorkPool']
