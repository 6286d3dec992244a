"""Core functionality package"""
from .spectral_core import Band, SpectralField, XField
from .legendre_basis import BasisSet, build_basis
from .projections import MacroState, macro_project, micro_project, helmholtz_project
from .closure import ClosureConstants, build_closure_constants, build_tensors
from .dynamics import KineticParams, integrate_trajectory, energy_report
from .hydro import NsfState, forcing_terms, nsf_step
from .simulation_manager import SimulationManager
from .limit_study_manager import LimitStudyManager
from .report_manager import ReportManager
