"""Sampled-data stabilization of single-input affine systems from Lie-bracket certificates."""

from .bench import (CaseFamilySpec, REGISTRY_NAMES, benchmark_system, build_case_system,
                    case_spec, classify_E, verify_case_claims)
from .certificate import (Branch, Certificate, ToleranceMap, check_bounded_growth,
                          check_vanishing, classify_point)
from .generators import (BracketWord, GeneratorId, TupleBudget, enumerate_tuples,
                         instantiate_generator, lambda_word_set)
from .integrator import BlowUp, IntegratorConfig, PiecewiseConstant, Trajectory, integrate
from .parser import ParseError, format_system, parse_system_spec
from .polynomial import PolyField, PolyScalar, apply_to_scalar, lie_bracket
from .simulator import Partition, RunReport, run_closed_loop, verify_report
from .synthesis import (BracketPair, ControlSchedule, SearchPolicy, build_schedule, m_derivative,
                        select_epsilon, sontag_feedback, synthesize_pair)
from .system import System

__version__ = "0.1.0"
