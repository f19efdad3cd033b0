"""Fully and semi-inexact Douglas-Rachford splitting with relative errors.

The package solves ``0 in A(x) + B(x)`` for maximal monotone ``A`` and
``B`` with proximal subproblems solved only approximately, certified by
enlargement parameters and accepted by a relative error test.
"""

from .certify import Certificate, ErrorLedger
from .drsolve import RunResult, SolverConfig, run
from .inner import RefinementSchedule
from .kernels import BACKEND
from .operators import (AffinePD, ExtendedSolution, GradQuadratic, NormalCone,
                        Shifted, SubdiffL1, identity)
from .problems import (ProblemInstance, gen_affine_pair, gen_box_feasibility,
                       gen_lasso)

__version__ = "0.1.0"

__all__ = ["AffinePD", "BACKEND", "Certificate", "ErrorLedger",
           "ExtendedSolution", "GradQuadratic", "NormalCone", "ProblemInstance",
           "RefinementSchedule", "RunResult", "Shifted", "SolverConfig",
           "SubdiffL1", "gen_affine_pair", "gen_box_feasibility", "gen_lasso",
           "identity", "run"]
