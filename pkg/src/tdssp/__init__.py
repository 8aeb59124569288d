"""Strong-stability-preserving two-derivative time integrators.

The registry (:func:`lookup`) supplies explicit, implicit, IMEX Runge-Kutta
and IMEX general linear methods; :func:`check_order` verifies their order
conditions, :func:`certify` computes SSP coefficients and :func:`integrate`
runs them on a :class:`SemiDiscreteSystem` while monitoring a convex
functional.
"""

from .ssp_certify import Certificate, Status, certify, closed_form_C, max_r
from .integrators import (
    BlowUpError,
    CallableSystem,
    MonitorReport,
    SemiDiscreteSystem,
    StepHistory,
    integrate,
)
from .kernels import BACKEND
from .order_conditions import OrderReport, check_order
from .problems import AdvectionProblem, RelaxationProblem, RiccatiProblem, SplitRiccatiProblem
from .registry import MethodSpec, lookup, method_names
from .sweep import SweepResult, tv_sweep
from .tableaux import ButcherTD, ImexTDGLM, ImexTDRK, ImplicitNDMethod

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "AdvectionProblem",
    "BlowUpError",
    "ButcherTD",
    "CallableSystem",
    "Certificate",
    "ImexTDGLM",
    "ImexTDRK",
    "ImplicitNDMethod",
    "MethodSpec",
    "MonitorReport",
    "OrderReport",
    "RelaxationProblem",
    "RiccatiProblem",
    "SemiDiscreteSystem",
    "SplitRiccatiProblem",
    "Status",
    "StepHistory",
    "SweepResult",
    "certify",
    "check_order",
    "closed_form_C",
    "integrate",
    "lookup",
    "max_r",
    "method_names",
    "tv_sweep",
]
