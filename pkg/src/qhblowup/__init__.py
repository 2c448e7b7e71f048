"""Blow-up analysis of polynomial ODEs by quasi-homogeneous compactification.

The package builds the desingularized vector field at infinity, finds and
classifies invariant sets on the horizon (equilibria and, in the plane,
the horizon itself as a periodic orbit), and integrates divergent
trajectories to estimate blow-up times and rates.
"""
from .compactify import CompactScheme, make_scheme
from . import compactify  # noqa: F401  (module; the map itself is compactify.compactify)
from .desing import GLOBAL, Chart, DesingField, directional_chart, make_desing, quasi_polar_chart
from .errors import (
    ChartDomainError,
    ChartError,
    DomainError,
    HorizonError,
    InputError,
    InsufficientDataError,
    NotACycleError,
    NumericError,
    QHError,
    UnsupportedError,
)
from .flow import (
    BlowUpEstimate,
    IntegrateOptions,
    Target,
    Trajectory,
    estimate_tmax,
    fit_blowup_rate,
    integrate,
    sweep_portrait,
    write_trajectory_csv,
)
from .infinity import (
    HorizonCycle,
    HorizonEquilibrium,
    classify,
    find_horizon_equilibria,
    horizon_cycle_analysis,
    linearize,
    predict_blowup_exponents,
)
from .qhfield import PolyVectorField, check_c1_extension, decompose, detect_signatures, parse_field, validate_signature
from .scenarios import get_scenario, keyfitz_kranzer, lienard, list_scenarios, riccati, two_fluid

__version__ = "0.1.0"

__all__ = [
    "BlowUpEstimate",
    "Chart",
    "ChartDomainError",
    "ChartError",
    "CompactScheme",
    "DesingField",
    "DomainError",
    "GLOBAL",
    "HorizonCycle",
    "HorizonEquilibrium",
    "HorizonError",
    "InputError",
    "InsufficientDataError",
    "IntegrateOptions",
    "NotACycleError",
    "NumericError",
    "PolyVectorField",
    "QHError",
    "Target",
    "Trajectory",
    "UnsupportedError",
    "check_c1_extension",
    "classify",
    "decompose",
    "detect_signatures",
    "directional_chart",
    "estimate_tmax",
    "find_horizon_equilibria",
    "fit_blowup_rate",
    "get_scenario",
    "horizon_cycle_analysis",
    "integrate",
    "keyfitz_kranzer",
    "lienard",
    "linearize",
    "list_scenarios",
    "make_desing",
    "make_scheme",
    "parse_field",
    "predict_blowup_exponents",
    "quasi_polar_chart",
    "riccati",
    "sweep_portrait",
    "two_fluid",
    "validate_signature",
    "write_trajectory_csv",
]
