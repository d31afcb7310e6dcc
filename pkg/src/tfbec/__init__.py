"""Two-component condensates in a harmonic trap near the Thomas-Fermi limit."""
from .params import PhysParams, Regime, classify, validate
from .profiles import TFProfile, tf_profile
from .painleve import solve_hastings_mcleod
from .radial import RadialState, solve_coupled
from .glue import build_approx
from .rotation import aux_functions, detect_vortices, solve_rotating_2d
from .harness import RunConfig, reproduce, run_sweep

__all__ = [
    "PhysParams", "Regime", "classify", "validate", "TFProfile", "tf_profile",
    "solve_hastings_mcleod", "RadialState", "solve_coupled", "build_approx",
    "aux_functions", "detect_vortices", "solve_rotating_2d", "RunConfig", "reproduce",
    "run_sweep",
]
