"""Power-minimising access point selection for hybrid WiFi/VLC indoor networks."""

from .instance import ArrivalStream, ProblemInstance, build_instance
from .offline import Assignment, Scheme, SolveLimits, solve_p1, solve_p2, solve_p3, solve_scheme
from .online import run_online, verify_potential
from .scenario import Scenario, load_scenario, office_scenario

__all__ = [
    "ArrivalStream", "Assignment", "ProblemInstance", "Scenario", "Scheme", "SolveLimits",
    "build_instance", "load_scenario", "office_scenario", "run_online", "solve_p1",
    "solve_p2", "solve_p3", "solve_scheme", "verify_potential",
]
