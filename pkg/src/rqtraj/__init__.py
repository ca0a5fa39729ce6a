"""Relativistic quantum trajectories in one dimension.

Reduced action from two Klein-Gordon solutions, conjugate momentum,
velocity, time-of-flight trajectories, free-particle closed forms and
verification suites.
"""

__version__ = "0.1.0"

from .action import (
    ActionState,
    conjugate_momentum,
    f_function,
    f_sign_audit,
    quantum_coordinate,
    reduced_action,
    rqshje_residual,
    rqshje_residual_scaled,
    schwarzian_of_action,
)
from .analytic import (
    NodeLattice,
    forbidden_trajectory_closed,
    forbidden_velocity_closed,
    free_kinematics_closed,
    free_trajectory_closed,
    mean_velocity,
    node_lattice,
    photon_trajectory_closed,
    quadrature_counterpart,
)
from .dynamics import (
    FlightMap,
    KinematicState,
    Trajectory,
    firqnl_residual,
    firqnl_terms,
    fiqnl_residual,
    kinematics_along,
    time_of_flight,
    trajectory_by_quadrature,
    velocity_from_momentum,
)
from .errors import *  # noqa: F401,F403
from .kleingordon import ExpBasis, NumericBasis, TrigBasis, kg_basis_free_allowed, kg_basis_free_forbidden, kg_basis_numeric
from .model import NATURAL, Microstate, ParticleSpec, Potential, Region, UnitSystem, classify_region
