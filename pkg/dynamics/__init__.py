"""Single-electron dynamics package."""

from .specs import (
    DriveNoiseSpec,
    InitialCondition,
    SimOutcome,
    TerminationSpec,
    TickleSpec,
    Trajectory,
)
from .integrator import (
    convergence_probe,
    export_trajectory,
    import_trajectory,
    integrate,
    propagate,
    total_force,
)

__all__ = [
    "DriveNoiseSpec", "InitialCondition", "SimOutcome", "TerminationSpec", "TickleSpec",
    "Trajectory", "convergence_probe", "export_trajectory", "import_trajectory",
    "integrate", "propagate", "total_force",
]
