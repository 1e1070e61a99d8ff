"""Two-photon polariton dynamics with coupling blockade.

Simulator and analysis toolkit for linearly coupled photonic modes with
long-range (van der Waals) interactions: split-step spectral propagation of
two-photon wavefunctions, frequency-domain transfer for spatially modulated
couplings, eigenstructure analysis, correlation/fidelity observables, and
preconfigured end-to-end scenarios.
"""

from .core import (
    C_VACUUM,
    ConfigurationError,
    CouplingSchedule,
    DerivedScales,
    Grid1D,
    PhysicsParams,
    PulseSpec,
    c6_from_blockade_radius,
    coupling_at,
    coupling_from_rb,
    derived_scales,
    fig4_tanh_schedule,
    gaussian_pulse,
    vdw_potential,
)
from .evolution import (
    SolverError,
    Trajectory,
    TrajectoryPoint,
    TwoPhotonState,
    advect_step,
    dense_oracle_evolve,
    evolve,
    local_step,
)
from .hamiltonians import (
    EIT16_COMPONENTS,
    ModelSpec,
    eit_atomic6_model,
    eit_full16_model,
    eit_photonic4_model,
    generic_co_model,
    generic_counter_model,
    rotating_frame,
    stored_gate_model,
    symmetric3_model,
)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
