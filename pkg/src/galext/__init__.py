"""Mass-operator quantum mechanics on a grid: frames, dynamics and checks."""
from .core import (
    Constants,
    ExtendedField,
    MassChannel,
    SGrid,
    SpatialGrid,
    SuperpositionState,
    channels_to_sfield,
    fidelity,
    gaussian_packet,
    norm,
    sfield_to_channels,
    spectral_derivative,
    superposition,
)
from .dynamics import (
    CustomPotential,
    HamiltonianSpec,
    Trajectory,
    UniformField,
    extended_evolve,
    free_gaussian_analytic,
    inverse_s_derivative,
    split_step_evolve,
)
from .frames import (
    Event,
    FrameTransform,
    SignConvention,
    apply_boost,
    bargmann_loop_extended,
    bargmann_loop_galileo,
    transform_event,
)
from .verify import check_ep, check_galilean_covariance, loop_fidelity_scan, pde_residual

__version__ = "0.1.0"
