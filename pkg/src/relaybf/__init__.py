"""Max-min SINR relay beamforming with Alamouti coding.

Builds the SINR/power quadratic forms of one-hop multigroup multicast AF
relay networks (distributed and MIMO), solves the one- and two-variable
max-min SINR semidefinite relaxations, rounds them by Gaussian
randomization, verifies the approximation-analysis tail bounds by Monte
Carlo, and reproduces the simulation sweeps at desk scale.
"""

from .network import (
    ChannelRealization,
    NetworkConfig,
    PrimalUser,
    generate_channels,
    split_stream,
    uniform_config,
)
from .forms import ConstraintForm, UserForms, build_constraints, build_user_forms, sinr_value
from .sdp import SdpConstraint, SdpProblem, SdpResult, solve
from .sdr import BeamformerPair, SdrSolution, feasibility, randomize, solve_r1sdr, solve_r2sdr

__all__ = [
    "BeamformerPair",
    "ChannelRealization",
    "ConstraintForm",
    "NetworkConfig",
    "PrimalUser",
    "SdpConstraint",
    "SdpProblem",
    "SdpResult",
    "SdrSolution",
    "UserForms",
    "build_constraints",
    "build_user_forms",
    "feasibility",
    "generate_channels",
    "randomize",
    "sinr_value",
    "solve",
    "solve_r1sdr",
    "solve_r2sdr",
    "split_stream",
    "uniform_config",
]

__version__ = "0.1.0"
