"""Distributed energy-efficient power control with finite packet buffers.

Simulator and analysis library for N-transmitter interference networks:
the cross-layer efficiency metric, constant and adaptive arrival-rate
protocols, sequential best-response dynamics to the unique Nash
equilibrium, and price-of-anarchy experiments.
"""

from .channel import ChannelMatrix, sample_rayleigh_channel, sinr, sinr_all, symmetric_gains
from .efficiency import (
    AarProtocol,
    CarProtocol,
    EnergyModel,
    ExpThreshold,
    PacketLength,
    arrival_rate,
    energy_efficiency,
    expected_total_power,
    payoff,
)
from .errors import (
    BoundaryPointError,
    CapabilityError,
    ConfigurationError,
    DomainError,
    EepcError,
    NumericalError,
    ProtocolMismatchError,
)
from .game import (
    GameConfig,
    NEResult,
    SolverParams,
    best_response,
    foc_residual,
    qos_min_power,
    run_dynamics,
    verify_nash,
)
from .queueing import (
    AarSpec,
    QueueParams,
    aar_arrival_rate,
    aar_rate_large_k,
    full_buffer_prob,
    load_ratio,
    loss_large_k,
    packet_loss,
)
from .social import PoaReport, price_of_anarchy, social_optimum
from .experiments import ResultTable, SweepSpec

__version__ = "0.1.0"
