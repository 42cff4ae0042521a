"""Agent-based simulator of opportunistic supply chains.

Stochastic supplier pricing (geometric Brownian motion), adaptive trust
beliefs, and logistic link activation drive the period-by-period rewiring of
a tripartite supplier/distributor/consumer network, with resilience metrics,
a volatility-survival sweep, an improvement-dynamics stability finder and an
exact Markov-chain analyzer for tiny instances.
"""

from .core import AgentId, Echelon, NetworkState, RngStream, ScenarioConfig
from .engine import SimulationResult, run_replications, run_simulation

__all__ = [
    "AgentId",
    "Echelon",
    "NetworkState",
    "RngStream",
    "ScenarioConfig",
    "SimulationResult",
    "run_replications",
    "run_simulation",
]

__version__ = "0.1.0"
