"""Rate-energy region of multi-antenna power-splitting receivers."""

__version__ = "0.1.0"

from .model import (  # noqa: E402
    ChannelRealization,
    InvalidParametersError,
    SystemParams,
    constraint_rate,
    energy_with_weights,
    max_energy,
    max_rate,
    multichain_energy,
    optimal_id_combiner,
    rate_with_combiner,
)
from .algorithm import (  # noqa: E402
    AlgoConfig,
    RegionPoint,
    as_region,
    grid_oracle,
    multichain_region,
    solve_single,
    sweep_region,
)

__all__ = [
    "ChannelRealization",
    "SystemParams",
    "InvalidParametersError",
    "rate_with_combiner",
    "optimal_id_combiner",
    "max_rate",
    "constraint_rate",
    "energy_with_weights",
    "max_energy",
    "multichain_energy",
    "AlgoConfig",
    "RegionPoint",
    "solve_single",
    "sweep_region",
    "grid_oracle",
    "as_region",
    "multichain_region",
]
