"""Monte Carlo study of a licensed network sharing its spectrum with a
denser unlicensed one.

The licensed (primary) network ignores the unlicensed (secondary)
network entirely; the secondary network earns its throughput by
routing around preservation squares, shifting its paths off base
stations, and capping its transmit power.  The package deploys both
networks on the unit square, routes every source-destination pair,
simulates the slotted schedules, and checks each measured load, rate,
outage fraction, and throughput against its closed-form bound.
"""

from .analysis import (
    BoundCheck,
    ScalingFit,
    ThroughputReport,
    TrialResult,
    outage_fraction,
    poisson_tail,
    scaling_sweep,
    simulate_trial,
    verify_bounds,
)
from .deployment import (
    Model,
    NetworkInstance,
    ScalingConfig,
    deploy,
    derive_densities,
    round_half_up,
)
from .geometry import CellGrid, CellIndex, NodeSet, Point, build_grid, substream_seed
from .phy import PhyConstants, rate_constants, schedule_9tdma, tx_power
from .regions import (
    Region,
    RegionKind,
    RegionSet,
    build_avoidance_regions,
    build_preservation_regions,
    cluster_components,
    free_cell_graph,
)
from .routing import (
    Pair,
    RoutePath,
    RouteStatus,
    classify_loads,
    primary_route,
    primary_route_infra,
    secondary_route_adhoc,
    secondary_route_infra,
)

__version__ = "0.1.0"

__all__ = [
    "BoundCheck",
    "CellGrid",
    "CellIndex",
    "Model",
    "NetworkInstance",
    "NodeSet",
    "Pair",
    "PhyConstants",
    "Point",
    "Region",
    "RegionKind",
    "RegionSet",
    "RoutePath",
    "RouteStatus",
    "ScalingConfig",
    "ScalingFit",
    "ThroughputReport",
    "TrialResult",
    "build_avoidance_regions",
    "build_grid",
    "build_preservation_regions",
    "classify_loads",
    "cluster_components",
    "deploy",
    "derive_densities",
    "free_cell_graph",
    "outage_fraction",
    "poisson_tail",
    "primary_route",
    "primary_route_infra",
    "rate_constants",
    "round_half_up",
    "scaling_sweep",
    "schedule_9tdma",
    "secondary_route_adhoc",
    "secondary_route_infra",
    "simulate_trial",
    "substream_seed",
    "tx_power",
    "verify_bounds",
]
