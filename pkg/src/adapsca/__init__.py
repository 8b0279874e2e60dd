"""Hybrid SCA/PSO localization for wireless sensor networks.

The swarm kernel runs as a compiled extension when one is built and falls
back to pure Python otherwise; ``adapsca.KERNEL`` names the active one.
"""
__version__ = "0.1.0"

from ._backend import NAME as KERNEL
from .baselines import baseline_localize, dvhop_localize, dvhop_tables, multilaterate
from .errors import (ConfigError, EmptyNeighborhood, InsufficientAnchors, LocalizationError,
                     NoEstimates, NotNeighbors, Unlocalizable)
from .experiments import PRESETS, Scenario, avg_error, compare, run_scenario
from .localization import LocalizationResult, fitness_eq9, init_swarm, localize_all
from .network import CommGraph, Deployment, Node, NodeKind, build_graph, deploy, measure_distance, nearest_anchor
from .swarm import (ADAPTIVE, HALF_AND_HALF, PSO_ONLY, Bounds, ExponentialSelector, FixedSelector,
                    Module, Particle, SwarmParams, inertia_weight, optimize, pso_step, sca_amplitude,
                    sca_step, select_module)
