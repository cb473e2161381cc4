"""Language-based decentralized person re-identification in a robot swarm.

Robots observe simulated pedestrians, render short clothing descriptions,
embed them in a shared hashed text space, cluster them into per-robot
identity databases, and reconcile those databases opportunistically when
robots meet. The package is fully deterministic given a config and seed.
"""

from .config import SimConfig, load_config, set_value, apply_overrides
from .errors import (
    ConfigError,
    ContractError,
    EmptyClusterError,
    EmptyDescriptionError,
    ProviderError,
)
from .language import EMBEDDING_DIM, cosine, embed, summarize, tokenize
from .metrics import MetricsReport, compute_report
from .perception import (
    DescriptionNoise,
    DescriptionRecord,
    TrackTable,
    canonical_description,
    describe,
    sample_attributes,
)
from .reid import ClusterDatabase, ExchangeStats, QueryHit, exchange
from .runner import RunArtifact, run_experiment, sweep, sweep_csv
from .vocab import PersonAttributes, parse_description, render_description
from .world import Arena, PersonState, Rect, RobotState, ballistic_step, comm_pairs, segment_blocked, visible_people

__version__ = "0.1.0"

__all__ = [
    "Arena",
    "ClusterDatabase",
    "ConfigError",
    "ContractError",
    "DescriptionNoise",
    "DescriptionRecord",
    "EMBEDDING_DIM",
    "EmptyClusterError",
    "EmptyDescriptionError",
    "ExchangeStats",
    "MetricsReport",
    "PersonAttributes",
    "PersonState",
    "ProviderError",
    "QueryHit",
    "Rect",
    "RobotState",
    "RunArtifact",
    "SimConfig",
    "TrackTable",
    "apply_overrides",
    "ballistic_step",
    "canonical_description",
    "comm_pairs",
    "compute_report",
    "cosine",
    "describe",
    "embed",
    "exchange",
    "load_config",
    "parse_description",
    "render_description",
    "run_experiment",
    "sample_attributes",
    "segment_blocked",
    "set_value",
    "summarize",
    "sweep",
    "sweep_csv",
    "tokenize",
    "visible_people",
]
