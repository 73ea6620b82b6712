"""Exact simulation and analysis of entanglement purification for two-colorable graph states."""

from .graphs import (
    Coloring,
    FlipPattern,
    TwoColorableGraph,
    build_graph,
    chain_graph,
    flip_pattern,
    ghz_graph,
    gnk_graph,
    grid_graph,
    steane7_graph,
    two_color,
)
from .protocol import (
    P1,
    P2,
    PurificationFailure,
    StepResult,
    Strategy,
    apply_subprotocol,
    binary_p1_map,
    combine_two_copies,
    hashing_yield,
    parity_readout,
    run_sequence,
)
from .states import (
    Diagnostics,
    LabelDistribution,
    NoiseChannel,
    apply_channel,
    binary_family_state,
    channel_noise_state,
    diagnostics,
    make_state,
    pure_state,
    werner_state,
)

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
