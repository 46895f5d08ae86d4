"""Trace-Dobrushin contraction toolkit for products of quantum channels."""

from .channels import (
    ChannelError,
    QuantumChannel,
    amplitude_damping,
    bit_swap,
    channel_from_json,
    channel_to_json,
    compose,
    compose_all,
    dephasing_x,
    dephasing_z,
    depolarizing,
    from_kraus,
    identity_channel,
    is_bistochastic,
    is_strictly_positive,
    make_named,
    random_channel,
    replacement_channel,
    unitary_channel,
    werner_holevo_like,
)
from .coefficients import alpha_doeblin, alpha_md
from .cocycle import (
    EnvironmentBase,
    annealed_mean_kappa,
    lyapunov_estimate,
    sample_fiber,
    stationary_state,
)
from .contraction import (
    ContractionReport,
    diamond_witness,
    induced_11_norm,
    kappa_tr,
    kappa_upper_aggregate,
    replacement_distance,
    s0,
)
from .mps import (
    LocalObservable,
    MpsChain,
    correlation_bound_check,
    finite_volume_expectation,
    random_mps_experiment,
    thermodynamic_limit,
)
from .products import ChannelSequence, pullback_boundary, window_kappa, window_product

__version__ = "0.1.0"

__all__ = [
    "ChannelError",
    "ChannelSequence",
    "ContractionReport",
    "EnvironmentBase",
    "LocalObservable",
    "MpsChain",
    "QuantumChannel",
    "alpha_doeblin",
    "alpha_md",
    "amplitude_damping",
    "annealed_mean_kappa",
    "bit_swap",
    "channel_from_json",
    "channel_to_json",
    "compose",
    "compose_all",
    "correlation_bound_check",
    "dephasing_x",
    "dephasing_z",
    "depolarizing",
    "diamond_witness",
    "finite_volume_expectation",
    "from_kraus",
    "identity_channel",
    "induced_11_norm",
    "is_bistochastic",
    "is_strictly_positive",
    "kappa_tr",
    "kappa_upper_aggregate",
    "lyapunov_estimate",
    "make_named",
    "pullback_boundary",
    "random_channel",
    "random_mps_experiment",
    "replacement_channel",
    "replacement_distance",
    "s0",
    "sample_fiber",
    "stationary_state",
    "thermodynamic_limit",
    "unitary_channel",
    "werner_holevo_like",
    "window_kappa",
    "window_product",
]
