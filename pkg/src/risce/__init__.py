"""Channel estimation for RIS-assisted MIMO with grouped reflection training."""

__version__ = "0.1.0"

from .channel import (  # noqa: F401
    Geometry,
    LinearArraySpec,
    PlanarArraySpec,
    draw_channel,
    element_positions,
    near_field_steering,
)
from .estimators import (  # noqa: F401
    Estimate,
    conv_2tce,
    nmse,
    omp_estimate,
    panel_dictionary,
    perturb_channel_estimate,
    piecewise_ls,
)
from .grouping import (  # noqa: F401
    GREEDY_BACKEND,
    brute_force_partition,
    contiguous_partition,
    correlation_weights,
    greedy_partition,
    surrogate_objective,
    worst_condition,
)
from .phase import (  # noqa: F401
    Partition,
    PhaseSchedule,
    build_schedule,
    decouple,
    simulate_pilot_rx,
)
from .sim import (  # noqa: F401
    MethodRecord,
    SimConfig,
    SweepResult,
    run_trial,
    snr_to_noise_var,
    sweep_groups,
    sweep_pilot_overhead,
    sweep_scatterers,
)
