"""Twin-resolution phase-shifter hybrid precoding simulator."""

from .channel import (
    ArrayGeometry,
    ChannelRealization,
    PathParams,
    WidebandChannel,
    sample_channel,
    sample_wideband_channel,
    upa_response,
)
from .design import (
    AnalogPrecoder,
    DigitalPrecoder,
    analog_objective,
    compute_column_state,
    design_analog_dynamic,
    design_analog_fixed,
    design_analog_uniform,
    design_digital,
    optimal_fully_digital,
    phi_max,
)
from .gap import GapStep, GapTrace, direct_rate, gap_trace, mu_gap_trace
from .metrics import (
    PowerModel,
    bandwidth_efficiency,
    energy_efficiency,
    mu_sum_rate,
    power_denominator,
)
from .multiuser import (
    InfeasibleBDError,
    MultiUserScene,
    MuPrecoderSet,
    block_diag_baseband,
    design_mu,
    per_user_combiner,
    rate_decomposition,
)
from .shifters import (
    NetworkKind,
    PatternAssignment,
    QuantizerSpec,
    build_fixed_pattern,
    quantize_phase,
)
from .wideband import (
    WidebandDesign,
    WidebandDesignInput,
    analog_average_rate,
    average_covariance,
    covariance_sqrt_factor,
    design_wideband,
    hybrid_average_rate,
    jensen_bound,
    targets_from_channel,
)

__version__ = "0.1.0"
