"""Three-phase SRF-PLL with a model-free feed-forward frequency estimator."""

from .estimator import (
    EstimatorConfig,
    EstimatorState,
    average_estimate,
    convergence_bound,
    estimator_step,
)
from .metrics import RunTrace, phase_error_metrics, reconstruct_waveform, waveform_rmse
from .pll import (
    PiGains,
    PllState,
    TunerInput,
    open_loop_response,
    phase_margin,
    pll_step,
    steady_state_ramp_error,
    tune_symmetrical_optimum,
)
from .signals import (
    AmplitudeProfile,
    DisturbanceConfig,
    FrequencyProfile,
    Segment,
    ThreePhaseSample,
    generate,
    normalize,
)
from .transforms import DqFrame, abc_to_dq

__version__ = "0.1.0"
