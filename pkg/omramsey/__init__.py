from .analysis import FitOptions, extract, fit, scan, sweep
from .analytic import (
    analytic_spectrum,
    classic_ramsey,
    fringe_scales,
    gated_ramsey_intensity,
    ramsey_amplitudes,
    steady_omit,
)
from .model import (
    detunings,
    power_to_amplitude,
    single_photon_coupling,
    steady_pump,
    transfer_rate,
)
from .propagator import gated_intensity, propagate_segment, rk_oracle, run_schedule
from .scenario import Scenario, dump_scenario, parse_scenario
from .schedule import compile, first_pulse_gate
from .types import (
    DetuningGrid,
    Detunings,
    FitResult,
    FringeReport,
    GateMode,
    PhysicalParams,
    PulseSchedule,
    PumpState,
    Segment,
    Spectrum,
    SystemState,
    Trace,
)
