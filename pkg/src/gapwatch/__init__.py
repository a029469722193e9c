"""Platoon simulation with real-time Bayesian monitoring of the car-following time gap."""

from .controller import (ControllerParams, ErrorState, VehicleState, build_state_matrices,
                         check_stability, command_accel, derive_error_state,
                         desired_spacing, step_glvd)
from .estimator import (DEFAULT_PRIOR, GaussianBelief, MeasurementBatch, log_likelihood,
                        posterior_update, sequential_update, windowed_estimate)
from .monitor import (ChartLimits, ChartSpec, TriggerRule, ViolationEvent, check_point,
                      compute_limits, retune, should_trigger)
from .simulator import LeadConfig, SimConfig, SimRecord, init_platoon, run, summarize
from .trajectory import (AccelProfile, LeadTrajectory, integrate_lead, load_accel_profile,
                         synth_oscillation_profile)

__version__ = "0.1.0"
