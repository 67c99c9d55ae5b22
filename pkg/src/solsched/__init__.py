"""solsched: on/off scheduling of dynamic electric loads against a solar forecast.

A bank of loads with switched linear on/off dynamics and minimum dwell
times is scheduled by exhaustive receding-horizon optimization so that the
aggregate demand tracks a normalized supply profile.
"""

__version__ = "0.1.0"

from .dynamics import (
    ContinuousDynamics,
    DiscreteDynamics,
    LoadBank,
    LoadSpec,
    make_dynamics,
    simulate_load,
    zoh_discretize,
)
from .enumeration import (
    FAR,
    DecisionGrid,
    LoadSwitchState,
    ScheduleMatrix,
    SwitchSemantics,
    admissible_actions,
    count_schedules,
    count_survey,
    enumerate_schedules,
)
from .horizon import (
    DayRecord,
    PowerProfile,
    RecedingHorizonState,
    ScheduleEvaluation,
    StepDiagnostics,
    TrackingConfig,
    cost,
    optimize_step,
    run_receding,
    tracking_error,
)
from .profiles import (
    ProfileError,
    RawSeries,
    bundled_profile_path,
    normalize_peak,
    parse_csv,
    read_day_record_csv,
    resample,
    write_day_record,
)
from .config import ConfigError, LoadDef, RunConfig, default_config, load_config

__all__ = [
    "ContinuousDynamics",
    "DiscreteDynamics",
    "LoadBank",
    "LoadSpec",
    "make_dynamics",
    "simulate_load",
    "zoh_discretize",
    "FAR",
    "DecisionGrid",
    "LoadSwitchState",
    "ScheduleMatrix",
    "SwitchSemantics",
    "admissible_actions",
    "count_schedules",
    "count_survey",
    "enumerate_schedules",
    "DayRecord",
    "PowerProfile",
    "RecedingHorizonState",
    "ScheduleEvaluation",
    "StepDiagnostics",
    "TrackingConfig",
    "cost",
    "optimize_step",
    "run_receding",
    "tracking_error",
    "ProfileError",
    "RawSeries",
    "bundled_profile_path",
    "normalize_peak",
    "parse_csv",
    "read_day_record_csv",
    "resample",
    "write_day_record",
    "ConfigError",
    "LoadDef",
    "RunConfig",
    "default_config",
    "load_config",
]
