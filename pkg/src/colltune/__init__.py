"""pLogP performance models, tuning and simulation for broadcast and scatter."""

__version__ = "0.1.0"

from .models import (
    BroadcastStrategy,
    Operation,
    Prediction,
    ScatterStrategy,
    predict,
    predict_broadcast,
    predict_scatter,
)
from .params import (
    GapTable,
    ParamsError,
    ParamsSyntaxError,
    ParamsValidationError,
    PLogPParams,
    SegmentSpec,
    gap_of,
    load_params,
    save_params,
    segments_for,
    synth_params,
)
from .schedules import (
    Schedule,
    SendEvent,
    build_broadcast_schedule,
    build_scatter_schedule,
    build_schedule,
)
from .simulator import SimResult, simulate, validate_strategy
from .tuner import TuneResult, optimize_segment, select_best, sweep
