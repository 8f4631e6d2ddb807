"""Dropout-tolerant coded storage with secure incremental updates."""

from .errors import (RDCDSError, ZeroInverse, SingularMatrix, DivideByZero, ShapeMismatch, InvalidParams, FieldTooSmall, InvalidSecurity, TooManyDropouts, ThresholdViolated, Infeasible, Unbounded, ScenarioInvalid, ConfigError)
from .params import Case, DerivedParams, SystemParams, derive, omega, update_threshold
from .storage import ClusterState, init_cluster, storage_fraction
from .read import plan_read, read_message
from .update import apply_update, encode_increment, plan_update, update_message
from .bounds import (closed_read_bound, closed_update_bound, read_lp_bound,
                     update_lp_bound, solve_lp)
from .sim import Scenario, Event, load_scenario, run_scenario

__version__ = "0.1.0"
