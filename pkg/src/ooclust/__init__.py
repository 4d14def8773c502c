"""Discrete-event simulation of object clustering policies in an object database."""

from .config import load_config, parse_config
from .errors import CapacityError, ConfigError, SimulationError, StateError, UnknownObjectError
from .experiment import ExperimentSpec, ResultRow, emit_csv, emit_plots, run_experiment
from .objectgraph import DatabaseSpec, ObjectGraph, generate_database
from .policies import POLICY_NAMES, PolicyConfig
from .simengine import CostModel, EngineConfig, Metrics, StorageConfig, run
from .workload import TransactionKind, WorkloadConfig

__version__ = "0.1.0"
