"""Hybrid 802.11p/LTE vehicular network simulator with QoS-aware RAT selection."""
from .core import BFAState, CannotReduce, Phase, QoSProfile, RATKind, bfa_step, beacon_interval
from .drrm import Decision, SchemeKind
from .engine import RunConfig, run, run_replicates
from .metrics import RunMetrics, goodput, mean_latency, pdr

__version__ = "0.1.0"
