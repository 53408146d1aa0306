"""Slot/symbol-level downlink gNB energy-saving simulator.

Quantifies the energy/throughput trade-off of lean signaling periodicities,
traffic gating and micro/deep radio sleep on a single carrier, and provides a
rule-based orchestrator that selects, configures and guards feature
combinations.
"""

__version__ = "0.1.0"

from .power import EnergyLedger, PowerState, RelativePowerModel, StateTimeline
from .scheduler import GateState, GatingPolicy
from .signaling import SignalingConfig, SignalKind
from .sleep import RuCapability
from .stats import RunResult, SummaryStats, relative_saving, summarize
from .timegrid import SeededRng, TimeGrid
from .traffic import LinkModel, PayloadModel, Session, TrafficProfile

__all__ = [
    "EnergyLedger",
    "GateState",
    "GatingPolicy",
    "LinkModel",
    "PayloadModel",
    "PowerState",
    "RelativePowerModel",
    "RunResult",
    "RuCapability",
    "SeededRng",
    "Session",
    "SignalKind",
    "SignalingConfig",
    "StateTimeline",
    "SummaryStats",
    "TimeGrid",
    "TrafficProfile",
    "relative_saving",
    "summarize",
    "__version__",
]
