"""Deterministic volt/VAR control testbed for a distribution substation.

A Mamdani fuzzy controller closed around a steady-state 66/20 kV
substation model with SCADA-grade telemetry, plus evaluation metrics
and an exhaustive-search baseline comparator.
"""

from .fuzzy import (
    FisDefinition,
    FuzzySet,
    LinguisticVariable,
    MembershipFunction,
    Rule,
    infer,
    validate_fis,
)
from .plant import CapacitorBank, OperatingPoint, TransformerParams, ZipLoad
from .scada import Measurement, NoiseSpec, QuantizationSpec
from .control import ControlAction, ControllerLimits, PeakSchedule
from .metrics import SummaryStats, compare, summarize

__version__ = "0.1.0"

__all__ = [
    "FisDefinition",
    "FuzzySet",
    "LinguisticVariable",
    "MembershipFunction",
    "Rule",
    "infer",
    "validate_fis",
    "CapacitorBank",
    "OperatingPoint",
    "TransformerParams",
    "ZipLoad",
    "Measurement",
    "NoiseSpec",
    "QuantizationSpec",
    "ControlAction",
    "ControllerLimits",
    "PeakSchedule",
    "SummaryStats",
    "compare",
    "summarize",
    "__version__",
]
