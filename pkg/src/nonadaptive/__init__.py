"""Non-adaptive static dictionaries and n-wise independent hashing over seeded expanders."""

from .dictionary import Dictionary, Lookup, ProbeTrace, build, build_with_spec
from .errors import (
    BadMagicError,
    BudgetExceededError,
    BuildError,
    ConfigurationError,
    CorruptRecordError,
    NonAdaptiveError,
    ParseError,
    SamplingError,
    TruncatedError,
)
from .expander import (
    ExpanderSpec,
    ExpansionReport,
    TabulatedGraph,
    neighbor_set,
    neighbors,
    sample_verified,
    verify_expansion,
)
from .kwise_hash import HashFunction, WeightSpec, independence_test, new_hash, verify_useful
from .params import ParamReport, ProblemShape, param_report

__version__ = "0.1.0"

__all__ = [
    "Dictionary",
    "Lookup",
    "ProbeTrace",
    "build",
    "build_with_spec",
    "BadMagicError",
    "BudgetExceededError",
    "BuildError",
    "ConfigurationError",
    "CorruptRecordError",
    "NonAdaptiveError",
    "ParseError",
    "SamplingError",
    "TruncatedError",
    "ExpanderSpec",
    "ExpansionReport",
    "TabulatedGraph",
    "neighbor_set",
    "neighbors",
    "sample_verified",
    "verify_expansion",
    "HashFunction",
    "WeightSpec",
    "independence_test",
    "new_hash",
    "verify_useful",
    "ParamReport",
    "ProblemShape",
    "param_report",
]
