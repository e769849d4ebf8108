"""Certified global stability for mixed-monotone delay difference equations.

The package embeds a scalar recursion whose map is monotone in each argument
(with known signs) into a coupled system on the doubled state space, where a
squeeze between monotone envelopes either certifies a globally attracting
equilibrium or exposes the obstruction: off-diagonal ("pseudo") fixed pairs
of the extension.

Layout:

- :mod:`monoembed.order`      sign patterns and the induced product orders
- :mod:`monoembed.program`    postfix evaluation programs and error codes
- :mod:`monoembed.expr`       expression parser, compiler, pattern inference
- :mod:`monoembed.kernels`    compiled evaluation core with Python fallback
- :mod:`monoembed.embedding`  the coupled extension and pattern checks
- :mod:`monoembed.solver`     fixed-pair enumeration and trapping boxes
- :mod:`monoembed.dynamics`   orbits, squeeze iteration, certification
- :mod:`monoembed.models`     built-in model families and closed forms
- :mod:`monoembed.periodic`   periodically forced systems and cycle search
- :mod:`monoembed.config`     run configuration files
- :mod:`monoembed.cli`        command-line front end
"""

from .config import ConfigError, RunConfig, SweepSpec, load_config, loads_config
from .dynamics import (
    ConvergenceReport,
    DynamicsConfig,
    InvariantViolation,
    Status,
    Verdict,
    VerdictKind,
    certify_global_attractor,
    iterate_orbit,
    squeeze_iterate,
    squeeze_iterate_antitone,
    squeeze_trajectory,
)
from .embedding import (
    Domain,
    EmbeddedMap,
    MapSpec,
    PairedPoint,
    PatternReport,
    PatternViolation,
    Wiring,
    build_wiring,
    corner_pair,
    corner_point,
    verify_pattern,
)
from .expr import (
    AmbiguousMonotonicityError,
    InferenceReport,
    ParseError,
    compile_text,
    infer_pattern,
    parse,
)
from .kernels import BACKEND
from .models import (
    FactsReport,
    RationalAnalysis,
    RationalModel,
    RickerModel,
    rational_analyze,
    rational_certify,
    rational_classify,
    rational_fixed_pairs,
    rational_simple_facts,
    ricker_certify,
    ricker_delay2_margin,
    ricker_local_boundary,
    ricker_pseudo_onset,
    ricker_thresholds,
)
from .order import (
    leq,
    leq_pairs,
    make_pattern,
    pair_pattern,
    pattern_from_text,
    pattern_to_text,
)
from .periodic import (
    CycleRecord,
    PeriodicSystem,
    certify_periodic_attractor,
    find_cycles,
)
from .program import EvaluationError, Program, ProgramBuilder
from .solver import (
    BoxCheck,
    FixedPair,
    SolverConfig,
    TrappingBox,
    enumerate_fixed_pairs,
    find_trapping_box,
    verify_trapping_box,
)

__version__ = "1.0.0"

__all__ = [
    "AmbiguousMonotonicityError",
    "BACKEND",
    "BoxCheck",
    "ConfigError",
    "ConvergenceReport",
    "CycleRecord",
    "Domain",
    "DynamicsConfig",
    "EmbeddedMap",
    "EvaluationError",
    "FactsReport",
    "FixedPair",
    "InferenceReport",
    "InvariantViolation",
    "MapSpec",
    "PairedPoint",
    "ParseError",
    "PatternReport",
    "PatternViolation",
    "PeriodicSystem",
    "Program",
    "ProgramBuilder",
    "RationalAnalysis",
    "RationalModel",
    "RickerModel",
    "RunConfig",
    "SolverConfig",
    "Status",
    "SweepSpec",
    "TrappingBox",
    "Verdict",
    "VerdictKind",
    "Wiring",
    "build_wiring",
    "certify_global_attractor",
    "certify_periodic_attractor",
    "compile_text",
    "corner_pair",
    "corner_point",
    "enumerate_fixed_pairs",
    "find_cycles",
    "find_trapping_box",
    "infer_pattern",
    "iterate_orbit",
    "leq",
    "leq_pairs",
    "load_config",
    "loads_config",
    "make_pattern",
    "pair_pattern",
    "parse",
    "pattern_from_text",
    "pattern_to_text",
    "rational_analyze",
    "rational_certify",
    "rational_classify",
    "rational_fixed_pairs",
    "rational_simple_facts",
    "ricker_certify",
    "ricker_delay2_margin",
    "ricker_local_boundary",
    "ricker_pseudo_onset",
    "ricker_thresholds",
    "squeeze_iterate",
    "squeeze_iterate_antitone",
    "squeeze_trajectory",
    "verify_pattern",
    "verify_trapping_box",
]
