"""Session types with orchestrated compliance and speculative selection."""

from .compliance import (
    FAIL,
    DepthExceeded,
    Fail,
    Ok,
    SynthMode,
    check_compliance,
    is_deterministic,
    oracle_compliant,
    orch_equal,
    synth,
    synth_ud,
)
from .congruence import MalformedRuntime, canonicalize, congruent
from .semantics import (
    Deterministic,
    ErrorClass,
    Redex,
    Replay,
    SeededRandom,
    SemanticsMode,
    StaleRedex,
    Trace,
    apply,
    classify_errors,
    enumerate_redexes,
    run,
)
from .surface import ParseError, parse_module, parse_orch, parse_process, parse_type, pretty
from .syntax import *  # noqa: F401,F403
from .typecheck import ErrorKind, SessionTypeError, is_completed, typecheck, typing_compose

__version__ = "0.1.0"
