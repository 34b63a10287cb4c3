from .ast import Sort
from .containment import (
    ContainmentBounds,
    ContainmentResult,
    UnsupportedPolicy,
    Verdict,
    check_containment,
    enumerate_containment,
    homomorphism_containment,
    is_conjunctive,
)
from .encoding import DecodeError, decode_router_setup, encode_router_setup
from .model import PathModel, RouterSetup, SoftwareComponent
from .parser import (
    NotARouterPolicy,
    Policy,
    PolicyError,
    PolicySyntaxError,
    SortError,
    UnguardedQuantifier,
    format_policy,
    parse_policy,
)
from .semantics import (
    UnboundConstant,
    eval_path_policy,
    eval_router_policy,
    path_violations,
)
from .versions import DEFAULT_SCHEME, DEFAULT_VERSION, Ordering, Version, compare_versions

__all__ = [
    "Sort",
    "ContainmentBounds",
    "ContainmentResult",
    "UnsupportedPolicy",
    "Verdict",
    "check_containment",
    "enumerate_containment",
    "homomorphism_containment",
    "is_conjunctive",
    "DecodeError",
    "decode_router_setup",
    "encode_router_setup",
    "PathModel",
    "RouterSetup",
    "SoftwareComponent",
    "NotARouterPolicy",
    "Policy",
    "PolicyError",
    "PolicySyntaxError",
    "SortError",
    "UnguardedQuantifier",
    "format_policy",
    "parse_policy",
    "UnboundConstant",
    "eval_path_policy",
    "eval_router_policy",
    "path_violations",
    "DEFAULT_SCHEME",
    "DEFAULT_VERSION",
    "Ordering",
    "Version",
    "compare_versions",
]
