"""Multiscale scan statistics for smooth patterns in noisy tensors."""

from ._mss import (
    DetectionReport,
    Geometry,
    Net,
    PamssResult,
    Pattern,
    RuntimeFault,
    ScanEngine,
    ScanResult,
    ThresholdSpec,
    ValidationError,
    build_net,
    built_in_dictionary,
    decide,
    gen_alt,
    gen_null,
    make_pattern,
    make_theoretical_spec,
    mc_threshold,
    read_tensor,
    refine_net,
    theoretical_threshold,
    v_h,
    write_tensor,
)

__version__ = "0.1.0"

__all__ = [
    "DetectionReport",
    "Geometry",
    "Net",
    "PamssResult",
    "Pattern",
    "RuntimeFault",
    "ScanEngine",
    "ScanResult",
    "ThresholdSpec",
    "ValidationError",
    "build_net",
    "built_in_dictionary",
    "decide",
    "gen_alt",
    "gen_null",
    "make_pattern",
    "make_theoretical_spec",
    "mc_threshold",
    "read_tensor",
    "refine_net",
    "theoretical_threshold",
    "v_h",
    "write_tensor",
]
