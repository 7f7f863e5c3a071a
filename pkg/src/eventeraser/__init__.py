"""Event-by-event simulation of a single-photon quantum eraser.

Messengers carrying two phase clocks and a polarization vector are routed one
at a time through adaptive beam-splitter units; detector counts reproduce the
interference visibilities of quantum theory, which ``oracle`` computes
exactly.
"""
__version__ = "0.1.0"

from .dlm import DlmState, dlm_init, dlm_update
from .harness import (SweepSpec, compare_report, estimate_visibility, run_mzi_sweep,
                      run_sweep, spec_for_preset, write_outputs)
from .messages import Message, Mixed, PureLinear, SourceSpec, emit_pure
from .network import (EraserSettings, EventDataset, MziSettings, RunConfig,
                      build_bare_mzi, build_eraser, run_events)

__all__ = [
    "DlmState", "dlm_init", "dlm_update", "Message", "Mixed", "PureLinear", "SourceSpec",
    "emit_pure", "EraserSettings", "MziSettings", "RunConfig", "EventDataset",
    "build_eraser", "build_bare_mzi", "run_events", "SweepSpec", "spec_for_preset",
    "run_sweep", "run_mzi_sweep", "estimate_visibility", "compare_report", "write_outputs",
]
