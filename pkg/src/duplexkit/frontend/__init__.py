"""Input side of the pipeline: recognizer stabilization, unit extraction,
and time-aligned interleaving."""

from .asr import (
    RESET_CAUSES,
    RESET_COMMAND,
    AsrState,
    asr_ingest,
    asr_reset,
    asr_trim,
    dehallucinate,
    load_patterns,
    new_asr_state,
    word_prefix_len,
)
from .audio import AudioChunk, total_duration_ms
from .interleave import InterleaveState, flush, interleave, weave
from .units import TimedUnit, UnitBuffer, grid_times, new_unit_buffer, unit_push

__all__ = [
    "RESET_CAUSES", "RESET_COMMAND", "AsrState", "asr_ingest", "asr_reset",
    "asr_trim", "dehallucinate", "load_patterns", "new_asr_state",
    "word_prefix_len", "AudioChunk", "total_duration_ms", "InterleaveState",
    "flush", "interleave", "weave", "TimedUnit", "UnitBuffer", "grid_times",
    "new_unit_buffer", "unit_push",
]
