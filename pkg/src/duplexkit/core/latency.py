"""Per-component latency accounting and the end-to-end response-time bound.

The bound models the time between the user's input ending and the first
audio of the reply. Synchronous turn-taking pays every component in
sequence; asynchronous turn-taking overlaps the turn-end wait with
generation and decoding, saving whichever of the two is smaller.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from types import MappingProxyType

from ..errors import MissingSpanError, UnknownComponentError

ASR_INTERLEAVE = "asr_interleave"
LLM_FIRST_TOKEN = "llm_first_token"
DECODER_FIRST_CHUNK = "decoder_first_chunk"
TURN_WAIT = "turn_wait"

COMPONENTS = (ASR_INTERLEAVE, LLM_FIRST_TOKEN, DECODER_FIRST_CHUNK, TURN_WAIT)

SYNCHRONOUS = "synchronous"
ASYNCHRONOUS = "asynchronous"


@dataclass(frozen=True)
class LatencyLedger:
    """Recorded spans, in milliseconds, keyed by component name."""

    spans: MappingProxyType = field(
        default_factory=lambda: MappingProxyType({}))

    def get(self, component: str):
        return self.spans.get(component)


def record_span(ledger: LatencyLedger, component: str, ms: int) -> LatencyLedger:
    """Record (or overwrite) one component's span; spans must be >= 0."""
    if component not in COMPONENTS:
        raise UnknownComponentError(
            f"unknown latency component {component!r}; "
            f"expected one of {COMPONENTS}")
    if ms < 0:
        raise ValueError(f"span must be >= 0, got {ms}")
    updated = dict(ledger.spans)
    updated[component] = ms
    return LatencyLedger(MappingProxyType(updated))


def ledger_from_spans(asr_interleave: int, llm_first_token: int,
                      decoder_first_chunk: int, turn_wait: int) -> LatencyLedger:
    """Convenience constructor with all four spans."""
    ledger = LatencyLedger()
    for name, ms in zip(COMPONENTS, (asr_interleave, llm_first_token,
                                     decoder_first_chunk, turn_wait)):
        ledger = record_span(ledger, name, ms)
    return ledger


def latency_bound(ledger: LatencyLedger, mode: str) -> int:
    """Worst-case response latency for the given turn-taking mode.

    synchronous: sum of all four spans.
    asynchronous: the turn-end wait overlaps generation and decoding, so
    the bound drops by min(turn_wait, llm_first_token + decoder_first_chunk).
    """
    missing = [name for name in COMPONENTS if name not in ledger.spans]
    if missing:
        raise MissingSpanError(missing)
    total = sum(ledger.spans[name] for name in COMPONENTS)
    if mode == SYNCHRONOUS:
        return total
    if mode == ASYNCHRONOUS:
        overlap = min(ledger.spans[TURN_WAIT],
                      ledger.spans[LLM_FIRST_TOKEN] + ledger.spans[DECODER_FIRST_CHUNK])
        return total - overlap
    raise ValueError(f"unknown mode {mode!r}; expected "
                     f"{SYNCHRONOUS!r} or {ASYNCHRONOUS!r}")
