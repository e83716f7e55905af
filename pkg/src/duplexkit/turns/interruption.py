"""Single-stream encoding of overlapping speech.

An interrupted turn is compressed into one token stream: the turn is cut
at the interruption point, the interrupting content is spliced in under
the interrupter's header, and the original speaker's header re-opens the
remainder. Given the header positions the encoding is lossless, so a
decoder can recover the exact (prefix, interruption, suffix) partition.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import List, Sequence, Tuple

from ..core.tokens import Header, Token


def _reject_headers(tokens: Sequence[Token], what: str) -> None:
    for tok in tokens:
        if isinstance(tok, Header):
            raise ValueError(f"{what} must not contain header tokens")


def encode_interruption(active_turn: Sequence[Token], split_index: int,
                        interrupter: str, interrupting: Sequence[Token],
                        original_speaker: str) -> List[Token]:
    """Splice an interruption into a turn at ``split_index``.

    Returns ``turn[:i] + [Header(interrupter)] + interrupting +
    [Header(original_speaker)] + turn[i:]``. Splits at 0 and len(turn)
    are legal boundary cases.
    """
    if not 0 <= split_index <= len(active_turn):
        raise ValueError(
            f"split index {split_index} outside [0, {len(active_turn)}]")
    _reject_headers(active_turn, "the active turn")
    _reject_headers(interrupting, "interrupting content")
    return (list(active_turn[:split_index])
            + [Header(interrupter)]
            + list(interrupting)
            + [Header(original_speaker)]
            + list(active_turn[split_index:]))


@dataclass(frozen=True)
class InterruptionSplit:
    """Decoded partition of an interruption-encoded stream."""

    prefix: Tuple[Token, ...]
    interrupter: str
    interrupting: Tuple[Token, ...]
    original_speaker: str
    suffix: Tuple[Token, ...]

    @property
    def active_turn(self) -> Tuple[Token, ...]:
        return self.prefix + self.suffix

    @property
    def split_index(self) -> int:
        return len(self.prefix)


def decode_interruption(tokens: Sequence[Token]) -> InterruptionSplit:
    """Invert encode_interruption using the two header positions."""
    header_positions = [i for i, t in enumerate(tokens)
                        if isinstance(t, Header)]
    if len(header_positions) != 2:
        raise ValueError(
            f"expected exactly 2 headers, found {len(header_positions)}")
    first, second = header_positions
    return InterruptionSplit(
        prefix=tuple(tokens[:first]),
        interrupter=tokens[first].speaker,
        interrupting=tuple(tokens[first + 1:second]),
        original_speaker=tokens[second].speaker,
        suffix=tuple(tokens[second + 1:]),
    )
