"""Domain token types.

Every stream in the engine is a sequence of Token values: plain text
tokens, discrete speech units, speaker headers delimiting turns, and the
end-of-turn marker. Tokens are immutable values and safe to share.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Union


@dataclass(frozen=True)
class Text:
    """A text token with its surface form and vocabulary id."""

    surface: str
    id: int = 0

    def __post_init__(self):
        if self.id < 0:
            raise ValueError(f"text token id must be non-negative, got {self.id}")


@dataclass(frozen=True)
class Unit:
    """A discrete speech unit (index into the unit vocabulary)."""

    index: int

    def __post_init__(self):
        if self.index < 0:
            raise ValueError(f"unit index must be non-negative, got {self.index}")


@dataclass(frozen=True)
class Header:
    """A speaker marker delimiting turns (and interruption splits)."""

    speaker: str

    def __post_init__(self):
        if not self.speaker:
            raise ValueError("header speaker label must be non-empty")


@dataclass(frozen=True)
class EndOfTurn:
    """The end-of-turn marker token."""


EOT = EndOfTurn()

Token = Union[Text, Unit, Header, EndOfTurn]

SPEAKER_SYSTEM = "system"
SPEAKER_USER = "User"
SPEAKER_MACHINE = "Machine"


class Modality(enum.Enum):
    """Stream content kind: pure text, pure units, or interleaved."""

    TEXT = "text"
    UNIT = "unit"
    HYBRID = "hybrid"

    @classmethod
    def parse(cls, name: str) -> "Modality":
        try:
            return cls(name.strip().lower())
        except ValueError:
            raise ValueError(f"unknown modality {name!r}; expected one of "
                             f"{[m.value for m in cls]}") from None


@dataclass(frozen=True, order=True)
class TimedWord:
    """A transcript word with its time span on the audio timeline, in ms.

    Spans are half-open [start_ms, end_ms).
    """

    surface: str
    start_ms: int
    end_ms: int

    def __post_init__(self):
        if self.start_ms < 0 or self.end_ms < self.start_ms:
            raise ValueError(
                f"invalid word span [{self.start_ms}, {self.end_ms}) for "
                f"{self.surface!r}")


def validate_unit(index: int, unit_vocab_size: int) -> int:
    """Check a unit index against the configured vocabulary size."""
    if not 0 <= index < unit_vocab_size:
        raise ValueError(
            f"unit index {index} outside vocabulary [0, {unit_vocab_size})")
    return index


def token_to_json(tok: Token) -> dict:
    """Encode a token as a JSON-compatible dict (inverse of token_from_json)."""
    if isinstance(tok, Text):
        return {"type": "text", "surface": tok.surface, "id": tok.id}
    if isinstance(tok, Unit):
        return {"type": "unit", "index": tok.index}
    if isinstance(tok, Header):
        return {"type": "header", "speaker": tok.speaker}
    if isinstance(tok, EndOfTurn):
        return {"type": "eot"}
    raise TypeError(f"not a token: {tok!r}")


def token_from_json(obj: dict) -> Token:
    """Decode a token from its JSON dict form."""
    if not isinstance(obj, dict) or "type" not in obj:
        raise ValueError(f"not a token object: {obj!r}")
    kind = obj["type"]
    if kind == "text":
        return Text(obj["surface"], int(obj.get("id", 0)))
    if kind == "unit":
        return Unit(int(obj["index"]))
    if kind == "header":
        return Header(obj["speaker"])
    if kind == "eot":
        return EOT
    raise ValueError(f"unknown token type {kind!r}")


def token_text(tokens) -> str:
    """Concatenated surfaces of the Text tokens in a sequence."""
    return "".join(t.surface for t in tokens if isinstance(t, Text))
