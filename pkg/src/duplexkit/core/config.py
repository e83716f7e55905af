"""Session configuration and its key/value file format.

The configuration file is plain UTF-8 text, one ``key = value`` pair per
line, keys named exactly after SessionConfig fields. Blank lines and lines
starting with ``#`` are ignored. Absent keys take their defaults.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass

from ..errors import ConfigError


@dataclass(frozen=True)
class SessionConfig:
    """All tunables of one duplex session.

    Durations are milliseconds unless the field name says otherwise.
    """

    asr_cadence_ms: int = 300          # hypothesis poll period
    unit_chunk_ms: int = 100           # audio chunk fed to the unit encoder
    unit_window_ms: int = 1000         # sliding window over chunks
    gap_recovery_max_ms: int = 2000    # cap on recovered units between batches
    unit_rate_hz: int = 25             # speech units per second
    turn_wait_cap_ms: int = 1000       # max wait for an end-of-turn decision
    eot_threshold: float = 0.5         # end-of-turn probability threshold
    silence_initiate_ms: int = 4000    # mutual silence before the bot speaks
    epsilon_ms: int = 50               # chunk scheduling margin
    asr_trim_window_s: int = 10        # audio kept in the recognizer buffer
    unit_vocab_size: int = 1024

    def __post_init__(self):
        if self.unit_chunk_ms <= 0 or self.unit_window_ms <= 0:
            raise ConfigError("unit_chunk_ms and unit_window_ms must be positive")
        if self.unit_window_ms % self.unit_chunk_ms != 0:
            raise ConfigError(
                f"unit_window_ms ({self.unit_window_ms}) must be an integer "
                f"multiple of unit_chunk_ms ({self.unit_chunk_ms})")
        if not 0.0 < self.eot_threshold < 1.0:
            raise ConfigError(
                f"eot_threshold must be in (0, 1), got {self.eot_threshold}")
        if self.epsilon_ms < 0:
            raise ConfigError("epsilon_ms must be >= 0")
        for name in ("asr_cadence_ms", "gap_recovery_max_ms", "turn_wait_cap_ms",
                     "silence_initiate_ms", "asr_trim_window_s"):
            if getattr(self, name) < 0:
                raise ConfigError(f"{name} must be >= 0")
        if self.unit_rate_hz <= 0:
            raise ConfigError("unit_rate_hz must be positive")
        if 1000 % self.unit_rate_hz != 0:
            # keeps all grid timestamps integral milliseconds
            raise ConfigError(
                f"unit_rate_hz must divide 1000, got {self.unit_rate_hz}")
        if self.unit_vocab_size <= 0:
            raise ConfigError("unit_vocab_size must be positive")

    @property
    def unit_t_ms(self) -> int:
        """Duration represented by one speech unit."""
        return 1000 // self.unit_rate_hz

    @property
    def window_chunks(self) -> int:
        """Unit buffer capacity in chunks."""
        return self.unit_window_ms // self.unit_chunk_ms


_FIELDS = {f.name: f for f in dataclasses.fields(SessionConfig)}


def config_from_mapping(mapping: dict) -> SessionConfig:
    """Build a SessionConfig from a key/value mapping; defaults fill gaps."""
    kwargs = {}
    for key, value in mapping.items():
        field = _FIELDS.get(key)
        if field is None:
            raise ConfigError(f"unknown configuration key {key!r}")
        try:
            kwargs[key] = _convert(field, value)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"bad value for {key!r}: {value!r} ({exc})") from exc
    return SessionConfig(**kwargs)


def _convert(field, value):
    target = float if field.name == "eot_threshold" else int
    if isinstance(value, str):
        return target(value.strip())
    if target is int and isinstance(value, float) and not value.is_integer():
        raise ValueError("expected an integer")
    return target(value)


def parse_config_text(text: str) -> SessionConfig:
    """Parse the key/value configuration file format."""
    mapping = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, _, value = line.partition("=")
        mapping[key.strip()] = value.strip()
    return config_from_mapping(mapping)


def load_config(path) -> SessionConfig:
    """Read a configuration file from disk."""
    with open(path, encoding="utf-8") as fh:
        return parse_config_text(fh.read())
