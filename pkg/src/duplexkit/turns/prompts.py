"""System prompt assembly: modality control prefix plus role instruction."""

from __future__ import annotations

from ..core.tokens import Modality

# the interleaved modality is spelled "speech" in prompts
_PROMPT_NAMES = {
    Modality.TEXT: "text",
    Modality.UNIT: "unit",
    Modality.HYBRID: "speech",
}


def modality_prefix(user_mod: Modality, machine_mod: Modality) -> str:
    """The modality control prefix naming both directions."""
    return ("Modality: {User: %s, Machine: %s}"
            % (_PROMPT_NAMES[user_mod], _PROMPT_NAMES[machine_mod]))


def format_system_prompt(user_mod: Modality, machine_mod: Modality,
                         role_instruction: str) -> str:
    """Complete system prompt: modality prefix followed by the role text."""
    if not role_instruction:
        raise ValueError("role instruction must be non-empty")
    return f"{modality_prefix(user_mod, machine_mod)} {role_instruction}"
