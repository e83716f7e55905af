"""Character error rate over a Levenshtein kernel.

The distance kernel is compiled (duplexkit._editdist, Cython) when the
extension built, with a pure-Python twin selected at import otherwise.
``KERNEL`` names the active implementation; benchmarks/bench_distance.py
compares the two.
"""

from __future__ import annotations

import re

from ..errors import DuplexError


def _levenshtein_py(a: str, b: str) -> int:
    """Pure-Python two-row edit distance (unit costs)."""
    la, lb = len(a), len(b)
    if la == 0:
        return lb
    if lb == 0:
        return la
    row = list(range(lb + 1))
    for i in range(1, la + 1):
        ca = a[i - 1]
        diag = row[0]
        row[0] = i
        for j in range(1, lb + 1):
            above = row[j]
            best = diag + (ca != b[j - 1])
            if above + 1 < best:
                best = above + 1
            if row[j - 1] + 1 < best:
                best = row[j - 1] + 1
            row[j] = best
            diag = above
    return row[lb]


try:
    from duplexkit._editdist import levenshtein as _levenshtein_c
    levenshtein = _levenshtein_c
    KERNEL = "compiled"
except ImportError:  # extension not built; pure fallback
    levenshtein = _levenshtein_py
    KERNEL = "pure"

levenshtein_py = _levenshtein_py

_WS = re.compile(r"\s+")


class EmptyReferenceError(DuplexError):
    """CER is undefined for an empty reference."""


def cer(reference: str, hypothesis: str, *, strip_whitespace: bool = True) -> float:
    """Character error rate: edit distance / reference length.

    Whitespace is stripped from both strings by default (suits Mandarin,
    where segmentation whitespace is not content); pass
    strip_whitespace=False to compare verbatim. May exceed 1.0.
    """
    if strip_whitespace:
        reference = _WS.sub("", reference)
        hypothesis = _WS.sub("", hypothesis)
    if not reference:
        raise EmptyReferenceError(
            "character error rate is undefined for an empty reference")
    return levenshtein(reference, hypothesis) / len(reference)
