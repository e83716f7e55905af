# cython: language_level=3, boundscheck=False, wraparound=False
"""Compiled Levenshtein kernel.

Unit-cost insert/delete/substitute distance over unicode code points,
two-row dynamic programming. This is the hot loop of the evaluation
module; duplexkit.evaluation.distance falls back to a pure-Python twin
when this extension is unavailable.
"""

from libc.stdlib cimport free, malloc


def levenshtein(unicode a, unicode b):
    """Edit distance between two strings (code-point level)."""
    cdef Py_ssize_t la = len(a)
    cdef Py_ssize_t lb = len(b)
    if la == 0:
        return lb
    if lb == 0:
        return la

    cdef Py_ssize_t i, j
    cdef int cost, above, left, diag, best
    cdef Py_UCS4 ca

    # stack buffer for typical short strings, heap beyond
    cdef int stack_row[257]
    cdef int *row
    cdef bint heap_row = lb + 1 > 257
    if heap_row:
        row = <int *> malloc((lb + 1) * sizeof(int))
        if row == NULL:
            raise MemoryError()
    else:
        row = stack_row

    try:
        for j in range(lb + 1):
            row[j] = <int> j
        for i in range(1, la + 1):
            ca = a[i - 1]
            diag = row[0]          # D[i-1][0]
            row[0] = <int> i       # D[i][0]
            for j in range(1, lb + 1):
                above = row[j]     # D[i-1][j]
                cost = 0 if ca == <Py_UCS4> b[j - 1] else 1
                left = row[j - 1]  # D[i][j-1]
                best = diag + cost
                if above + 1 < best:
                    best = above + 1
                if left + 1 < best:
                    best = left + 1
                row[j] = best
                diag = above
        return row[lb]
    finally:
        if heap_row:
            free(row)
