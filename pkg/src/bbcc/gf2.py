"""GF(2) linear algebra helpers.

Vectors are plain Python ints used as bitmasks (bit i = coordinate i), which
keeps single-vector operations allocation-free; matrices handed to the rank
routines are numpy uint8 arrays with entries in {0, 1}.
"""

from __future__ import annotations

import numpy as np

WORD_BITS = 64


def words_for(nbits: int) -> int:
    """Number of 64-bit words needed to hold `nbits` bits."""
    return max(1, (nbits + WORD_BITS - 1) // WORD_BITS)


def int_to_words(value: int, nwords: int) -> list[int]:
    mask = (1 << WORD_BITS) - 1
    return [(value >> (WORD_BITS * k)) & mask for k in range(nwords)]


def pack_rows(values: list[int], nwords: int) -> np.ndarray:
    """Pack integer bitmasks into a (len(values), nwords) uint64 array."""
    out = np.empty((len(values), nwords), dtype=np.uint64)
    mask = (1 << WORD_BITS) - 1
    for i, v in enumerate(values):
        for k in range(nwords):
            out[i, k] = (v >> (WORD_BITS * k)) & mask
    return out


def unpack_row(row: np.ndarray) -> int:
    value = 0
    for k in range(row.shape[0]):
        value |= int(row[k]) << (WORD_BITS * k)
    return value


def parity_words(arr: np.ndarray) -> np.ndarray:
    """Parity of the popcount of each row of a (..., nwords) uint64 array."""
    counts = np.bitwise_count(arr)
    return (counts.sum(axis=-1) & 1).astype(np.uint8)


def rank(mat: np.ndarray) -> int:
    """Rank over GF(2) by row elimination.

    Rows are packed into integers so the elimination XORs whole rows at once.
    """
    mat = np.asarray(mat, dtype=np.uint8) & 1
    if mat.size == 0:
        return 0
    ncols = mat.shape[1]
    rows = []
    for r in mat:
        v = 0
        for j in np.nonzero(r)[0]:
            v |= 1 << int(j)
        rows.append(v)
    r = 0
    for col in range(ncols):
        bit = 1 << col
        pivot = next((i for i in range(r, len(rows)) if rows[i] & bit), None)
        if pivot is None:
            continue
        rows[r], rows[pivot] = rows[pivot], rows[r]
        for i in range(len(rows)):
            if i != r and rows[i] & bit:
                rows[i] ^= rows[r]
        r += 1
        if r == len(rows):
            break
    return r


def nullspace(mat: np.ndarray) -> list[int]:
    """Basis of the right nullspace over GF(2), as integer bitmasks.

    Independent of `rank` (column-reduction instead of row-reduction) so the
    two can cross-check each other via rank-nullity.
    """
    mat = np.asarray(mat, dtype=np.uint8) & 1
    nrows, ncols = mat.shape if mat.size else (0, mat.shape[1] if mat.ndim == 2 else 0)
    if ncols == 0:
        return []
    # Columns of [M; I] packed as ints: low nrows bits = matrix column,
    # high bits track the combination of original columns.
    cols = []
    for j in range(ncols):
        v = 0
        for i in range(nrows):
            if mat[i, j]:
                v |= 1 << i
        v |= 1 << (nrows + j)
        cols.append(v)
    body_mask = (1 << nrows) - 1
    r = 0
    for row in range(nrows):
        bit = 1 << row
        pivot = next((j for j in range(r, len(cols)) if cols[j] & bit), None)
        if pivot is None:
            continue
        cols[r], cols[pivot] = cols[pivot], cols[r]
        for j in range(len(cols)):
            if j != r and cols[j] & bit:
                cols[j] ^= cols[r]
        r += 1
    return [c >> nrows for c in cols if (c & body_mask) == 0]
