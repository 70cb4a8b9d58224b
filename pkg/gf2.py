"""
Packed GF(2) linear algebra for stabilizer tableaus.

Bit vectors are stored little-endian in rows of uint64 words: bit ``i`` of a
vector lives in word ``i >> 6`` at position ``i & 63``. Row operations are
plain word-parallel XORs over numpy arrays.
"""

import numpy as np

WORD_BITS = 64
_ONE = np.uint64(1)


def n_words(n_bits: int) -> int:
    """Number of uint64 words needed to hold ``n_bits`` bits."""
    return max(1, (n_bits + WORD_BITS - 1) // WORD_BITS)


def zeros(n_rows: int, n_bits: int) -> np.ndarray:
    return np.zeros((n_rows, n_words(n_bits)), dtype=np.uint64)


def pack_bits(bits: np.ndarray) -> np.ndarray:
    """Pack a boolean array along its last axis into uint64 words."""
    bits = np.asarray(bits, dtype=bool)
    n_bits = bits.shape[-1]
    width = n_words(n_bits) * WORD_BITS
    padded = np.zeros(bits.shape[:-1] + (width,), dtype=bool)
    padded[..., :n_bits] = bits
    packed = np.packbits(padded, axis=-1, bitorder="little")
    return np.ascontiguousarray(packed).view(np.uint64)


def unpack_bits(words: np.ndarray, n_bits: int) -> np.ndarray:
    """Inverse of :func:`pack_bits`, truncated to ``n_bits`` columns."""
    words = np.ascontiguousarray(words, dtype=np.uint64)
    as_bytes = words.view(np.uint8)
    bits = np.unpackbits(as_bytes, axis=-1, bitorder="little")
    return bits[..., :n_bits].astype(bool)


def get_column(words: np.ndarray, index: int) -> np.ndarray:
    """Bit ``index`` of every row as a uint64 array of 0/1."""
    return (words[:, index >> 6] >> np.uint64(index & 63)) & _ONE


def set_column(words: np.ndarray, index: int, values: np.ndarray) -> None:
    """Overwrite bit ``index`` of every row with ``values`` (0/1)."""
    shift = np.uint64(index & 63)
    w = index >> 6
    cleared = words[:, w] & ~(_ONE << shift)
    words[:, w] = cleared | ((np.asarray(values, dtype=np.uint64) & _ONE) << shift)


def get_columns(words: np.ndarray, indices: np.ndarray) -> np.ndarray:
    """Bits ``indices`` of every row as a (rows, k) uint64 array of 0/1."""
    indices = np.asarray(indices, dtype=np.int64)
    return (words[:, indices >> 6] >> (indices & 63).astype(np.uint64)) & _ONE


def set_columns(words: np.ndarray, indices: np.ndarray, values: np.ndarray) -> None:
    """Overwrite several distinct bit columns at once; ``values`` is (rows, k)."""
    indices = np.asarray(indices, dtype=np.int64)
    values = np.asarray(values, dtype=np.uint64).reshape(words.shape[0], indices.size) & _ONE
    word_of = indices >> 6
    shift = (indices & 63).astype(np.uint64)
    for w in np.unique(word_of):
        sel = word_of == w
        mask = np.bitwise_or.reduce(_ONE << shift[sel])
        payload = np.bitwise_or.reduce(values[:, sel] << shift[sel], axis=1)
        words[:, w] = (words[:, w] & ~mask) | payload


def popcount(words: np.ndarray, axis: int = -1) -> np.ndarray:
    """Number of set bits, summed over ``axis``."""
    return np.bitwise_count(words).sum(axis=axis, dtype=np.int64)


def parity(words: np.ndarray, axis: int = -1) -> np.ndarray:
    return popcount(words, axis=axis) & 1


def symplectic_products(x: np.ndarray, z: np.ndarray,
                        op_x: np.ndarray, op_z: np.ndarray) -> np.ndarray:
    """Symplectic inner product of each row (x, z) with one Pauli (op_x, op_z).

    Returns an int array: 1 where the row anticommutes with the operator.
    """
    return parity((x & op_z) ^ (z & op_x))


def product_log_i(x1: np.ndarray, z1: np.ndarray,
                  x2: np.ndarray, z2: np.ndarray) -> np.ndarray:
    """Power of ``i`` picked up by the Pauli product P1 * P2, ignoring stored signs.

    Works row-wise on (k, W) word arrays and returns a length-k array of
    exponents mod 4. For commuting Hermitian operands the result is 0 or 2.
    """
    x1z2 = x1 & z2
    anti = (x2 & z1) ^ x1z2
    new_x = x1 ^ x2
    new_z = z1 ^ z2
    carry = (new_x ^ new_z ^ x1z2) & anti
    return (popcount(anti) + 2 * popcount(carry)) & 3


def rank(words: np.ndarray, n_bits: int) -> int:
    """GF(2) rank of a packed binary matrix with ``n_bits`` columns."""
    mat = np.array(words, dtype=np.uint64, copy=True)
    n_rows = mat.shape[0]
    row = 0
    for col in range(n_bits):
        if row == n_rows:
            break
        column = get_column(mat[row:], col)
        hits = np.flatnonzero(column)
        if hits.size == 0:
            continue
        pivot = row + int(hits[0])
        if pivot != row:
            mat[[row, pivot]] = mat[[pivot, row]]
        below = row + 1 + np.flatnonzero(get_column(mat[row + 1:], col))
        if below.size:
            mat[below] ^= mat[row]
        row += 1
    return row


def rank_dense(bits: np.ndarray) -> int:
    """GF(2) rank of a dense 0/1 matrix."""
    bits = np.asarray(bits, dtype=bool)
    if bits.size == 0:
        return 0
    return rank(pack_bits(bits), bits.shape[1])
