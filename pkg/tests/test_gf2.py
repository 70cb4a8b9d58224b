import numpy as np
import pytest

import gf2


def test_pack_unpack_across_word_boundary():
    bits = np.zeros(70, dtype=bool)
    bits[[0, 5, 63, 64, 69]] = True
    words = gf2.pack_bits(bits)
    assert words.shape == (2,)
    assert words[0] == (1 | 1 << 5 | 1 << 63)
    assert words[1] == (1 | 1 << 5)
    assert np.array_equal(gf2.unpack_bits(words, 70), bits)


def test_n_words():
    assert gf2.n_words(0) == 1
    assert gf2.n_words(64) == 1
    assert gf2.n_words(65) == 2


def test_get_and_set_column():
    words = gf2.pack_bits(np.array([[1, 0, 1], [0, 1, 1]], dtype=bool))
    assert gf2.get_column(words, 0).tolist() == [1, 0]
    gf2.set_column(words, 0, np.array([0, 1]))
    assert gf2.unpack_bits(words, 3).astype(int).tolist() == [[0, 0, 1], [1, 1, 1]]


def test_get_and_set_columns_across_words():
    bits = np.zeros((3, 130), dtype=bool)
    bits[0, [1, 70, 129]] = True
    bits[2, 64] = True
    words = gf2.pack_bits(bits)
    cols = np.array([129, 1, 64, 70])
    assert gf2.get_columns(words, cols).tolist() == [[1, 1, 0, 1], [0, 0, 0, 0], [0, 0, 1, 0]]
    gf2.set_columns(words, cols, np.array([[0, 1, 1, 0], [1, 1, 1, 1], [0, 0, 0, 0]]))
    out = gf2.unpack_bits(words, 130)
    assert np.flatnonzero(out[0]).tolist() == [1, 64]
    assert np.flatnonzero(out[1]).tolist() == [1, 64, 70, 129]
    assert not out[2].any()


@pytest.mark.parametrize("rows, expected", [
    ([[1, 0], [0, 1]], 2),
    ([[1, 1], [1, 1]], 1),
    ([[1, 1, 0], [0, 1, 1], [1, 0, 1]], 2),
    ([[0, 0, 0]], 0),
])
def test_rank_dense(rows, expected):
    assert gf2.rank_dense(np.array(rows)) == expected


def test_rank_matches_numpy_for_random_full_rank(rng):
    # upper unitriangular matrices are invertible over GF(2)
    m = np.triu(rng.integers(0, 2, size=(80, 80)), 1) | np.eye(80, dtype=int)
    perm = rng.permutation(80)
    assert gf2.rank_dense(m[perm]) == 80


def test_popcount_and_parity():
    words = np.array([[0b1011, 0b1]], dtype=np.uint64)
    assert gf2.popcount(words).tolist() == [4]
    assert gf2.parity(words).tolist() == [0]


@pytest.mark.parametrize("p1, p2, expected", [
    ("X", "Z", 3),   # XZ = -iY
    ("Z", "X", 1),   # ZX = iY
    ("X", "X", 0),
    ("XX", "ZZ", 2),  # XX.ZZ = -YY
])
def test_product_log_i(p1, p2, expected):
    def bits(label):
        x = gf2.pack_bits(np.array([[c in "XY" for c in label]]))
        z = gf2.pack_bits(np.array([[c in "ZY" for c in label]]))
        return x, z

    x1, z1 = bits(p1)
    x2, z2 = bits(p2)
    assert int(gf2.product_log_i(x1, z1, x2, z2)[0]) == expected


def test_symplectic_products():
    x = gf2.pack_bits(np.array([[1, 0], [0, 0], [1, 1]], dtype=bool))
    z = gf2.pack_bits(np.array([[0, 0], [1, 1], [0, 0]], dtype=bool))
    op_x = gf2.pack_bits(np.array([0, 0], dtype=bool))
    op_z = gf2.pack_bits(np.array([1, 0], dtype=bool))
    # rows X I, Z Z, X X against Z I
    assert gf2.symplectic_products(x, z, op_x, op_z).tolist() == [1, 0, 1]
